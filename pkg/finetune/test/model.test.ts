import { describe, expect, it } from "vitest";

import { AdapterModel, mulberry32, quantizeRows } from "../src/model.js";

const DIMS = { vocab: 12, dim: 6, rank: 3, alpha: 6 };

function freshModel(seed = 7): AdapterModel {
  const model = AdapterModel.init(DIMS, seed);
  // give B mass so both gradient paths are exercised
  const rand = mulberry32(seed + 1);
  for (let i = 0; i < model.b.length; i++) {
    model.b[i] = (rand() - 0.5) * 0.2;
  }
  for (let i = 0; i < model.a.length; i++) {
    model.a[i] += (rand() - 0.5) * 0.1;
  }
  return model;
}

function lossAt(model: AdapterModel, prev: number, target: number): number {
  const z = model.logits(model.hidden(prev));
  let maxZ = -Infinity;
  for (const v of z) maxZ = Math.max(maxZ, v);
  let total = 0;
  for (const v of z) total += Math.exp(v - maxZ);
  return -(z[target] - maxZ - Math.log(total));
}

describe("quantizeRows", () => {
  it("bounds levels to int8 and scales per row", () => {
    const weights = new Float32Array([0.5, -1.0, 0.25, 2.0, 0.0, -2.0]);
    const q = quantizeRows(weights, 2, 3);
    expect(Math.max(...q.q)).toBeLessThanOrEqual(127);
    expect(Math.min(...q.q)).toBeGreaterThanOrEqual(-127);
    // the row maximum dequantizes exactly
    expect(q.q[3] * q.scale[1]).toBeCloseTo(2.0, 6);
  });
});

describe("AdapterModel", () => {
  it("starts with a zero adapter: logits equal the frozen base", () => {
    const model = AdapterModel.init(DIMS, 3);
    const h = model.hidden(5);
    const withAdapter = model.logits(h);
    const u = model.adapterActivation(h);
    expect(model.b.every((x) => x === 0)).toBe(true);
    // contribution of B(Ah) is zero even though u is not
    expect(u.some((x) => x !== 0)).toBe(true);
    const base = new Float32Array(DIMS.vocab);
    for (let v = 0; v < DIMS.vocab; v++) {
      let acc = 0;
      for (let c = 0; c < DIMS.dim; c++) {
        acc += model.proj.q[v * DIMS.dim + c] * h[c];
      }
      base[v] = acc * model.proj.scale[v];
    }
    for (let v = 0; v < DIMS.vocab; v++) {
      expect(withAdapter[v]).toBeCloseTo(base[v], 6);
    }
  });

  it("analytic adapter gradients match central finite differences", () => {
    const model = freshModel();
    const prev = 4;
    const target = 9;
    const gradA = new Float32Array(model.a.length);
    const gradB = new Float32Array(model.b.length);
    model.lossAndGrad(prev, target, gradA, gradB, 1.0);

    const eps = 1e-4;
    const rand = mulberry32(99);
    const spots = (length: number) =>
      Array.from({ length: 10 }, () => Math.floor(rand() * length));

    for (const i of spots(model.a.length)) {
      const saved = model.a[i];
      model.a[i] = saved + eps;
      const up = lossAt(model, prev, target);
      model.a[i] = saved - eps;
      const down = lossAt(model, prev, target);
      model.a[i] = saved;
      expect(gradA[i]).toBeCloseTo((up - down) / (2 * eps), 3);
    }
    for (const i of spots(model.b.length)) {
      const saved = model.b[i];
      model.b[i] = saved + eps;
      const up = lossAt(model, prev, target);
      model.b[i] = saved - eps;
      const down = lossAt(model, prev, target);
      model.b[i] = saved;
      expect(gradB[i]).toBeCloseTo((up - down) / (2 * eps), 3);
    }
  });

  it("loss equals -log softmax at the target", () => {
    const model = freshModel();
    const gradA = new Float32Array(model.a.length);
    const gradB = new Float32Array(model.b.length);
    const loss = model.lossAndGrad(2, 7, gradA, gradB, 1.0);
    expect(loss).toBeCloseTo(lossAt(model, 2, 7), 9);
    expect(loss).toBeGreaterThan(0);
  });

  it("initializes deterministically from the seed", () => {
    const a = AdapterModel.init(DIMS, 42);
    const b = AdapterModel.init(DIMS, 42);
    expect([...a.embed.q]).toEqual([...b.embed.q]);
    expect([...a.a]).toEqual([...b.a]);
    const c = AdapterModel.init(DIMS, 43);
    expect([...c.embed.q]).not.toEqual([...a.embed.q]);
  });
});
