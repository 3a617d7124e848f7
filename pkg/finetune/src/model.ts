/**
 * Tiny causal bigram language model: a frozen int8-quantized base with
 * a trainable low-rank adapter on the output projection.
 *
 * Base (frozen, quantized per row):
 *   embedding E: vocab x dim      hidden state h_t = E[token_{t-1}]
 *   projection W: vocab x dim     base logits  z_v = W_v . h
 * Adapter (trainable, dense f32):
 *   A: rank x dim, B: vocab x rank, contribution (alpha/rank) * B(Ah),
 *   B starts at zero so step 0 reproduces the base model exactly.
 *
 * Gradients are closed-form for the cross-entropy loss:
 *   g = softmax(z) - onehot(y)
 *   dB = s * g u^T  (u = Ah),   dA = s * (B^T g) h^T
 * and are verified against finite differences in the test suite.
 */

export interface ModelDims {
  vocab: number;
  dim: number;
  rank: number;
  alpha: number;
}

/** Deterministic PRNG (mulberry32) so initialization replays exactly. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussian(rand: () => number): number {
  // Box-Muller; rand() in [0, 1), shift to (0, 1] for the log
  const u = 1 - rand();
  const v = rand();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
}

export interface QuantizedMatrix {
  q: Int8Array; // rows * cols
  scale: Float32Array; // per row
  rows: number;
  cols: number;
}

export function quantizeRows(weights: Float32Array, rows: number, cols: number): QuantizedMatrix {
  const q = new Int8Array(rows * cols);
  const scale = new Float32Array(rows);
  for (let r = 0; r < rows; r++) {
    let maxAbs = 0;
    for (let c = 0; c < cols; c++) {
      maxAbs = Math.max(maxAbs, Math.abs(weights[r * cols + c]));
    }
    const s = maxAbs > 0 ? maxAbs / 127 : 1;
    scale[r] = s;
    for (let c = 0; c < cols; c++) {
      q[r * cols + c] = Math.max(-127, Math.min(127, Math.round(weights[r * cols + c] / s)));
    }
  }
  return { q, scale, rows, cols };
}

export class AdapterModel {
  readonly dims: ModelDims;
  readonly embed: QuantizedMatrix;
  readonly proj: QuantizedMatrix;
  readonly a: Float32Array; // rank x dim
  readonly b: Float32Array; // vocab x rank

  constructor(dims: ModelDims, embed: QuantizedMatrix, proj: QuantizedMatrix) {
    this.dims = dims;
    this.embed = embed;
    this.proj = proj;
    this.a = new Float32Array(dims.rank * dims.dim);
    this.b = new Float32Array(dims.vocab * dims.rank);
  }

  static init(dims: ModelDims, seed: number): AdapterModel {
    const rand = mulberry32(seed);
    const draw = (n: number, std: number) => {
      const w = new Float32Array(n);
      for (let i = 0; i < n; i++) {
        w[i] = gaussian(rand) * std;
      }
      return w;
    };
    const embed = quantizeRows(draw(dims.vocab * dims.dim, 0.5), dims.vocab, dims.dim);
    const proj = quantizeRows(draw(dims.vocab * dims.dim, 0.5), dims.vocab, dims.dim);
    const model = new AdapterModel(dims, embed, proj);
    const aInit = draw(dims.rank * dims.dim, 1 / Math.sqrt(dims.dim));
    model.a.set(aInit);
    // b stays zero: the adapter contributes nothing until trained
    return model;
  }

  get adapterScale(): number {
    return this.dims.alpha / this.dims.rank;
  }

  /** Hidden state: dequantized embedding row of the previous token. */
  hidden(prevToken: number): Float32Array {
    const { dim } = this.dims;
    const h = new Float32Array(dim);
    const s = this.embed.scale[prevToken];
    for (let c = 0; c < dim; c++) {
      h[c] = this.embed.q[prevToken * dim + c] * s;
    }
    return h;
  }

  /** u = A h (rank-sized adapter activation). */
  adapterActivation(h: Float32Array): Float32Array {
    const { rank, dim } = this.dims;
    const u = new Float32Array(rank);
    for (let r = 0; r < rank; r++) {
      let acc = 0;
      for (let c = 0; c < dim; c++) {
        acc += this.a[r * dim + c] * h[c];
      }
      u[r] = acc;
    }
    return u;
  }

  logits(h: Float32Array): Float32Array {
    const { vocab, dim, rank } = this.dims;
    const u = this.adapterActivation(h);
    const s = this.adapterScale;
    const z = new Float32Array(vocab);
    for (let v = 0; v < vocab; v++) {
      let acc = 0;
      const rowScale = this.proj.scale[v];
      for (let c = 0; c < dim; c++) {
        acc += this.proj.q[v * dim + c] * h[c];
      }
      acc *= rowScale;
      for (let r = 0; r < rank; r++) {
        acc += s * this.b[v * rank + r] * u[r];
      }
      z[v] = acc;
    }
    return z;
  }

  /**
   * Cross-entropy at one position; accumulates adapter gradients into
   * gradA/gradB (scaled by `weight`, typically 1/positions-per-batch).
   */
  lossAndGrad(
    prevToken: number,
    target: number,
    gradA: Float32Array,
    gradB: Float32Array,
    weight: number,
  ): number {
    const { vocab, dim, rank } = this.dims;
    const h = this.hidden(prevToken);
    const u = this.adapterActivation(h);
    const z = this.logits(h);

    let maxZ = -Infinity;
    for (let v = 0; v < vocab; v++) {
      maxZ = Math.max(maxZ, z[v]);
    }
    let total = 0;
    for (let v = 0; v < vocab; v++) {
      total += Math.exp(z[v] - maxZ);
    }
    const logProb = z[target] - maxZ - Math.log(total);

    const s = this.adapterScale;
    const bTg = new Float32Array(rank);
    for (let v = 0; v < vocab; v++) {
      const g = Math.exp(z[v] - maxZ) / total - (v === target ? 1 : 0);
      const gw = g * weight * s;
      for (let r = 0; r < rank; r++) {
        gradB[v * rank + r] += gw * u[r];
        bTg[r] += gw * this.b[v * rank + r];
      }
    }
    for (let r = 0; r < rank; r++) {
      for (let c = 0; c < dim; c++) {
        gradA[r * dim + c] += bTg[r] * h[c];
      }
    }
    return -logProb;
  }
}
