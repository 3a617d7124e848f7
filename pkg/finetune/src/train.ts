/**
 * Adapter training loop: AdamW with decoupled weight decay, global
 * gradient-norm clipping, and loss masked to target positions only.
 */

import fs from "fs";
import path from "path";

import type { TrainConfig } from "./config.js";
import { AdapterModel } from "./model.js";
import { readSftFile, type SftRecord } from "./sft.js";
import { serializeTensors } from "./safetensors.js";
import { BOS, Tokenizer } from "./tokenizer.js";

export interface TrainingSample {
  /** Context tokens: BOS, then instruction + input. */
  promptIds: number[];
  /** Tokens whose prediction contributes to the loss. */
  targetIds: number[];
}

export interface LossLogEntry {
  step: number;
  loss: number;
  gradNorm: number;
  learningRate: number;
}

export interface TrainResult {
  adapterDir: string;
  lossLog: LossLogEntry[];
  vocabSize: number;
  samples: number;
  steps: number;
}

export function buildTrainingSample(
  record: SftRecord,
  tokenizer: Tokenizer,
  maxOutputLength: number,
): TrainingSample {
  const promptIds = [BOS, ...tokenizer.encode(`${record.instruction}\n${record.input}`)];
  const targetIds = tokenizer.encode(record.output).slice(0, maxOutputLength);
  return { promptIds, targetIds };
}

/**
 * (previous-token, predicted-token) pairs, one per target position.
 * The pair count IS the loss mask: prompt positions never appear.
 */
export function lossPositions(sample: TrainingSample): Array<[number, number]> {
  const pairs: Array<[number, number]> = [];
  for (let i = 0; i < sample.targetIds.length; i++) {
    const prev = i === 0 ? sample.promptIds[sample.promptIds.length - 1] : sample.targetIds[i - 1];
    pairs.push([prev, sample.targetIds[i]]);
  }
  return pairs;
}

class AdamW {
  private readonly m: Float32Array;
  private readonly v: Float32Array;
  private t = 0;

  constructor(
    private readonly params: Float32Array,
    private readonly lr: number,
    private readonly weightDecay: number,
    private readonly beta1 = 0.9,
    private readonly beta2 = 0.999,
    private readonly eps = 1e-8,
  ) {
    this.m = new Float32Array(params.length);
    this.v = new Float32Array(params.length);
  }

  step(grad: Float32Array): void {
    this.t += 1;
    const correction1 = 1 - Math.pow(this.beta1, this.t);
    const correction2 = 1 - Math.pow(this.beta2, this.t);
    for (let i = 0; i < this.params.length; i++) {
      this.m[i] = this.beta1 * this.m[i] + (1 - this.beta1) * grad[i];
      this.v[i] = this.beta2 * this.v[i] + (1 - this.beta2) * grad[i] * grad[i];
      const mHat = this.m[i] / correction1;
      const vHat = this.v[i] / correction2;
      this.params[i] -= this.lr * (mHat / (Math.sqrt(vHat) + this.eps) + this.weightDecay * this.params[i]);
    }
  }
}

function clipGlobalNorm(grads: Float32Array[], maxNorm: number): number {
  let sumSq = 0;
  for (const g of grads) {
    for (let i = 0; i < g.length; i++) {
      sumSq += g[i] * g[i];
    }
  }
  const norm = Math.sqrt(sumSq);
  if (norm > maxNorm && norm > 0) {
    const scale = maxNorm / norm;
    for (const g of grads) {
      for (let i = 0; i < g.length; i++) {
        g[i] *= scale;
      }
    }
  }
  return norm;
}

export interface TrainOptions {
  dryRun?: boolean;
  dryRunSamples?: number;
  dryRunSteps?: number;
}

export function train(config: TrainConfig, options: TrainOptions = {}): TrainResult {
  const records = readSftFile(config.sftPath);
  if (records.length === 0) {
    throw new Error(`no training records in ${config.sftPath}`);
  }
  const tokenizer = Tokenizer.fromCorpus(
    records.flatMap((r) => [`${r.instruction}\n${r.input}`, r.output]),
    config.maxVocab,
  );
  let samples = records.map((r) => buildTrainingSample(r, tokenizer, config.maxOutputLength));
  samples = samples.filter((s) => s.targetIds.length > 0);

  let steps = config.epochs * Math.ceil(samples.length / config.batchSize);
  if (options.dryRun) {
    samples = samples.slice(0, options.dryRunSamples ?? 4);
    steps = options.dryRunSteps ?? 2;
  }

  const model = AdapterModel.init(
    {
      vocab: tokenizer.vocabSize,
      dim: config.embedDim,
      rank: config.adapterRank,
      alpha: config.adapterAlpha,
    },
    config.seed,
  );

  const optA = new AdamW(model.a, config.learningRate, config.weightDecay);
  const optB = new AdamW(model.b, config.learningRate, config.weightDecay);
  const gradA = new Float32Array(model.a.length);
  const gradB = new Float32Array(model.b.length);

  const lossLog: LossLogEntry[] = [];
  let cursor = 0;
  for (let step = 1; step <= steps; step++) {
    const batch: TrainingSample[] = [];
    for (let i = 0; i < Math.min(config.batchSize, samples.length); i++) {
      batch.push(samples[cursor % samples.length]);
      cursor += 1;
    }
    const positions = batch.flatMap(lossPositions);
    gradA.fill(0);
    gradB.fill(0);
    let lossSum = 0;
    for (const [prev, target] of positions) {
      lossSum += model.lossAndGrad(prev, target, gradA, gradB, 1 / positions.length);
    }
    const gradNorm = clipGlobalNorm([gradA, gradB], config.gradClipNorm);
    optA.step(gradA);
    optB.step(gradB);
    lossLog.push({
      step,
      loss: lossSum / positions.length,
      gradNorm,
      learningRate: config.learningRate,
    });
  }

  const adapterDir = writeAdapter(config, model, tokenizer, lossLog);
  return {
    adapterDir,
    lossLog,
    vocabSize: tokenizer.vocabSize,
    samples: samples.length,
    steps,
  };
}

function writeAdapter(
  config: TrainConfig,
  model: AdapterModel,
  tokenizer: Tokenizer,
  lossLog: LossLogEntry[],
): string {
  const dir = config.outputDir;
  fs.mkdirSync(dir, { recursive: true });

  const adapterConfig = {
    base_model_name_or_path: config.baseModelId,
    peft_type: "LORA",
    r: config.adapterRank,
    lora_alpha: config.adapterAlpha,
    target_modules: ["output_projection"],
    quantization_bits: config.quantBits,
    vocab_size: tokenizer.vocabSize,
    embed_dim: config.embedDim,
    seed: config.seed,
  };
  fs.writeFileSync(
    path.join(dir, "adapter_config.json"),
    JSON.stringify(adapterConfig, null, 2) + "\n",
  );
  fs.writeFileSync(
    path.join(dir, "adapter_model.safetensors"),
    serializeTensors([
      { name: "lora_A.weight", shape: [config.adapterRank, config.embedDim], data: model.a },
      { name: "lora_B.weight", shape: [tokenizer.vocabSize, config.adapterRank], data: model.b },
    ]),
  );
  fs.writeFileSync(
    path.join(dir, "vocab.json"),
    JSON.stringify(tokenizer.toJSON()) + "\n",
  );
  fs.writeFileSync(
    path.join(dir, "loss_log.jsonl"),
    lossLog
      .map((entry) =>
        JSON.stringify({
          step: entry.step,
          loss: entry.loss,
          grad_norm: entry.gradNorm,
          learning_rate: entry.learningRate,
        }),
      )
      .join("\n") + "\n",
  );
  return dir;
}
