/**
 * Training configuration: hyperparameter defaults plus adapter and
 * quantization settings. Everything loads from a JSON file; the SFT
 * path and output directory are the only required fields.
 */

import fs from "fs";

export interface TrainConfig {
  baseModelId: string;
  sftPath: string;
  outputDir: string;
  epochs: number;
  learningRate: number;
  batchSize: number;
  weightDecay: number;
  maxOutputLength: number;
  gradClipNorm: number;
  adapterRank: number;
  adapterAlpha: number;
  quantBits: 8;
  embedDim: number;
  maxVocab: number;
  seed: number;
}

export const DEFAULTS = {
  baseModelId: "tiny-bigram-32d",
  epochs: 10,
  learningRate: 1e-4,
  batchSize: 4,
  weightDecay: 0.01,
  maxOutputLength: 512,
  gradClipNorm: 0.3,
  adapterRank: 8,
  adapterAlpha: 16,
  quantBits: 8,
  embedDim: 32,
  maxVocab: 8192,
  seed: 1234,
} as const;

export class ConfigError extends Error {}

export function loadConfig(path: string): TrainConfig {
  if (!fs.existsSync(path)) {
    throw new ConfigError(`config file not found: ${path}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(path, "utf-8"));
  } catch (e) {
    throw new ConfigError(`config file ${path} is not valid JSON: ${e}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ConfigError(`config file ${path} must hold a JSON object`);
  }
  return resolveConfig(raw as Record<string, unknown>);
}

export function resolveConfig(raw: Record<string, unknown>): TrainConfig {
  const known = new Set([...Object.keys(DEFAULTS), "sftPath", "outputDir"]);
  const unknown = Object.keys(raw).filter((k) => !known.has(k));
  if (unknown.length > 0) {
    throw new ConfigError(`unknown config keys: ${unknown.join(", ")}`);
  }
  if (typeof raw.sftPath !== "string" || raw.sftPath.length === 0) {
    throw new ConfigError("config requires sftPath");
  }
  if (typeof raw.outputDir !== "string" || raw.outputDir.length === 0) {
    throw new ConfigError("config requires outputDir");
  }
  const config: TrainConfig = {
    ...DEFAULTS,
    ...(raw as Partial<TrainConfig>),
    sftPath: raw.sftPath,
    outputDir: raw.outputDir,
  };
  const positive: Array<keyof TrainConfig> = [
    "epochs",
    "learningRate",
    "batchSize",
    "weightDecay",
    "maxOutputLength",
    "gradClipNorm",
    "adapterRank",
    "adapterAlpha",
    "embedDim",
    "maxVocab",
  ];
  for (const key of positive) {
    const value = config[key];
    if (typeof value !== "number" || !(value > 0)) {
      throw new ConfigError(`config field ${key} must be a positive number, got ${value}`);
    }
  }
  if (config.quantBits !== 8) {
    throw new ConfigError("only 8-bit base quantization is supported");
  }
  return config;
}
