/**
 * Reading and validating instruction/input/output training files.
 *
 * The wire format is the summarization pipeline's SFT export: UTF-8
 * JSONL, one {"instruction", "input", "output"} object per line, with
 * a non-empty output.
 */

import fs from "fs";

import { tokenizeText } from "./tokenizer.js";

export interface SftRecord {
  instruction: string;
  input: string;
  output: string;
}

export interface SchemaError {
  line: number;
  message: string;
}

export interface SftReport {
  count: number;
  maxPromptTokens: number;
  maxOutputTokens: number;
  errors: SchemaError[];
}

function checkLine(raw: unknown): string | null {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return "line is not a JSON object";
  }
  const record = raw as Record<string, unknown>;
  for (const field of ["instruction", "input", "output"] as const) {
    if (!(field in record)) {
      return `missing field "${field}"`;
    }
    if (typeof record[field] !== "string") {
      return `field "${field}" is not a string`;
    }
  }
  if ((record.output as string).trim().length === 0) {
    return 'field "output" is empty';
  }
  return null;
}

/**
 * Check every line against the SFT schema. Never throws on bad
 * content: schema problems land in the report with their line number.
 */
export function validateSftFile(path: string): SftReport {
  if (!fs.existsSync(path)) {
    throw new Error(`SFT file not found: ${path}`);
  }
  const report: SftReport = {
    count: 0,
    maxPromptTokens: 0,
    maxOutputTokens: 0,
    errors: [],
  };
  const lines = fs.readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, index) => {
    if (line.trim().length === 0) {
      return;
    }
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch {
      report.errors.push({ line: index + 1, message: "malformed JSON" });
      return;
    }
    const problem = checkLine(raw);
    if (problem !== null) {
      report.errors.push({ line: index + 1, message: problem });
      return;
    }
    const record = raw as unknown as SftRecord;
    report.count += 1;
    const promptTokens = tokenizeText(`${record.instruction}\n${record.input}`).length;
    const outputTokens = tokenizeText(record.output).length;
    report.maxPromptTokens = Math.max(report.maxPromptTokens, promptTokens);
    report.maxOutputTokens = Math.max(report.maxOutputTokens, outputTokens);
  });
  return report;
}

/** Load a fully valid SFT file; throws listing line numbers otherwise. */
export function readSftFile(path: string): SftRecord[] {
  const report = validateSftFile(path);
  if (report.errors.length > 0) {
    const where = report.errors
      .slice(0, 5)
      .map((e) => `line ${e.line}: ${e.message}`)
      .join("; ");
    throw new Error(`${path} has ${report.errors.length} schema error(s): ${where}`);
  }
  const records: SftRecord[] = [];
  for (const line of fs.readFileSync(path, "utf-8").split("\n")) {
    if (line.trim().length === 0) {
      continue;
    }
    records.push(JSON.parse(line) as SftRecord);
  }
  return records;
}
