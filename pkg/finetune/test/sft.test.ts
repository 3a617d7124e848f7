import fs from "fs";
import os from "os";
import path from "path";
import { afterEach, describe, expect, it } from "vitest";

import { readSftFile, validateSftFile } from "../src/sft.js";

const FIXTURE = path.join(__dirname, "fixtures", "sft_export.jsonl");

const tmpFiles: string[] = [];

function tmpFile(content: string): string {
  const file = path.join(os.tmpdir(), `sft-${Math.random().toString(36).slice(2)}.jsonl`);
  fs.writeFileSync(file, content);
  tmpFiles.push(file);
  return file;
}

afterEach(() => {
  for (const file of tmpFiles.splice(0)) {
    fs.rmSync(file, { force: true });
  }
});

describe("validateSftFile", () => {
  it("accepts the committed pipeline export with zero errors", () => {
    const report = validateSftFile(FIXTURE);
    expect(report.count).toBe(5);
    expect(report.errors).toEqual([]);
    expect(report.maxPromptTokens).toBeGreaterThan(0);
    expect(report.maxOutputTokens).toBeGreaterThan(0);
  });

  it("reports a missing output field with its line number", () => {
    const file = tmpFile(
      '{"instruction":"i","input":"x","output":"y"}\n{"instruction":"i","input":"x"}\n',
    );
    const report = validateSftFile(file);
    expect(report.count).toBe(1);
    expect(report.errors).toEqual([{ line: 2, message: 'missing field "output"' }]);
  });

  it("reports empty outputs and malformed JSON", () => {
    const file = tmpFile(
      '{"instruction":"i","input":"x","output":"  "}\nnot json at all\n',
    );
    const report = validateSftFile(file);
    expect(report.errors).toEqual([
      { line: 1, message: 'field "output" is empty' },
      { line: 2, message: "malformed JSON" },
    ]);
  });

  it("counts an empty file as zero records, zero errors", () => {
    const report = validateSftFile(tmpFile(""));
    expect(report).toMatchObject({ count: 0, errors: [] });
  });

  it("throws for a missing file", () => {
    expect(() => validateSftFile("/nonexistent/sft.jsonl")).toThrow(/not found/);
  });
});

describe("readSftFile", () => {
  it("round-trips the committed fixture", () => {
    const records = readSftFile(FIXTURE);
    expect(records).toHaveLength(5);
    for (const record of records) {
      expect(record.output.length).toBeGreaterThan(0);
      expect(record.input).toContain("Key focus");
    }
  });

  it("rejects files with schema errors, naming lines", () => {
    const file = tmpFile('{"instruction":"i","input":"x"}\n');
    expect(() => readSftFile(file)).toThrow(/line 1/);
  });
});
