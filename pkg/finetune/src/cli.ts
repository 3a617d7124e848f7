#!/usr/bin/env node
/**
 * Training runner CLI.
 *
 *   focusmed-finetune train --config <path> [--dry-run]
 *   focusmed-finetune validate --sft <path>
 *
 * `validate` checks an instruction/input/output file against the SFT
 * schema; `train` fits the low-rank adapter and writes the adapter
 * directory plus loss_log.jsonl. `--dry-run` trains 2 steps on 4
 * samples, enough to exercise the whole contract on any CPU.
 */

import { pathToFileURL } from "url";

import { ConfigError, loadConfig } from "./config.js";
import { validateSftFile } from "./sft.js";
import { train } from "./train.js";

function argValue(argv: string[], name: string): string | undefined {
  const index = argv.indexOf(`--${name}`);
  return index === -1 ? undefined : argv[index + 1];
}

function usage(): void {
  console.error("usage: focusmed-finetune train --config <path> [--dry-run]");
  console.error("       focusmed-finetune validate --sft <path>");
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "train") {
      const configPath = argValue(rest, "config");
      if (!configPath) {
        usage();
        return 1;
      }
      const config = loadConfig(configPath);
      const dryRun = rest.includes("--dry-run");
      const result = train(config, { dryRun });
      const last = result.lossLog[result.lossLog.length - 1];
      console.log(
        `trained ${result.steps} step(s) on ${result.samples} sample(s), ` +
          `vocab ${result.vocabSize}; final loss ${last.loss.toFixed(4)}`,
      );
      console.log(`adapter written to ${result.adapterDir}`);
      return 0;
    }
    if (command === "validate") {
      const sftPath = argValue(rest, "sft");
      if (!sftPath) {
        usage();
        return 1;
      }
      const report = validateSftFile(sftPath);
      console.log(
        `${report.count} record(s); max prompt tokens ${report.maxPromptTokens}, ` +
          `max output tokens ${report.maxOutputTokens}; ${report.errors.length} schema error(s)`,
      );
      for (const error of report.errors) {
        console.error(`  line ${error.line}: ${error.message}`);
      }
      return report.errors.length === 0 ? 0 : 2;
    }
    usage();
    return 1;
  } catch (e) {
    if (e instanceof ConfigError) {
      console.error(`config error: ${e.message}`);
      return 1;
    }
    console.error(`error: ${e instanceof Error ? e.message : e}`);
    return 2;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
