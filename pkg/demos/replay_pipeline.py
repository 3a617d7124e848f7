#!/usr/bin/env python3
"""Run the whole pipeline offline against the bundled replay fixtures.

build-dataset -> export-sft -> select -> rouge, entirely from recorded
model responses: no network, deterministic byte-for-byte.
"""

import json
import sys
import tempfile
from pathlib import Path

from focusmed import cli

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "e2e"


def main() -> int:
    data = str(FIXTURES / "data.jsonl")
    cache = str(FIXTURES / "cache")
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        steps = [
            ["--backend", "replay", "--cache-dir", cache, "build-dataset",
             "--data", data, "--out", str(out / "enhanced.jsonl")],
            ["export-sft", "--input", str(out / "enhanced.jsonl"),
             "--out", str(out / "sft.jsonl")],
            ["--backend", "replay", "--cache-dir", cache, "select", "--data", data,
             "--candidates", str(FIXTURES / "candidates"), "--preset", "mediqa",
             "--out", str(out / "selected.jsonl")],
            ["rouge", "--data", data, "--predictions", str(out / "selected.jsonl"),
             "--out", str(out / "rouge.json")],
        ]
        for step in steps:
            print(f"\n$ focusmed {' '.join(step)}")
            code = cli.main(step)
            if code != 0:
                return code

        print("\nchosen summaries:")
        with (out / "selected.jsonl").open(encoding="utf-8") as f:
            for line in f:
                row = json.loads(line)
                print(f"  {row['id']}: {row['chosen']!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
