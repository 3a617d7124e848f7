"""Command-line entry point for the summarization pipeline.

One binary, subcommand per stage. A JSON config file supplies defaults;
flags override it. Exit codes: 0 success, 1 usage/config error, 2 data
error, 3 gateway error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from . import evaluate, focus, rouge
from .corpus import dataset_stats, get_schema, load_dataset, read_jsonl, write_records
from .errors import ConfigError, DataError, FocusmedError, GatewayError
from .evaluate import (
    CandidateSummary,
    DevRecord,
    EvalConfig,
    ScoredCandidate,
    WeightTriple,
    grid_search_weights,
    select_best,
)
from .focus import FocusConfig, build_enhanced_dataset, export_sft, load_enhanced
from .gateway import ChatRequest, Gateway, GatewayEmbedder, HttpBackend, record_fixtures
from .textgraph import TextRankParams

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_GATEWAY = 3


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative run settings; every field has a workable default."""

    data: str | None = None
    schema: str = "default"
    output_dir: str = "out"
    backend: str = "replay"
    base_url: str | None = None
    cache_dir: str = ".focusmed_cache"
    extractor_model: str = "extractor"
    judge_model: str = "deepseek-r1"
    embed_model: str = "embed-default"
    max_attempts: int = 3
    tau: float = 0.85
    max_retries: int = 3
    similarity_mode: str = "lexical"
    aggregation: str = "max"
    textrank: TextRankParams = field(default_factory=TextRankParams)
    max_phrase_len: int = 4
    weights: tuple[float, float, float] | None = None
    weights_preset: str | None = None
    grid_step: float = 0.1
    objective: str = "rougeL"
    sft_instruction: str = focus.DEFAULT_SFT_INSTRUCTION
    jobs: int = 1

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {p} is not valid JSON: {e.msg}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "textrank" in raw:
            raw["textrank"] = TextRankParams(**raw["textrank"])
        if "weights" in raw and raw["weights"] is not None:
            raw["weights"] = tuple(raw["weights"])
        try:
            config = cls(**raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad config value: {e}") from e
        if config.data is not None and not Path(config.data).exists():
            raise ConfigError(f"configured data path does not exist: {config.data}")
        return config

    def resolve_weights(self) -> WeightTriple:
        if self.weights is not None:
            try:
                return WeightTriple(*self.weights)
            except ValueError as e:
                raise ConfigError(str(e)) from e
        if self.weights_preset is not None:
            return WeightTriple.preset(self.weights_preset)
        raise ConfigError("no weights configured; pass --weights or --preset")

    def focus_config(self) -> FocusConfig:
        return FocusConfig(
            extractor_model=self.extractor_model,
            tau=self.tau,
            max_retries=self.max_retries,
            similarity_mode=self.similarity_mode,
            aggregation=self.aggregation,
            textrank=self.textrank,
            max_phrase_len=self.max_phrase_len,
        )

    def eval_config(self) -> EvalConfig:
        return EvalConfig(judge_model=self.judge_model, textrank=self.textrank)


def make_gateway(config: PipelineConfig) -> Gateway:
    if config.backend == "replay":
        backend = None
    elif config.backend in ("live", "record"):
        if not config.base_url:
            raise ConfigError(f"backend {config.backend!r} requires base_url")
        backend = HttpBackend(config.base_url)
    else:
        raise ConfigError(f"unknown backend kind {config.backend!r}")
    return Gateway(
        cache_dir=config.cache_dir,
        backend=backend,
        embed_model_id=config.embed_model,
        max_attempts=config.max_attempts,
    )


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message: str):  # noqa: A003 - argparse API
        raise ConfigError(message)


def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    updates: dict[str, Any] = {}
    for name in ("data", "schema", "backend", "cache_dir", "jobs", "tau", "base_url"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    if getattr(args, "weights", None) is not None:
        try:
            updates["weights"] = tuple(float(x) for x in args.weights.split(","))
        except ValueError as e:
            raise ConfigError(f"bad --weights value {args.weights!r}: {e}") from e
    if getattr(args, "preset", None) is not None:
        updates["weights_preset"] = args.preset
        updates["weights"] = None
    return replace(config, **updates) if updates else config


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    return _apply_overrides(config, args)


def _require(value: Any, flag: str) -> Any:
    if value is None:
        raise ConfigError(f"missing required {flag} (flag or config)")
    return value


def cmd_stats(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = load_dataset(_require(config.data, "--data"), get_schema(config.schema))
    stats = dataset_stats(records)
    print(f"{'split':<8}{'count':>8}{'avg_chq_tokens':>18}{'avg_faq_tokens':>18}")
    for s in stats:
        print(f"{s.split:<8}{s.count:>8}{s.avg_chq_tokens:>18.2f}{s.avg_faq_tokens:>18.2f}")
    print(json.dumps([s.to_dict() for s in stats], ensure_ascii=False))
    return EXIT_OK


def cmd_build_dataset(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = load_dataset(_require(config.data, "--data"), get_schema(config.schema))
    if args.split:
        records = [r for r in records if r.split in args.split]
    gateway = make_gateway(config)
    embed = GatewayEmbedder(gateway) if config.similarity_mode == "embedding" else None
    out = Path(args.out)

    todo = records
    existing = {}
    if args.resume and out.exists():
        existing = {e.id: e for e in load_enhanced(out)}
        todo = [r for r in records if r.id not in existing]
    built, _ = build_enhanced_dataset(
        todo, gateway, config.focus_config(), embed=embed, jobs=config.jobs
    )
    by_id = {e.id: e for e in built}
    examples = [existing.get(r.id) or by_id[r.id] for r in records]

    histogram = Counter(e.attempts for e in examples)
    report = {
        "total": len(examples),
        "degraded": sum(1 for e in examples if e.degraded),
        "attempts_histogram": {str(k): histogram[k] for k in sorted(histogram)},
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    count = write_records(out, examples)
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    report_path.write_text(
        json.dumps(report, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {count} enhanced examples to {out} ({report['degraded']} degraded)")
    return EXIT_OK


def cmd_export_sft(args: argparse.Namespace) -> int:
    config = _load_config(args)
    examples = load_enhanced(args.input)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    instruction = args.instruction or config.sft_instruction
    count = export_sft(examples, out, instruction=instruction)
    print(f"wrote {count} SFT records to {out}")
    return EXIT_OK


def _load_candidate_sets(
    candidates_dir: str | Path, combos: Sequence[str] | None
) -> tuple[list[str], dict[str, dict[str, str]]]:
    """Read one JSONL file per combo; return (combo order, id -> combo -> text)."""
    cdir = Path(candidates_dir)
    if not cdir.is_dir():
        raise DataError(f"candidates directory not found: {cdir}")
    files = sorted(cdir.glob("*.jsonl"))
    if not files:
        raise DataError(f"no candidate files (*.jsonl) in {cdir}")
    order = list(combos) if combos else [f.stem for f in files]
    by_stem = {f.stem: f for f in files}
    missing = [c for c in order if c not in by_stem]
    if missing:
        raise DataError(f"candidate files missing for combos: {', '.join(missing)}")

    table: dict[str, dict[str, str]] = {}
    id_sets: dict[str, set[str]] = {}
    for combo in order:
        for row in read_jsonl(by_stem[combo]):
            if "id" not in row or "text" not in row:
                raise DataError(f"{by_stem[combo]}: candidate rows need 'id' and 'text'")
            table.setdefault(str(row["id"]), {})[combo] = str(row["text"])
            id_sets.setdefault(combo, set()).add(str(row["id"]))
    ids = id_sets[order[0]]
    for combo in order[1:]:
        if id_sets[combo] != ids:
            diff = sorted(id_sets[combo] ^ ids)
            raise DataError(
                f"candidate id mismatch between {order[0]!r} and {combo!r}: {diff[:5]}"
            )
    return order, table


def cmd_select(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = load_dataset(_require(config.data, "--data"), get_schema(config.schema))
    combos = args.combos.split(",") if args.combos else None
    order, table = _load_candidate_sets(args.candidates, combos)
    weights = config.resolve_weights()
    gateway = make_gateway(config)
    eval_config = config.eval_config()

    records = [r for r in records if r.id in table]
    if not records:
        raise DataError("no dataset records match the candidate ids")

    def one(record) -> dict[str, Any]:
        candidates = [
            CandidateSummary(combo_id=c, text=table[record.id][c]) for c in order
        ]
        try:
            chosen, scored = select_best(
                candidates, record.chq, weights, gateway, eval_config
            )
        except GatewayError as e:
            raise GatewayError(f"record {record.id!r}: {e}") from e
        return {
            "id": record.id,
            "chosen": chosen.text,
            "candidates": [
                s.to_wire(c.text) for c, s in zip(candidates, scored)
            ],
            "weights": weights.to_dict(),
        }

    if config.jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(one, records))
    else:
        rows = [one(r) for r in records]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = write_records(out, rows)
    print(f"selected best of {len(order)} candidates for {count} records -> {out}")
    return EXIT_OK


def cmd_grid_search(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = load_dataset(_require(config.data, "--data"), get_schema(config.schema))
    gold = {r.id: r.faq for r in records}
    dev: list[DevRecord] = []
    for row in read_jsonl(args.scores):
        rid = str(row["id"])
        if rid not in gold:
            raise DataError(f"scored record id {rid!r} not present in dataset")
        if gold[rid] is None:
            raise DataError(f"record {rid!r} has no gold FAQ for the objective")
        dev.append(
            DevRecord(
                id=rid,
                gold=gold[rid],
                candidates=tuple(
                    ScoredCandidate(
                        combo_id=c["combo_id"],
                        text=c["text"],
                        faithfulness=float(c["F"]),
                        conciseness=float(c["C"]),
                        coverage=float(c["Cov"]),
                    )
                    for c in row["candidates"]
                ),
            )
        )
    step = args.step if args.step is not None else config.grid_step
    result = grid_search_weights(dev, step=step, objective=config.objective)
    report = {
        "step": step,
        "objective": config.objective,
        "best": result.best.to_dict(),
        "objective_value": result.objective_value,
        "evaluated": [
            {"weights": w.to_dict(), "value": v} for w, v in result.evaluated
        ],
    }
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(
            json.dumps(report, ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    best = result.best
    print(
        f"evaluated {len(result.evaluated)} weight triples; "
        f"best (alpha={best.alpha:.2f}, beta={best.beta:.2f}, gamma={best.gamma:.2f}) "
        f"{config.objective}={result.objective_value:.4f}"
    )
    return EXIT_OK


def cmd_rouge(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = load_dataset(_require(config.data, "--data"), get_schema(config.schema))
    gold = {r.id: r.faq for r in records}
    pairs: list[tuple[str, str]] = []
    for row in read_jsonl(args.predictions):
        rid = str(row.get("id"))
        if rid not in gold:
            raise DataError(f"prediction id {rid!r} not present in dataset")
        if gold[rid] is None:
            raise DataError(f"record {rid!r} has no gold FAQ to score against")
        text = row.get("text", row.get("chosen"))
        if text is None:
            raise DataError(f"prediction {rid!r} carries neither 'text' nor 'chosen'")
        pairs.append((str(text), gold[rid]))
    scores = rouge.corpus_rouge(pairs)
    report: dict[str, Any] = {v: scores[v].to_dict() for v in rouge.VARIANTS}
    report["n"] = len(pairs)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(
            json.dumps(report, ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    for variant in rouge.VARIANTS:
        s = scores[variant]
        print(f"{variant}: P={s.precision:.4f} R={s.recall:.4f} F1={s.f1:.4f}")
    return EXIT_OK


def cmd_record_fixtures(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if config.backend == "replay":
        raise ConfigError("record-fixtures needs --backend live or record")
    gateway = make_gateway(config)
    requests = []
    for row in read_jsonl(args.requests):
        try:
            requests.append(ChatRequest(**row))
        except (TypeError, ValueError) as e:
            raise DataError(f"bad chat request in {args.requests}: {e}") from e
    count = record_fixtures(gateway, requests)
    print(f"recorded {count} distinct fixtures under {config.cache_dir}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="focusmed", description=__doc__)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--jobs", type=int, help="worker threads for record fan-out")
    parser.add_argument("--cache-dir", dest="cache_dir", help="gateway cache/fixture dir")
    parser.add_argument(
        "--backend", choices=("live", "replay", "record"), help="gateway backend kind"
    )
    parser.add_argument("--base-url", dest="base_url", help="live backend base URL")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="per-split dataset statistics")
    p.add_argument("--data", help="dataset JSONL path")
    p.add_argument("--schema", help="dataset schema name")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("build-dataset", help="extract focuses into an enhanced dataset")
    p.add_argument("--data", help="dataset JSONL path")
    p.add_argument("--schema", help="dataset schema name")
    p.add_argument("--out", required=True, help="enhanced dataset output path")
    p.add_argument("--report", help="run report path (default: <out>.report.json)")
    p.add_argument("--split", action="append", help="restrict to split (repeatable)")
    p.add_argument("--tau", type=float, help="faithfulness threshold")
    p.add_argument("--resume", action="store_true", help="keep existing output rows")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("export-sft", help="convert enhanced examples to SFT triples")
    p.add_argument("--input", required=True, help="enhanced dataset path")
    p.add_argument("--out", required=True, help="SFT JSONL output path")
    p.add_argument("--instruction", help="override the task instruction")
    p.set_defaults(func=cmd_export_sft)

    p = sub.add_parser("select", help="score candidates and pick the best per record")
    p.add_argument("--data", help="dataset JSONL path")
    p.add_argument("--schema", help="dataset schema name")
    p.add_argument("--candidates", required=True, help="directory of <combo>.jsonl files")
    p.add_argument("--combos", help="comma-separated canonical combo order")
    p.add_argument("--weights", help="alpha,beta,gamma")
    p.add_argument("--preset", help="named weight preset (mediqa, meqsum)")
    p.add_argument("--out", required=True, help="scored output path")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("grid-search", help="search weight triples on scored dev output")
    p.add_argument("--data", help="dataset JSONL path with gold FAQs")
    p.add_argument("--schema", help="dataset schema name")
    p.add_argument("--scores", required=True, help="scored output from `select`")
    p.add_argument("--step", type=float, help="grid step (1/step must be integral)")
    p.add_argument("--out", help="grid report output path")
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("rouge", help="score predictions against gold FAQs")
    p.add_argument("--data", help="dataset JSONL path with gold FAQs")
    p.add_argument("--schema", help="dataset schema name")
    p.add_argument("--predictions", required=True, help="JSONL with id/text rows")
    p.add_argument("--out", help="report output path")
    p.set_defaults(func=cmd_rouge)

    p = sub.add_parser("record-fixtures", help="record chat fixtures for later replay")
    p.add_argument("--requests", required=True, help="JSONL of chat requests")
    p.set_defaults(func=cmd_record_fixtures)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logging.basicConfig(level=logging.DEBUG)
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except GatewayError as e:
        print(f"gateway error: {e}", file=sys.stderr)
        return EXIT_GATEWAY
    except FocusmedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
