"""CHQ-FAQ dataset ingestion, statistics, and line-delimited persistence.

All pipeline artifacts are stored as UTF-8 JSONL, one object per line,
newline terminated. Field names in source datasets vary (MeqSum and the
shared-task release use different columns), so loading is driven by a
named schema mapping.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import ConfigError, DataError
from .textgraph import tokenize

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class QuestionRecord:
    """One consumer health question with its optional gold summary."""

    id: str
    chq: str
    faq: str | None
    split: str

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "chq": self.chq, "faq": self.faq, "split": self.split}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QuestionRecord":
        return cls(id=d["id"], chq=d["chq"], faq=d.get("faq"), split=d["split"])


@dataclass(frozen=True)
class SplitStats:
    split: str
    count: int
    avg_chq_tokens: float
    avg_faq_tokens: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DatasetSchema:
    """Maps our record fields onto a source file's column names.

    `id_field` and `split_field` may be None: ids then fall back to
    zero-padded line indices and splits to `default_split`.
    """

    chq_field: str
    faq_field: str
    id_field: str | None = None
    split_field: str | None = None
    default_split: str = "train"


SCHEMAS: dict[str, DatasetSchema] = {
    "default": DatasetSchema(
        chq_field="chq", faq_field="faq", id_field="id", split_field="split"
    ),
    "mediqa": DatasetSchema(chq_field="CHQ", faq_field="Summary", split_field="split"),
    "meqsum": DatasetSchema(chq_field="CHQ", faq_field="Summary", split_field="split"),
}


def get_schema(name: str) -> DatasetSchema:
    try:
        return SCHEMAS[name]
    except KeyError:
        raise ConfigError(
            f"unknown dataset schema {name!r}; known: {', '.join(sorted(SCHEMAS))}"
        ) from None


def load_dataset(
    path: str | Path, schema: DatasetSchema | str = "default"
) -> list[QuestionRecord]:
    """Load QuestionRecords from a JSONL file, in file order.

    Raises DataError with the offending line number for malformed JSON,
    a missing mapped field, an empty CHQ, a duplicate id, or a train/dev
    record lacking its gold FAQ.
    """
    if isinstance(schema, str):
        schema = get_schema(schema)
    p = Path(path)
    if not p.exists():
        raise DataError(f"dataset file not found: {p}")

    records: list[QuestionRecord] = []
    seen_ids: set[str] = set()
    with p.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                raw = json.loads(stripped)
            except json.JSONDecodeError as e:
                raise DataError(f"{p}:{lineno + 1}: malformed JSON: {e.msg}") from e
            if not isinstance(raw, dict):
                raise DataError(f"{p}:{lineno + 1}: expected a JSON object")

            if schema.chq_field not in raw:
                raise DataError(
                    f"{p}:{lineno + 1}: missing mapped field {schema.chq_field!r}"
                )
            chq = str(raw[schema.chq_field])
            if not chq.strip():
                raise DataError(f"{p}:{lineno + 1}: empty CHQ text")

            faq_raw = raw.get(schema.faq_field)
            faq = str(faq_raw) if faq_raw is not None else None

            if schema.id_field is not None and schema.id_field in raw:
                rec_id = str(raw[schema.id_field])
            else:
                rec_id = f"{lineno:06d}"
            if rec_id in seen_ids:
                raise DataError(f"{p}:{lineno + 1}: duplicate id {rec_id!r}")
            seen_ids.add(rec_id)

            if schema.split_field is not None and schema.split_field in raw:
                split = str(raw[schema.split_field])
            else:
                split = schema.default_split
            if split not in SPLITS:
                raise DataError(
                    f"{p}:{lineno + 1}: unknown split {split!r}; expected one of {SPLITS}"
                )
            if split in ("train", "dev") and (faq is None or not faq.strip()):
                raise DataError(
                    f"{p}:{lineno + 1}: {split} record {rec_id!r} lacks a gold FAQ"
                )
            records.append(QuestionRecord(id=rec_id, chq=chq, faq=faq, split=split))
    return records


def dataset_stats(records: Sequence[QuestionRecord]) -> list[SplitStats]:
    """Per-split counts and mean token lengths.

    Token counts use the same tokenizer as key-phrase extraction and
    scoring so length statistics stay comparable across the pipeline.
    Averages skip records missing the field.
    """
    out: list[SplitStats] = []
    for split in SPLITS:
        members = [r for r in records if r.split == split]
        if not members:
            continue
        chq_lens = [len(tokenize(r.chq).tokens) for r in members]
        faq_lens = [len(tokenize(r.faq).tokens) for r in members if r.faq is not None]
        out.append(
            SplitStats(
                split=split,
                count=len(members),
                avg_chq_tokens=sum(chq_lens) / len(chq_lens) if chq_lens else 0.0,
                avg_faq_tokens=sum(faq_lens) / len(faq_lens) if faq_lens else 0.0,
            )
        )
    return out


def write_records(path: str | Path, records: Iterable[Any]) -> int:
    """Write records (dataclasses with to_dict, or plain dicts) as JSONL.

    Returns the number of lines written. Output is deterministic: keys
    keep insertion order, unicode is not escaped.
    """
    p = Path(path)
    count = 0
    try:
        with p.open("w", encoding="utf-8", newline="\n") as f:
            for rec in records:
                d = rec.to_dict() if hasattr(rec, "to_dict") else rec
                f.write(json.dumps(d, ensure_ascii=False) + "\n")
                count += 1
    except OSError as e:
        raise DataError(f"cannot write records to {p}: {e}") from e
    return count


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    """Read a JSONL file into dicts, skipping blank lines."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"file not found: {p}")
    out: list[dict[str, Any]] = []
    with p.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                out.append(json.loads(stripped))
            except json.JSONDecodeError as e:
                raise DataError(f"{p}:{lineno + 1}: malformed JSON: {e.msg}") from e
    return out
