"""Question-focus extraction with faithfulness validation and SFT export.

The extraction loop prompts a model for the salient drugs and symptoms
of a consumer health question, parses the structured reply, and accepts
it only when every key phrase of the reply can be matched to a
sufficiently similar phrase of the question itself. Accepted focuses
are fused with the original question into an enhanced dataset, which
exports to instruction/input/output triples for fine-tuning.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import textgraph
from .corpus import QuestionRecord, read_jsonl, write_records
from .errors import DataError, GatewayError
from .gateway import ChatRequest, Gateway
from .parsing import ResponseParseError, extract_json_value
from .textgraph import EmbeddingProvider, TextRankParams

logger = logging.getLogger(__name__)

FOCUS_SYSTEM_PROMPT = """\
You are a medical assistant identifying the question focus of a consumer \
health question.

Extract only these two kinds of entities from the question:
1. drugs or medications (at most 2)
2. symptoms (at most 2)

Every entity must be taken from the question itself; never introduce a drug \
or symptom the question does not mention. Reason step by step about what the \
patient is asking, then reply with a single JSON object and nothing else:

{"drugs": ["..."], "symptoms": ["..."], "justification": "..."}

Use empty lists for categories the question does not contain. The \
justification must ground every extracted entity in the question's own \
wording."""

DEFAULT_SFT_INSTRUCTION = (
    "Summarize the following consumer health question as one concise question "
    "a doctor could answer. Preserve the key drugs, symptoms, and the "
    "patient's actual intent."
)

_DRUG_KEYS = ("drugs", "medications", "drug", "medication")
_SYMPTOM_KEYS = ("symptoms", "symptom")
_JUSTIFICATION_KEYS = ("justification", "reasoning", "rationale", "explanation")

MAX_ENTITIES_PER_CATEGORY = 2


@dataclass(frozen=True)
class FocusExtraction:
    """Parsed model output: capped entity lists plus the model's grounding."""

    drugs: tuple[str, ...]
    symptoms: tuple[str, ...]
    justification: str
    raw: str

    def has_entities(self) -> bool:
        return bool(self.drugs or self.symptoms)

    def to_dict(self) -> dict[str, Any]:
        return {
            "drugs": list(self.drugs),
            "symptoms": list(self.symptoms),
            "justification": self.justification,
            "raw": self.raw,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FocusExtraction":
        return cls(
            drugs=tuple(d.get("drugs", [])),
            symptoms=tuple(d.get("symptoms", [])),
            justification=d.get("justification", ""),
            raw=d.get("raw", ""),
        )

    @classmethod
    def empty(cls) -> "FocusExtraction":
        return cls(drugs=(), symptoms=(), justification="", raw="")


@dataclass(frozen=True)
class FaithfulnessCheck:
    key_phrase: str
    best_source_phrase: str | None
    similarity: float
    passed: bool


@dataclass(frozen=True)
class ValidationOutcome:
    faithful: bool
    checks: tuple[FaithfulnessCheck, ...]
    threshold: float
    vacuous: bool = False  # no entities, nothing to check


@dataclass(frozen=True)
class EnhancedExample:
    """One source record fused with its validated (possibly empty) focus."""

    id: str
    chq: str
    focus: FocusExtraction
    faq: str | None
    attempts: int
    degraded: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "chq": self.chq,
            "focus": self.focus.to_dict(),
            "faq": self.faq,
            "attempts": self.attempts,
            "degraded": self.degraded,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EnhancedExample":
        return cls(
            id=d["id"],
            chq=d["chq"],
            focus=FocusExtraction.from_dict(d["focus"]),
            faq=d.get("faq"),
            attempts=d["attempts"],
            degraded=d["degraded"],
        )


@dataclass(frozen=True)
class SftRecord:
    instruction: str
    input: str
    output: str

    def to_dict(self) -> dict[str, Any]:
        return {"instruction": self.instruction, "input": self.input, "output": self.output}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SftRecord":
        return cls(instruction=d["instruction"], input=d["input"], output=d["output"])


@dataclass(frozen=True)
class FocusConfig:
    """Everything the extraction loop needs besides the gateway itself."""

    extractor_model: str = "extractor"
    tau: float = 0.85
    max_retries: int = 3
    similarity_mode: str = "lexical"
    aggregation: str = "max"  # "strict" rejects on any low pairwise similarity
    textrank: TextRankParams = field(default_factory=TextRankParams)
    max_phrase_len: int = 4
    max_tokens: int = 256
    base_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.aggregation not in ("max", "strict"):
            raise ValueError(f"aggregation must be 'max' or 'strict', got {self.aggregation}")


def build_focus_prompt(
    chq: str, model_id: str = "extractor", max_tokens: int = 256, seed: int | None = 0
) -> ChatRequest:
    """Deterministic extraction request: instruction as system, CHQ verbatim as user."""
    if not chq.strip():
        raise ValueError("chq must be non-empty")
    return ChatRequest(
        model_id=model_id,
        system=FOCUS_SYSTEM_PROMPT,
        user=chq,
        temperature=0.0,
        max_tokens=max_tokens,
        seed=seed,
    )


def _clean_entities(value: Any) -> tuple[str, ...]:
    if value is None:
        return ()
    items = [value] if isinstance(value, str) else list(value)
    cleaned: list[str] = []
    seen: set[str] = set()
    for item in items:
        text = str(item).strip()
        if not text or text.lower() in seen:
            continue
        seen.add(text.lower())
        cleaned.append(text)
        if len(cleaned) == MAX_ENTITIES_PER_CATEGORY:
            break
    return tuple(cleaned)


def parse_focus_response(text: str) -> FocusExtraction:
    """Parse the first JSON object out of model output, tolerant of prose/fences.

    Raises ResponseParseError when no JSON object is present or when the
    object carries neither entity field; callers treat both as a failed
    attempt.
    """
    obj = extract_json_value(text, kind="object")
    if not isinstance(obj, dict):
        raise ResponseParseError("model output JSON is not an object")

    def pick(keys: Sequence[str]) -> Any:
        for key in keys:
            if key in obj:
                return obj[key]
        return None

    drugs_raw = pick(_DRUG_KEYS)
    symptoms_raw = pick(_SYMPTOM_KEYS)
    if drugs_raw is None and symptoms_raw is None:
        raise ResponseParseError("model output JSON lacks both entity fields")
    justification_raw = pick(_JUSTIFICATION_KEYS)
    return FocusExtraction(
        drugs=_clean_entities(drugs_raw),
        symptoms=_clean_entities(symptoms_raw),
        justification=str(justification_raw) if justification_raw is not None else "",
        raw=text,
    )


def validate_faithfulness(
    focus: FocusExtraction,
    chq: str,
    tau: float = 0.85,
    similarity_mode: str = "lexical",
    embed: EmbeddingProvider | None = None,
    textrank_params: TextRankParams = TextRankParams(),
    max_phrase_len: int = 4,
    aggregation: str = "max",
) -> ValidationOutcome:
    """Check that every key phrase of the focus has a close match in the CHQ.

    Key phrases are ranked from the concatenated entities and
    justification, and every entity is always checked regardless of its
    rank: a hallucinated entity must never slip past validation just
    because ranking favored other tokens. Candidate source phrases are
    stopword-bounded n-grams of the CHQ. Default aggregation scores
    each key phrase by its best source match; "strict" instead fails a
    key phrase when any candidate falls below tau, which rejects almost
    everything and exists only for comparison.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    if not focus.has_entities():
        return ValidationOutcome(faithful=True, checks=(), threshold=tau, vacuous=True)

    focus_text = ". ".join(
        part for part in (*focus.drugs, *focus.symptoms, focus.justification) if part
    )
    stop = textgraph.stopwords()
    key_texts: list[str] = []
    for entity in (*focus.drugs, *focus.symptoms):
        tokens = list(textgraph.tokenize(entity).tokens)
        # boundary stopwords cannot appear in source candidates; trim them
        # so a verbatim "the rash" still matches exactly
        while tokens and tokens[0] in stop:
            tokens.pop(0)
        while tokens and tokens[-1] in stop:
            tokens.pop()
        normalized = " ".join(tokens) or " ".join(textgraph.tokenize(entity).tokens)
        if normalized and normalized not in key_texts:
            key_texts.append(normalized)
    for kp in textgraph.extract_keyphrases(focus_text, textrank_params):
        if kp.text not in key_texts:
            key_texts.append(kp.text)

    # a verbatim key phrase must always be offered an equally long source
    # span, else it could never reach similarity 1.0
    longest = max((len(kt.split()) for kt in key_texts), default=1)
    candidates = textgraph.candidate_noun_phrases(chq, max(max_phrase_len, longest))

    checks: list[FaithfulnessCheck] = []
    for key_text in key_texts:
        best_value = 0.0
        worst_value = 1.0
        best_phrase: str | None = None
        for cand in candidates:
            value = textgraph.similarity(
                key_text, cand.text, mode=similarity_mode, embed=embed
            ).value
            if value > best_value:
                best_value, best_phrase = value, cand.text
            worst_value = min(worst_value, value)
        if not candidates:
            best_value, worst_value = 0.0, 0.0
        score = best_value if aggregation == "max" else worst_value
        checks.append(
            FaithfulnessCheck(
                key_phrase=key_text,
                best_source_phrase=best_phrase,
                similarity=best_value,
                passed=score >= tau,
            )
        )
    return ValidationOutcome(
        faithful=all(c.passed for c in checks), checks=tuple(checks), threshold=tau
    )


@dataclass(frozen=True)
class ExtractResult:
    focus: FocusExtraction
    attempts: int
    degraded: bool
    outcome: ValidationOutcome | None


def extract_focus(
    chq: str,
    gateway: Gateway,
    config: FocusConfig = FocusConfig(),
    embed: EmbeddingProvider | None = None,
) -> ExtractResult:
    """Prompt-parse-validate loop with a bounded retry budget.

    Each attempt varies the request seed so retries are distinct cache
    entries; the first faithful parse wins. When all 1 + max_retries
    attempts fail, the record falls back to an empty focus and is marked
    degraded instead of being dropped.
    """
    attempts = 0
    for attempt in range(1 + config.max_retries):
        attempts += 1
        request = build_focus_prompt(
            chq,
            model_id=config.extractor_model,
            max_tokens=config.max_tokens,
            seed=config.base_seed + attempt,
        )
        response = gateway.complete(request)
        if response.finish_reason == "error":
            logger.debug("attempt %d: backend reported an error response", attempts)
            continue
        try:
            focus = parse_focus_response(response.text)
        except ResponseParseError as e:
            logger.debug("attempt %d: %s", attempts, e)
            continue
        outcome = validate_faithfulness(
            focus,
            chq,
            tau=config.tau,
            similarity_mode=config.similarity_mode,
            embed=embed,
            textrank_params=config.textrank,
            max_phrase_len=config.max_phrase_len,
            aggregation=config.aggregation,
        )
        if outcome.faithful:
            return ExtractResult(
                focus=focus,
                attempts=attempts,
                degraded=not focus.has_entities(),
                outcome=outcome,
            )
    return ExtractResult(
        focus=FocusExtraction.empty(), attempts=attempts, degraded=True, outcome=None
    )


def build_enhanced_dataset(
    records: Sequence[QuestionRecord],
    gateway: Gateway,
    config: FocusConfig = FocusConfig(),
    embed: EmbeddingProvider | None = None,
    jobs: int = 1,
) -> tuple[list[EnhancedExample], dict[str, Any]]:
    """Extract a validated focus for every record, preserving input order.

    Returns the enhanced examples plus a run report with the degraded
    count and an attempt histogram. Gateway failures abort the build,
    naming the failing record.
    """

    def one(record: QuestionRecord) -> EnhancedExample:
        try:
            result = extract_focus(record.chq, gateway, config, embed=embed)
        except GatewayError as e:
            raise GatewayError(f"record {record.id!r}: {e}") from e
        return EnhancedExample(
            id=record.id,
            chq=record.chq,
            focus=result.focus,
            faq=record.faq,
            attempts=result.attempts,
            degraded=result.degraded,
        )

    if jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            examples = list(pool.map(one, records))
    else:
        examples = [one(r) for r in records]

    histogram = Counter(e.attempts for e in examples)
    report = {
        "total": len(examples),
        "degraded": sum(1 for e in examples if e.degraded),
        "attempts_histogram": {str(k): histogram[k] for k in sorted(histogram)},
    }
    return examples, report


def render_sft_input(example: EnhancedExample) -> str:
    """CHQ verbatim, then a fixed focus block (empty lists for degraded rows)."""
    drugs = ", ".join(example.focus.drugs)
    symptoms = ", ".join(example.focus.symptoms)
    return f"{example.chq}\n\nKey focus - drugs: {drugs}; symptoms: {symptoms}"


def export_sft(
    examples: Sequence[EnhancedExample],
    path: str | Path,
    instruction: str = DEFAULT_SFT_INSTRUCTION,
) -> int:
    """Write instruction/input/output triples, one JSON object per line."""
    records: list[SftRecord] = []
    for example in examples:
        if example.faq is None or not example.faq.strip():
            raise DataError(f"example {example.id!r} has no gold FAQ; cannot export")
        records.append(
            SftRecord(
                instruction=instruction,
                input=render_sft_input(example),
                output=example.faq,
            )
        )
    return write_records(path, records)


def load_enhanced(path: str | Path) -> list[EnhancedExample]:
    return [EnhancedExample.from_dict(d) for d in read_jsonl(path)]


def load_sft(path: str | Path) -> list[SftRecord]:
    return [SftRecord.from_dict(d) for d in read_jsonl(path)]
