"""Multi-dimensional candidate scoring, selection, and weight search.

Each candidate summary is scored on three dimensions: faithfulness
(fraction of its atomic facts entailed by the source question),
conciseness (fraction of its tokens covered by key phrases), and
coverage (fraction of the source question's atomic facts entailed by
the summary). A convex weight triple combines them; the highest-scoring
candidate wins. Weights per dataset come from a grid search over the
simplex against a reference metric on the dev split.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import rouge, textgraph
from .errors import DataError, GatewayError
from .gateway import ChatRequest, Gateway
from .parsing import ResponseParseError, extract_json_value
from .textgraph import TextRankParams

logger = logging.getLogger(__name__)

DECOMPOSE_SYSTEM_PROMPT = """\
You decompose text into atomic facts: the smallest self-contained factual \
statements it makes, each understandable on its own.

Reply with a JSON array of strings and nothing else. Reply with [] when the \
text contains no factual statement."""

ENTAILMENT_SYSTEM_PROMPT = """\
You judge whether a statement is entailed by a source text. The statement is \
entailed only if the source supports all of it; partial or contradicted \
statements are not entailed.

Reply with exactly one word: YES or NO."""

WEIGHT_PRESETS: dict[str, tuple[float, float, float]] = {
    "mediqa": (0.6, 0.1, 0.3),
    "meqsum": (0.3, 0.4, 0.3),
}


class JudgeError(GatewayError):
    """Judge model output stayed unusable through all retries."""


@dataclass(frozen=True)
class AtomicFact:
    text: str
    entailed: bool | None = None


@dataclass(frozen=True)
class CandidateSummary:
    combo_id: str
    text: str


@dataclass(frozen=True)
class WeightTriple:
    """Convex weights over (faithfulness, conciseness, coverage)."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("weights must be non-negative")
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total!r}")

    @classmethod
    def preset(cls, name: str) -> "WeightTriple":
        try:
            return cls(*WEIGHT_PRESETS[name.lower()])
        except KeyError:
            raise DataError(
                f"unknown weight preset {name!r}; known: {', '.join(sorted(WEIGHT_PRESETS))}"
            ) from None

    def to_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}


@dataclass(frozen=True)
class DimensionScore:
    value: float
    n_match: int
    n_total: int
    degenerate: bool = False  # nothing to score; pinned to 0 so it cannot win


@dataclass(frozen=True)
class QualityScores:
    combo_id: str
    faithfulness: DimensionScore
    conciseness: DimensionScore
    coverage: DimensionScore
    weighted: float

    def to_wire(self, text: str) -> dict[str, Any]:
        return {
            "combo_id": self.combo_id,
            "text": text,
            "F": self.faithfulness.value,
            "C": self.conciseness.value,
            "Cov": self.coverage.value,
            "weighted": self.weighted,
        }


@dataclass(frozen=True)
class EvalConfig:
    judge_model: str = "deepseek-r1"
    max_retries: int = 2
    max_tokens: int = 1024
    base_seed: int = 0
    textrank: TextRankParams = field(default_factory=TextRankParams)


def _judge_request(config: EvalConfig, system: str, user: str, seed: int) -> ChatRequest:
    return ChatRequest(
        model_id=config.judge_model,
        system=system,
        user=user,
        temperature=0.0,
        max_tokens=config.max_tokens,
        seed=seed,
    )


def decompose_atomic_facts(
    text: str, gateway: Gateway, config: EvalConfig = EvalConfig()
) -> list[AtomicFact]:
    """Ask the judge model to split text into deduplicated atomic facts.

    Retries (with fresh request seeds) while the output carries no JSON
    array; raises JudgeError with the raw output once retries run out.
    """
    if not text.strip():
        raise ValueError("cannot decompose empty text")
    last_raw = ""
    for attempt in range(1 + config.max_retries):
        request = _judge_request(
            config, DECOMPOSE_SYSTEM_PROMPT, text, seed=config.base_seed + attempt
        )
        last_raw = gateway.complete(request).text
        try:
            value = extract_json_value(last_raw, kind="array")
        except ResponseParseError:
            logger.debug("decomposition attempt %d unparseable", attempt + 1)
            continue
        facts: list[AtomicFact] = []
        seen: set[str] = set()
        for item in value:
            fact_text = str(item).strip()
            if not fact_text or fact_text.lower() in seen:
                continue
            seen.add(fact_text.lower())
            facts.append(AtomicFact(text=fact_text))
        return facts
    raise JudgeError(f"judge produced no parseable fact list; last output: {last_raw!r}")


def _parse_verdict(text: str) -> bool | None:
    for token in textgraph.tokenize(text).tokens:
        if token == "yes":
            return True
        if token == "no":
            return False
    return None


def judge_entailment(
    fact: str, source_text: str, gateway: Gateway, config: EvalConfig = EvalConfig()
) -> bool:
    """Binary entailment verdict; unparseable output ends up not-entailed.

    The conservative default can only lower faithfulness and coverage,
    never inflate them.
    """
    if not fact.strip() or not source_text.strip():
        raise ValueError("fact and source must be non-empty")
    user = f"Source text:\n{source_text}\n\nStatement:\n{fact}"
    for attempt in range(1 + config.max_retries):
        request = _judge_request(
            config, ENTAILMENT_SYSTEM_PROMPT, user, seed=config.base_seed + attempt
        )
        verdict = _parse_verdict(gateway.complete(request).text)
        if verdict is not None:
            return verdict
    logger.warning("entailment verdict unparseable after retries; treating as NO")
    return False


def _entailment_ratio(
    facts: Sequence[AtomicFact],
    source_text: str,
    gateway: Gateway,
    config: EvalConfig,
) -> DimensionScore:
    if not facts:
        return DimensionScore(value=0.0, n_match=0, n_total=0, degenerate=True)
    matched = sum(
        1 for f in facts if judge_entailment(f.text, source_text, gateway, config)
    )
    return DimensionScore(value=matched / len(facts), n_match=matched, n_total=len(facts))


def faithfulness_score(
    summary: str, source_chq: str, gateway: Gateway, config: EvalConfig = EvalConfig()
) -> DimensionScore:
    """Fraction of the summary's atomic facts entailed by the source question."""
    facts = decompose_atomic_facts(summary, gateway, config)
    return _entailment_ratio(facts, source_chq, gateway, config)


def conciseness_score(
    summary: str, textrank_params: TextRankParams = TextRankParams()
) -> DimensionScore:
    """Fraction of summary tokens covered by its key phrases.

    Overlapping phrase spans are unioned so the score never exceeds 1.
    """
    tokens = textgraph.tokenize(summary).tokens
    if not tokens:
        return DimensionScore(value=0.0, n_match=0, n_total=0, degenerate=True)
    covered: set[int] = set()
    for phrase in textgraph.extract_keyphrases(summary, textrank_params):
        covered.update(range(phrase.token_span[0], phrase.token_span[1] + 1))
    return DimensionScore(
        value=len(covered) / len(tokens), n_match=len(covered), n_total=len(tokens)
    )


def coverage_score(
    source_chq: str, summary: str, gateway: Gateway, config: EvalConfig = EvalConfig()
) -> DimensionScore:
    """Fraction of the source question's atomic facts entailed by the summary."""
    facts = decompose_atomic_facts(source_chq, gateway, config)
    return _entailment_ratio(facts, summary, gateway, config)


def weighted_score(
    faithfulness: float, conciseness: float, coverage: float, weights: WeightTriple
) -> float:
    return (
        weights.alpha * faithfulness
        + weights.beta * conciseness
        + weights.gamma * coverage
    )


def score_candidate(
    candidate: CandidateSummary,
    source_chq: str,
    weights: WeightTriple,
    gateway: Gateway,
    config: EvalConfig = EvalConfig(),
) -> QualityScores:
    try:
        f = faithfulness_score(candidate.text, source_chq, gateway, config)
        c = conciseness_score(candidate.text, config.textrank)
        cov = coverage_score(source_chq, candidate.text, gateway, config)
    except GatewayError as e:
        raise GatewayError(f"candidate {candidate.combo_id!r}: {e}") from e
    return QualityScores(
        combo_id=candidate.combo_id,
        faithfulness=f,
        conciseness=c,
        coverage=cov,
        weighted=weighted_score(f.value, c.value, cov.value, weights),
    )


def select_best(
    candidates: Sequence[CandidateSummary],
    source_chq: str,
    weights: WeightTriple,
    gateway: Gateway,
    config: EvalConfig = EvalConfig(),
) -> tuple[CandidateSummary, list[QualityScores]]:
    """Score every candidate and return the weighted argmax.

    Exact ties keep the earliest candidate in the caller's order, so the
    caller's combo order is the canonical tie-break.
    """
    if not candidates:
        raise DataError("select_best requires at least one candidate")
    ids = [c.combo_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise DataError(f"duplicate combo_id in candidate set: {ids}")
    scored = [
        score_candidate(c, source_chq, weights, gateway, config) for c in candidates
    ]
    best_index = max(range(len(scored)), key=lambda i: (scored[i].weighted, -i))
    return candidates[best_index], scored


@dataclass(frozen=True)
class ScoredCandidate:
    """Precomputed dimension scores for one candidate, gateway-independent."""

    combo_id: str
    text: str
    faithfulness: float
    conciseness: float
    coverage: float


@dataclass(frozen=True)
class DevRecord:
    id: str
    gold: str
    candidates: tuple[ScoredCandidate, ...]


@dataclass(frozen=True)
class GridSearchResult:
    best: WeightTriple
    objective_value: float
    evaluated: tuple[tuple[WeightTriple, float], ...]


def enumerate_weight_triples(step: float) -> list[WeightTriple]:
    """All non-negative multiples of step summing to 1, lexicographic order."""
    if not 0.0 < step <= 1.0:
        raise ValueError(f"step must be in (0, 1], got {step}")
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"1/step must be integral, got step={step}")
    triples: list[WeightTriple] = []
    for i in range(n + 1):
        for j in range(n - i + 1):
            k = n - i - j
            triples.append(WeightTriple(alpha=i / n, beta=j / n, gamma=k / n))
    return triples


def _select_texts(dev: Sequence[DevRecord], weights: WeightTriple) -> list[str]:
    chosen: list[str] = []
    for record in dev:
        best_index = max(
            range(len(record.candidates)),
            key=lambda i: (
                weighted_score(
                    record.candidates[i].faithfulness,
                    record.candidates[i].conciseness,
                    record.candidates[i].coverage,
                    weights,
                ),
                -i,
            ),
        )
        chosen.append(record.candidates[best_index].text)
    return chosen


def _resolve_objective(
    objective: str | Callable[[Sequence[tuple[str, str]]], float],
) -> Callable[[Sequence[tuple[str, str]]], float]:
    if callable(objective):
        return objective
    if objective in rouge.VARIANTS:
        return lambda pairs: rouge.corpus_rouge(pairs)[objective].f1
    raise DataError(f"unknown grid-search objective {objective!r}")


def grid_search_weights(
    dev: Sequence[DevRecord],
    step: float = 0.1,
    objective: str | Callable[[Sequence[tuple[str, str]]], float] = "rougeL",
) -> GridSearchResult:
    """Exhaustive search over the weight simplex for the best dev objective.

    Dimension scores are precomputed, so the search itself never touches
    a gateway. Objective ties break toward the lexicographically
    smallest (alpha, beta, gamma).
    """
    if not dev:
        raise DataError("grid search requires a non-empty dev set")
    for record in dev:
        if not record.candidates:
            raise DataError(f"dev record {record.id!r} has no candidates")
    objective_fn = _resolve_objective(objective)

    evaluated: list[tuple[WeightTriple, float]] = []
    for weights in enumerate_weight_triples(step):
        texts = _select_texts(dev, weights)
        value = objective_fn([(text, rec.gold) for text, rec in zip(texts, dev)])
        evaluated.append((weights, value))

    best_weights, best_value = max(
        evaluated,
        key=lambda wv: (wv[1], (-wv[0].alpha, -wv[0].beta, -wv[0].gamma)),
    )
    return GridSearchResult(
        best=best_weights, objective_value=best_value, evaluated=tuple(evaluated)
    )
