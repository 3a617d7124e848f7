"""Deterministic text algorithms shared across the pipeline.

Tokenization, graph-based key-phrase ranking, candidate noun-phrase
chunking, and string similarity. Everything here is pure: no model
calls, no randomness, no mutable module state beyond the lazily loaded
stopword set.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Protocol

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_SENTENCE_BOUNDARY = frozenset(".!?")

_STOPWORDS: frozenset[str] | None = None


def stopwords() -> frozenset[str]:
    """Return the bundled English stopword set (loaded once)."""
    global _STOPWORDS
    if _STOPWORDS is None:
        text = (
            resources.files("focusmed.resources")
            .joinpath("stopwords_en.txt")
            .read_text(encoding="utf-8")
        )
        _STOPWORDS = frozenset(w.strip() for w in text.splitlines() if w.strip())
    return _STOPWORDS


@dataclass(frozen=True)
class TokenizedText:
    """Lowercased tokens with character offsets back into the original text."""

    original: str
    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class KeyPhrase:
    """A ranked phrase: contiguous source tokens scored by summed node scores."""

    text: str
    score: float
    token_span: tuple[int, int]

    @property
    def length_tokens(self) -> int:
        return self.token_span[1] - self.token_span[0] + 1


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    mode: str  # "lexical" | "embedding"


@dataclass(frozen=True)
class TextRankParams:
    """Knobs for the co-occurrence ranking; defaults follow common practice."""

    window: int = 4
    damping: float = 0.85
    epsilon: float = 1e-6
    max_iters: int = 100
    top_fraction: float = 1 / 3
    max_phrases: int = 10

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must be in (0, 1), got {self.damping}")


class EmbeddingProvider(Protocol):
    """Anything that maps a batch of texts to unit vectors.

    `signed` declares whether cosines between returned vectors can be
    negative; if so, similarity rescales them into [0, 1].
    """

    signed: bool

    def embed(self, texts: list[str]) -> list[list[float]]: ...


def tokenize(text: str) -> TokenizedText:
    """Split text into maximal alphanumeric runs, lowercased, with offsets."""
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    for m in _TOKEN_RE.finditer(text):
        tokens.append(m.group(0).lower())
        spans.append((m.start(), m.end()))
    return TokenizedText(original=text, tokens=tuple(tokens), spans=tuple(spans))


def _cooccurrence_graph(
    content_tokens: list[str], window: int
) -> dict[str, dict[str, float]]:
    """Undirected co-occurrence graph over a stopword-filtered token sequence.

    Two tokens are linked when they appear within `window` positions of
    each other in the filtered sequence; edge weight counts co-occurrences.
    Self-loops are dropped.
    """
    graph: dict[str, dict[str, float]] = {t: {} for t in content_tokens}
    for i, u in enumerate(content_tokens):
        for j in range(i + 1, min(i + window, len(content_tokens))):
            v = content_tokens[j]
            if u == v:
                continue
            graph[u][v] = graph[u].get(v, 0.0) + 1.0
            graph[v][u] = graph[v].get(u, 0.0) + 1.0
    return graph


def textrank_scores(
    text: str, params: TextRankParams = TextRankParams()
) -> tuple[dict[str, float], int]:
    """Score non-stopword tokens by damped power iteration over co-occurrences.

    Update per node v:  s(v) = (1 - d) + d * sum_u w(u,v) * s(u) / W(u)
    where W(u) is the total edge weight at u. Iteration stops when the
    largest per-node change drops below `params.epsilon` or after
    `params.max_iters` rounds. Returns (scores, iterations_run).
    """
    toks = tokenize(text)
    stop = stopwords()
    content = [t for t in toks.tokens if t not in stop]
    if not content:
        return {}, 0

    graph = _cooccurrence_graph(content, params.window)
    nodes = sorted(graph)
    totals = {u: sum(graph[u].values()) for u in nodes}
    scores = {u: 1.0 for u in nodes}

    iterations = 0
    for _ in range(params.max_iters):
        iterations += 1
        updated: dict[str, float] = {}
        for v in nodes:
            rank = 0.0
            for u, w in graph[v].items():
                if totals[u] > 0.0:
                    rank += w * scores[u] / totals[u]
            updated[v] = (1.0 - params.damping) + params.damping * rank
        delta = max(abs(updated[v] - scores[v]) for v in nodes)
        scores = updated
        if delta < params.epsilon:
            break
    return scores, iterations


def extract_keyphrases(
    text: str, params: TextRankParams = TextRankParams()
) -> list[KeyPhrase]:
    """Rank key phrases by merging adjacent top-scoring tokens.

    The top `top_fraction` of the vocabulary (capped at `max_phrases`)
    is selected by node score; selected tokens that sit next to each
    other in the source merge into one phrase scored by the sum of its
    member scores. Runs never cross sentence punctuation and break
    rather than repeat a token type, so "fever fever fever" yields the
    single phrase "fever". Result is sorted by score descending, ties
    by earlier source position.
    """
    scores, _ = textrank_scores(text, params)
    if not scores:
        return []

    n_keep = min(params.max_phrases, max(1, math.ceil(params.top_fraction * len(scores))))
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    selected = {tok for tok, _ in ranked[:n_keep]}

    toks = tokenize(text)
    breaks = _boundary_positions(toks)
    phrases: list[KeyPhrase] = []
    seen: set[str] = set()
    i = 0
    while i < len(toks.tokens):
        if toks.tokens[i] not in selected:
            i += 1
            continue
        run = [toks.tokens[i]]
        start = i
        j = i + 1
        while (
            j < len(toks.tokens)
            and toks.tokens[j] in selected
            and toks.tokens[j] not in run
            and (j - 1) not in breaks
        ):
            run.append(toks.tokens[j])
            j += 1
        phrase_text = " ".join(run)
        if phrase_text not in seen:
            seen.add(phrase_text)
            phrases.append(
                KeyPhrase(
                    text=phrase_text,
                    score=sum(scores[t] for t in run),
                    token_span=(start, j - 1),
                )
            )
        i = j

    order = {p.text: p.token_span[0] for p in phrases}
    phrases.sort(key=lambda p: (-p.score, order[p.text]))
    return phrases


@dataclass(frozen=True)
class CandidatePhrase:
    text: str
    token_span: tuple[int, int]


def _boundary_positions(toks: TokenizedText) -> set[int]:
    """Indices i such that sentence punctuation occurs between token i and i+1."""
    breaks: set[int] = set()
    for i in range(len(toks.tokens) - 1):
        gap = toks.original[toks.spans[i][1] : toks.spans[i + 1][0]]
        if any(c in _SENTENCE_BOUNDARY for c in gap):
            breaks.add(i)
    return breaks


def candidate_noun_phrases(text: str, max_len: int = 4) -> list[CandidatePhrase]:
    """Enumerate contiguous token n-grams usable as source-phrase candidates.

    Keeps every n-gram (1 <= n <= max_len) that neither starts nor ends
    with a stopword and does not cross sentence punctuation. Duplicate
    phrase texts keep their first span.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    toks = tokenize(text)
    stop = stopwords()
    breaks = _boundary_positions(toks)

    out: list[CandidatePhrase] = []
    seen: set[str] = set()
    n_tok = len(toks.tokens)
    for length in range(1, max_len + 1):
        for start in range(0, n_tok - length + 1):
            end = start + length - 1
            if toks.tokens[start] in stop or toks.tokens[end] in stop:
                continue
            if any(pos in breaks for pos in range(start, end)):
                continue
            phrase = " ".join(toks.tokens[start : end + 1])
            if phrase in seen:
                continue
            seen.add(phrase)
            out.append(CandidatePhrase(text=phrase, token_span=(start, end)))
    return out


def _trigram_counts(text: str) -> Counter[str]:
    normalized = " ".join(text.lower().split())
    if not normalized:
        return Counter()
    padded = f"\x02{normalized}\x03"
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


def similarity(
    a: str,
    b: str,
    mode: str = "lexical",
    embed: EmbeddingProvider | None = None,
) -> SimilarityScore:
    """Similarity in [0, 1] between two texts.

    Lexical mode is cosine over character-trigram counts of the
    whitespace-normalized, boundary-padded inputs; robust to light
    morphology ("rash" vs "rashes"). Embedding mode is cosine between
    provider vectors, rescaled via (cos + 1) / 2 when the provider
    reports signed cosines.
    """
    if not a.strip() and not b.strip():
        raise ValueError("similarity is undefined for two empty texts")
    if mode == "lexical":
        ca, cb = _trigram_counts(a), _trigram_counts(b)
        if not ca or not cb:
            return SimilarityScore(value=0.0, mode=mode)
        dot = sum(ca[g] * cb[g] for g in ca.keys() & cb.keys())
        # sqrt of the product (not product of sqrts) keeps identical
        # inputs at exactly 1.0
        norm = math.sqrt(
            sum(v * v for v in ca.values()) * sum(v * v for v in cb.values())
        )
        return SimilarityScore(value=dot / norm if norm else 0.0, mode=mode)
    if mode == "embedding":
        if embed is None:
            raise ValueError("embedding mode requires an embedding provider")
        va, vb = embed.embed([a, b])
        cos = sum(x * y for x, y in zip(va, vb))
        value = (cos + 1.0) / 2.0 if embed.signed else cos
        return SimilarityScore(value=min(1.0, max(0.0, value)), mode=mode)
    raise ValueError(f"unknown similarity mode: {mode!r}")
