"""Self-contained ROUGE-1/2/L with macro-averaged corpus aggregation.

Tokenization is the shared lowercasing alphanumeric tokenizer; no
stemming, no stopword removal. ROUGE-L treats the whole text as one
token sequence (sentence-level LCS) with balanced F-measure.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import DataError
from .textgraph import tokenize

VARIANTS = ("rouge1", "rouge2", "rougeL")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    variant: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "variant": self.variant,
        }


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """N-gram overlap with clipped counts (n = 1 or 2)."""
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    variant = f"rouge{n}"
    cand = _ngrams(tokenize(candidate).tokens, n)
    ref = _ngrams(tokenize(reference).tokens, n)
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    if cand_total == 0 or ref_total == 0:
        return RougeScore(0.0, 0.0, 0.0, variant)
    overlap = sum(min(cand[g], ref[g]) for g in cand.keys() & ref.keys())
    precision = overlap / cand_total
    recall = overlap / ref_total
    return RougeScore(precision, recall, _f1(precision, recall), variant)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Classic O(len(a) * len(b)) dynamic program, single rolling row."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = max(prev[j], curr[j - 1])
        prev = curr
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence F-measure over whole-text token sequences."""
    cand = tokenize(candidate).tokens
    ref = tokenize(reference).tokens
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0, "rougeL")
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return RougeScore(precision, recall, _f1(precision, recall), "rougeL")


def corpus_rouge(pairs: Sequence[tuple[str, str]]) -> dict[str, RougeScore]:
    """Macro-average ROUGE-1/2/L over (candidate, reference) pairs."""
    if not pairs:
        raise DataError("corpus_rouge requires at least one (candidate, reference) pair")
    per_variant: dict[str, list[RougeScore]] = {v: [] for v in VARIANTS}
    for cand, ref in pairs:
        per_variant["rouge1"].append(rouge_n(cand, ref, 1))
        per_variant["rouge2"].append(rouge_n(cand, ref, 2))
        per_variant["rougeL"].append(rouge_l(cand, ref))
    out: dict[str, RougeScore] = {}
    for variant, scores in per_variant.items():
        n = len(scores)
        out[variant] = RougeScore(
            precision=sum(s.precision for s in scores) / n,
            recall=sum(s.recall for s in scores) / n,
            f1=sum(s.f1 for s in scores) / n,
            variant=variant,
        )
    return out
