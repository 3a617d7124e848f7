#!/usr/bin/env python3
"""Regenerate the bundled end-to-end replay corpus under tests/fixtures/e2e/.

Runs the real pipeline stages against a scripted deterministic backend
and records every gateway exchange into the fixture cache. The suite
then replays those fixtures with no backend at all, so regeneration is
only needed when prompts, digests, or default configs change.
"""

from __future__ import annotations

import json
import re
import shutil
import sys
from pathlib import Path

from focusmed.corpus import load_dataset, write_records
from focusmed.evaluate import (
    DECOMPOSE_SYSTEM_PROMPT,
    ENTAILMENT_SYSTEM_PROMPT,
    CandidateSummary,
    EvalConfig,
    WeightTriple,
    select_best,
)
from focusmed.focus import FOCUS_SYSTEM_PROMPT, FocusConfig, build_enhanced_dataset
from focusmed.gateway import Gateway

FIXTURE_ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "e2e"

RECORDS = [
    {
        "id": "e2e-0",
        "chq": (
            "I started taking methotrexate two weeks ago and now a red rash covers "
            "my arms. Could methotrexate cause this rash?"
        ),
        "faq": "Does methotrexate cause skin rash?",
        "split": "train",
    },
    {
        "id": "e2e-1",
        "chq": (
            "My mother was prescribed lisinopril and complains of a dry cough at "
            "night. Is the dry cough from lisinopril?"
        ),
        "faq": "Can lisinopril cause a dry cough?",
        "split": "train",
    },
    {
        "id": "e2e-2",
        "chq": (
            "After switching to metformin I feel constant nausea before meals. "
            "Should I stop metformin because of the nausea?"
        ),
        "faq": "Does metformin cause nausea?",
        "split": "train",
    },
    {
        "id": "e2e-3",
        "chq": (
            "Is it safe to drink grapefruit juice while taking simvastatin for "
            "high cholesterol?"
        ),
        "faq": "Does grapefruit juice interact with simvastatin?",
        "split": "train",
    },
    {
        "id": "e2e-4",
        "chq": (
            "For three days I have had a pounding headache and blurred vision "
            "after starting amlodipine. Is amlodipine to blame?"
        ),
        "faq": "Can amlodipine cause headache and blurred vision?",
        "split": "train",
    },
]

# chq -> focus reply; e2e-2 needs one retry, e2e-3 never validates (degraded)
FOCUS_REPLIES: dict[str, list[str]] = {
    "e2e-0": [
        json.dumps(
            {
                "drugs": ["methotrexate"],
                "symptoms": ["red rash"],
                "justification": "Could methotrexate cause this rash",
            }
        )
    ],
    "e2e-1": [
        json.dumps(
            {
                "drugs": ["lisinopril"],
                "symptoms": ["dry cough"],
                "justification": "Is the dry cough from lisinopril",
            }
        )
    ],
    "e2e-2": [
        "Sorry, I cannot answer in the requested format.",
        json.dumps(
            {
                "drugs": ["metformin"],
                "symptoms": ["nausea"],
                "justification": "Should I stop metformin because of the nausea",
            }
        ),
    ],
    "e2e-3": [
        json.dumps({"drugs": ["warfarin"], "symptoms": [], "justification": "warfarin"})
    ],
    "e2e-4": [
        json.dumps(
            {
                "drugs": ["amlodipine"],
                "symptoms": ["pounding headache", "blurred vision"],
                "justification": "pounding headache and blurred vision after starting amlodipine",
            }
        )
    ],
}

COMBOS = ("llama+llama", "llama+qwen", "qwen+llama", "qwen+qwen")


def candidate_text(combo: str, record: dict) -> str:
    """Four summary styles per record, from verbatim excerpt to boilerplate."""
    chq = record["chq"]
    last_sentence = [s.strip() for s in re.split(r"[.?!]", chq) if s.strip()][-1]
    if combo == "qwen+qwen":
        return last_sentence.lower()
    if combo == "qwen+llama":
        return record["faq"]
    if combo == "llama+qwen":
        words = last_sentence.lower().split()
        return " ".join(words[: max(3, len(words) // 2)])
    return "please consult your doctor about this concern"


class ScriptedBackend:
    """Deterministic stand-in provider used only at fixture-recording time."""

    def __init__(self):
        self.chq_to_id = {r["chq"]: r["id"] for r in RECORDS}
        self.attempt_counter: dict[str, int] = {}

    def chat(self, request):
        if request.system == FOCUS_SYSTEM_PROMPT:
            rid = self.chq_to_id[request.user]
            replies = FOCUS_REPLIES[rid]
            # seed enumerates attempts, so replies index by seed
            index = min(request.seed or 0, len(replies) - 1)
            return replies[index], "stop"
        if request.system == DECOMPOSE_SYSTEM_PROMPT:
            facts = [s.strip() for s in re.split(r"[.?!]", request.user) if s.strip()]
            return json.dumps(facts), "stop"
        if request.system == ENTAILMENT_SYSTEM_PROMPT:
            source, fact = request.user.split("\n\nStatement:\n")
            source = source.removeprefix("Source text:\n")
            return ("YES" if fact.strip().lower() in source.lower() else "NO"), "stop"
        raise RuntimeError(f"unexpected prompt: {request.system[:60]}")

    def embed(self, model_id, texts):
        raise RuntimeError("e2e fixtures use lexical similarity only")


def main() -> int:
    if FIXTURE_ROOT.exists():
        shutil.rmtree(FIXTURE_ROOT)
    (FIXTURE_ROOT / "candidates").mkdir(parents=True)

    write_records(FIXTURE_ROOT / "data.jsonl", RECORDS)
    for combo in COMBOS:
        write_records(
            FIXTURE_ROOT / "candidates" / f"{combo}.jsonl",
            [{"id": r["id"], "text": candidate_text(combo, r)} for r in RECORDS],
        )

    gateway = Gateway(FIXTURE_ROOT / "cache", ScriptedBackend())
    records = load_dataset(FIXTURE_ROOT / "data.jsonl")

    examples, report = build_enhanced_dataset(records, gateway, FocusConfig())
    weights = WeightTriple.preset("mediqa")
    for record in records:
        candidates = [
            CandidateSummary(combo_id=c, text=candidate_text(c, {"chq": record.chq, "faq": record.faq}))
            for c in COMBOS
        ]
        select_best(candidates, record.chq, weights, gateway, EvalConfig())

    n_fixtures = len(gateway.cache.digests())
    print(f"recorded {n_fixtures} fixtures; build report: {report}")
    degraded = [e.id for e in examples if e.degraded]
    print(f"degraded records: {degraded} (expected ['e2e-3'])")
    attempts = {e.id: e.attempts for e in examples}
    print(f"attempts: {attempts}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
