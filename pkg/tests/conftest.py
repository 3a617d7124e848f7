"""Shared fakes and fixture builders for the test suite."""

from __future__ import annotations

import json
from typing import Callable, Sequence

import pytest

from focusmed.gateway import (
    ChatRequest,
    FixtureCache,
    Gateway,
    TransientBackendError,
    chat_digest,
    embed_digest,
)


class FnBackend:
    """Chat backend driven by a plain function; counts calls."""

    def __init__(self, chat_fn: Callable[[ChatRequest], str]):
        self.chat_fn = chat_fn
        self.calls = 0

    def chat(self, request: ChatRequest) -> tuple[str, str]:
        self.calls += 1
        return self.chat_fn(request), "stop"

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        self.calls += 1
        return [_hash_vector(t) for t in texts]


class FlakyBackend(FnBackend):
    """Fails with a transient error the first `failures` chat calls."""

    def __init__(self, chat_fn, failures: int):
        super().__init__(chat_fn)
        self.failures = failures

    def chat(self, request: ChatRequest) -> tuple[str, str]:
        self.calls += 1
        if self.calls <= self.failures:
            raise TransientBackendError("synthetic transport failure")
        return self.chat_fn(request), "stop"


def _hash_vector(text: str, dim: int = 8) -> list[float]:
    """Deterministic pseudo-embedding: stable across runs and platforms."""
    import hashlib

    raw = hashlib.sha256(text.encode("utf-8")).digest()
    return [raw[i] / 255.0 + 0.01 for i in range(dim)]


class HashEmbedder:
    """Similarity provider built on the deterministic hash vectors."""

    signed = False

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors = []
        for t in texts:
            v = _hash_vector(t)
            norm = sum(x * x for x in v) ** 0.5
            vectors.append([x / norm for x in v])
        return vectors


def write_chat_fixture(cache_dir, request: ChatRequest, text: str) -> str:
    """Drop a replayable fixture for `request`; returns its digest."""
    digest = chat_digest(request)
    FixtureCache(cache_dir).put(
        digest,
        {
            "request": {"kind": "chat", "request": request.to_canonical()},
            "response": {"text": text, "finish_reason": "stop"},
        },
    )
    return digest


def write_embed_fixture(cache_dir, model_id: str, text: str, vector: list[float]) -> str:
    digest = embed_digest(model_id, text)
    FixtureCache(cache_dir).put(
        digest,
        {
            "request": {"kind": "embed", "model_id": model_id, "text": text},
            "response": {"vector": vector},
        },
    )
    return digest


def gateway_with(tmp_path, chat_fn: Callable[[ChatRequest], str]) -> Gateway:
    return Gateway(tmp_path / "cache", backend=FnBackend(chat_fn))


class PipelineBackend:
    """Deterministic backend covering every pipeline prompt kind.

    Focus prompts get the question's first two content tokens back as
    symptoms (verbatim, so validation passes); decomposition splits on
    periods; entailment is case-insensitive substring containment.
    Being a pure function of the request, its responses replay exactly.
    """

    def __init__(self):
        self.calls = 0

    def chat(self, request: ChatRequest) -> tuple[str, str]:
        from focusmed.evaluate import DECOMPOSE_SYSTEM_PROMPT, ENTAILMENT_SYSTEM_PROMPT
        from focusmed.focus import FOCUS_SYSTEM_PROMPT
        from focusmed.textgraph import stopwords, tokenize

        self.calls += 1
        if request.system == FOCUS_SYSTEM_PROMPT:
            stop = stopwords()
            content = [t for t in tokenize(request.user).tokens if t not in stop]
            return (
                json.dumps(
                    {
                        "drugs": [],
                        "symptoms": content[:2],
                        "justification": " ".join(content[:4]),
                    }
                ),
                "stop",
            )
        if request.system == DECOMPOSE_SYSTEM_PROMPT:
            facts = [s.strip() for s in request.user.split(".") if s.strip()]
            return json.dumps(facts), "stop"
        if request.system == ENTAILMENT_SYSTEM_PROMPT:
            source, fact = request.user.split("\n\nStatement:\n")
            source = source.removeprefix("Source text:\n")
            verdict = fact.strip().lower() in source.lower()
            return ("YES" if verdict else "NO"), "stop"
        raise AssertionError(f"unexpected prompt: {request.system[:60]}")

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        self.calls += 1
        return [_hash_vector(t) for t in texts]


@pytest.fixture
def no_sleep():
    """Sleep recorder so backoff tests do not actually wait."""
    delays: list[float] = []
    return delays.append, delays


def jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
