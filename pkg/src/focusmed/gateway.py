"""Provider-agnostic chat and embedding access with a replayable cache.

Every request is hashed to a content-addressed digest; responses are
stored once under ``<root>/<first-2-hex>/<digest>.json``. A gateway
with a cache directory and no live backend is a replay gateway: it can
only serve recorded fixtures and fails loudly (naming the digest) on a
miss. The same cache directory, recorded against a live backend, is a
complete fixture set for offline runs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol, Sequence

from .errors import GatewayError

logger = logging.getLogger(__name__)

FINISH_REASONS = ("stop", "length", "error")


class MissingFixtureError(GatewayError):
    """Replay cache has no entry for a request digest."""

    def __init__(self, digest: str):
        super().__init__(
            f"no recorded fixture for digest {digest}; "
            "record it against a live backend first"
        )
        self.digest = digest


class TransientBackendError(GatewayError):
    """Retryable transport failure (connection error, 429, 5xx)."""


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 512
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not self.user:
            raise ValueError("user message must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def to_canonical(self) -> dict[str, Any]:
        return {
            "max_tokens": self.max_tokens,
            "model_id": self.model_id,
            "seed": self.seed,
            "system": self.system,
            "temperature": self.temperature,
            "user": self.user,
        }


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: str
    cached: bool


def _canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=True, separators=(",", ":"))


def chat_digest(request: ChatRequest) -> str:
    """Stable sha256 over the canonical (chat, request) serialization."""
    payload = _canonical_json({"kind": "chat", "request": request.to_canonical()})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def embed_digest(model_id: str, text: str) -> str:
    payload = _canonical_json({"kind": "embed", "model_id": model_id, "text": text})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Backend(Protocol):
    """Live provider: raises TransientBackendError for retryable failures."""

    def chat(self, request: ChatRequest) -> tuple[str, str]:
        """Return (text, finish_reason)."""
        ...

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]: ...


class HttpBackend:
    """De-facto chat-completions HTTP protocol against any compatible server.

    Auth comes from the FOCUSMED_API_KEY environment variable; the base
    URL from configuration.
    """

    def __init__(self, base_url: str, api_key: str | None = None, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("FOCUSMED_API_KEY")
        self.timeout = timeout

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        import requests

        try:
            resp = requests.post(
                f"{self.base_url}{path}",
                json=payload,
                headers=self._headers(),
                timeout=self.timeout,
            )
        except requests.RequestException as e:
            raise TransientBackendError(f"transport failure calling {path}: {e}") from e
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientBackendError(f"{path} returned status {resp.status_code}")
        if resp.status_code != 200:
            raise GatewayError(f"{path} returned status {resp.status_code}: {resp.text[:500]}")
        return resp.json()

    def chat(self, request: ChatRequest) -> tuple[str, str]:
        payload: dict[str, Any] = {
            "model": request.model_id,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        body = self._post("/chat/completions", payload)
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"] or ""
            finish = choice.get("finish_reason", "stop")
        except (KeyError, IndexError, TypeError) as e:
            raise GatewayError(f"malformed chat-completions response: {e}") from e
        if finish not in FINISH_REASONS:
            finish = "stop"
        if not text:
            finish = "error"
        return text, finish

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        body = self._post("/embeddings", {"model": model_id, "input": list(texts)})
        try:
            return [[float(x) for x in row["embedding"]] for row in body["data"]]
        except (KeyError, TypeError) as e:
            raise GatewayError(f"malformed embeddings response: {e}") from e


class FixtureCache:
    """Write-once, content-addressed JSON store with atomic entry creation."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path_for(self, digest: str) -> Path:
        return self.root / digest[:2] / f"{digest}.json"

    def get(self, digest: str) -> dict[str, Any] | None:
        p = self.path_for(digest)
        if not p.exists():
            return None
        with p.open("r", encoding="utf-8") as f:
            return json.load(f)

    def put(self, digest: str, entry: dict[str, Any]) -> None:
        """Create the entry unless present; concurrent duplicate writers no-op."""
        p = self.path_for(digest)
        if p.exists():
            return
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{digest[:8]}.", dir=p.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, ensure_ascii=False, sort_keys=True)
            os.replace(tmp_name, p)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise

    def digests(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.stem for p in self.root.glob("*/*.json"))


def _l2_normalize(vector: Sequence[float]) -> list[float]:
    norm = math.sqrt(sum(x * x for x in vector))
    if norm == 0.0:
        raise GatewayError("embedding backend returned a zero vector")
    return [x / norm for x in vector]


class Gateway:
    """Cached access to one chat/embedding provider.

    `backend=None` is replay mode: every request must hit a recorded
    fixture. With a live backend, misses are forwarded, retried on
    transient failures with exponential backoff, and recorded.
    """

    def __init__(
        self,
        cache_dir: str | Path,
        backend: Backend | None = None,
        embed_model_id: str = "embed-default",
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.cache = FixtureCache(cache_dir)
        self.backend = backend
        self.embed_model_id = embed_model_id
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._sleep = sleep
        self.backend_calls = 0

    def _call_with_retry(self, fn: Callable[[], Any], what: str) -> Any:
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                self.backend_calls += 1
                return fn()
            except TransientBackendError as e:
                last = e
                if attempt + 1 < self.max_attempts:
                    delay = self.backoff_base * (2**attempt)
                    logger.warning("%s failed (%s), retrying in %.2fs", what, e, delay)
                    self._sleep(delay)
        raise GatewayError(f"{what} failed after {self.max_attempts} attempts: {last}")

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = chat_digest(request)
        entry = self.cache.get(digest)
        if entry is not None:
            resp = entry["response"]
            return ChatResponse(
                text=resp["text"], finish_reason=resp["finish_reason"], cached=True
            )
        if self.backend is None:
            raise MissingFixtureError(digest)
        text, finish = self._call_with_retry(
            lambda: self.backend.chat(request), f"chat {digest[:12]}"
        )
        self.cache.put(
            digest,
            {
                "request": {"kind": "chat", "request": request.to_canonical()},
                "response": {"text": text, "finish_reason": finish},
            },
        )
        return ChatResponse(text=text, finish_reason=finish, cached=False)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        """One unit vector per input text, cached per text."""
        vectors: dict[int, list[float]] = {}
        missing: list[tuple[int, str, str]] = []
        for i, text in enumerate(texts):
            digest = embed_digest(self.embed_model_id, text)
            entry = self.cache.get(digest)
            if entry is not None:
                vectors[i] = entry["response"]["vector"]
            else:
                missing.append((i, text, digest))
        if missing:
            if self.backend is None:
                raise MissingFixtureError(missing[0][2])
            fetched = self._call_with_retry(
                lambda: self.backend.embed(self.embed_model_id, [m[1] for m in missing]),
                f"embed x{len(missing)}",
            )
            if len(fetched) != len(missing):
                raise GatewayError(
                    f"embedding backend returned {len(fetched)} vectors for "
                    f"{len(missing)} inputs"
                )
            for (i, text, digest), vector in zip(missing, fetched):
                self.cache.put(
                    digest,
                    {
                        "request": {
                            "kind": "embed",
                            "model_id": self.embed_model_id,
                            "text": text,
                        },
                        "response": {"vector": list(vector)},
                    },
                )
                vectors[i] = list(vector)
        return [_l2_normalize(vectors[i]) for i in range(len(texts))]


@dataclass
class GatewayEmbedder:
    """Adapter exposing a Gateway as a similarity embedding provider."""

    gateway: Gateway
    signed: bool = True

    def embed(self, texts: list[str]) -> list[list[float]]:
        return self.gateway.embed(texts)


def record_fixtures(gateway: Gateway, requests: Iterable[ChatRequest]) -> int:
    """Run requests through a recording gateway; return distinct digests touched.

    Requires a live backend (directly or via already-complete cache
    entries); afterwards the gateway's cache directory replays the whole
    session byte-identically.
    """
    digests: set[str] = set()
    for request in requests:
        gateway.complete(request)
        digests.add(chat_digest(request))
    return len(digests)
