"""Chat and embedding providers behind two tiny HTTP protocols.

Chat:   POST /chat  {"model", "system", "messages": [{"role", "content"}]}
        -> {"content": "..."} (optional prompt_tokens / completion_tokens)
Embed:  POST /embed {"model", "texts": [...]}
        -> {"model", "dimension", "vectors": [[...], ...]}

Besides the HTTP clients there are offline substitutes: a stub chat provider
answering from a canned-response file, a deterministic feature-hash embedder,
and an ASGI app serving both protocols for tests and local runs. Provider
URLs select the implementation: http(s):// for real endpoints, stub://<file>
for the canned chat provider, hash://<dim> for the local embedder.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx
from pydantic import BaseModel

from .errors import ProviderTimeout, ProviderUnavailable
from .retrieval import tokenize

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 30_000
DEFAULT_RETRIES = 2
DEFAULT_MAX_INFLIGHT = 8
HASH_EMBED_DIMENSION = 384


@dataclass(frozen=True)
class EmbeddingResult:
    model: str
    dimension: int
    vectors: list[list[float]]


@dataclass(frozen=True)
class GenerationResult:
    content: str
    attempts: int
    latency_ms: float
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


class _RetryingHttp:
    """Shared POST-with-retries plumbing for both protocol clients."""

    def __init__(
        self,
        url: str,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        retries: int = DEFAULT_RETRIES,
        max_inflight: int = DEFAULT_MAX_INFLIGHT,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url.rstrip("/")
        self.retries = retries
        self._semaphore = threading.Semaphore(max_inflight)
        self._client = httpx.Client(
            timeout=timeout_ms / 1000.0, transport=transport
        )

    def post(self, path: str, payload: dict) -> tuple[dict, int]:
        """POST with retries; returns (json body, attempts used)."""
        attempts = 0
        last_exc: Exception | None = None
        timed_out = False
        while attempts <= self.retries:
            attempts += 1
            try:
                with self._semaphore:
                    response = self._client.post(self.url + path, json=payload)
                response.raise_for_status()
                return response.json(), attempts
            except httpx.TimeoutException as exc:
                last_exc = exc
                timed_out = True
            except (httpx.HTTPError, json.JSONDecodeError) as exc:
                last_exc = exc
            logger.warning("provider call %s failed (attempt %d): %s",
                           path, attempts, last_exc)
        if timed_out:
            raise ProviderTimeout(
                f"{self.url}{path} timed out after {attempts} attempts"
            ) from last_exc
        raise ProviderUnavailable(
            f"{self.url}{path} unavailable after {attempts} attempts: {last_exc}"
        ) from last_exc

    def reachable(self) -> bool:
        try:
            self._client.get(self.url + "/health")
            return True
        except httpx.HTTPError:
            return False


class HttpChatProvider:
    def __init__(self, url: str, model: str = "default", **kwargs):
        self.model = model
        self._http = _RetryingHttp(url, **kwargs)

    def generate(self, system: str, user_content: str) -> GenerationResult:
        payload = {
            "model": self.model,
            "system": system,
            "messages": [{"role": "user", "content": user_content}],
        }
        started = time.monotonic()
        body, attempts = self._http.post("/chat", payload)
        latency_ms = (time.monotonic() - started) * 1000.0
        if "content" not in body:
            raise ProviderUnavailable("chat response missing 'content'")
        return GenerationResult(
            content=body["content"],
            attempts=attempts,
            latency_ms=latency_ms,
            prompt_tokens=body.get("prompt_tokens"),
            completion_tokens=body.get("completion_tokens"),
        )

    def reachable(self) -> bool:
        return self._http.reachable()


class HttpEmbeddingProvider:
    def __init__(self, url: str, model: str = "default", **kwargs):
        self.model = model
        self._http = _RetryingHttp(url, **kwargs)

    def embed(self, texts: list[str]) -> EmbeddingResult:
        payload = {"model": self.model, "texts": list(texts)}
        body, _ = self._http.post("/embed", payload)
        try:
            return EmbeddingResult(
                model=body["model"],
                dimension=int(body["dimension"]),
                vectors=[list(map(float, v)) for v in body["vectors"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"malformed embed response: {exc}") from exc

    def reachable(self) -> bool:
        return self._http.reachable()


class StubChatProvider:
    """Canned chat provider for offline runs.

    The canned-response file maps exact user text to a reply and may define
    a "default" fallback. Lookups use the last user message content.
    """

    def __init__(self, responses: dict[str, str], default: str | None = None,
                 model: str = "stub"):
        self.model = model
        self._responses = dict(responses)
        self._default = default

    @classmethod
    def from_file(cls, path: str | Path) -> "StubChatProvider":
        raw = json.loads(Path(path).read_text("utf-8"))
        return cls(responses=raw.get("responses", {}), default=raw.get("default"))

    def lookup(self, user_content: str) -> str:
        # The pipeline prepends context blocks; canned keys match the bare
        # question, so fall back to a suffix match on the last line.
        if user_content in self._responses:
            return self._responses[user_content]
        last_line = user_content.strip().splitlines()[-1] if user_content.strip() else ""
        if last_line in self._responses:
            return self._responses[last_line]
        if self._default is not None:
            return self._default
        raise ProviderUnavailable("stub provider has no canned response")

    def generate(self, system: str, user_content: str) -> GenerationResult:
        return GenerationResult(
            content=self.lookup(user_content), attempts=1, latency_ms=0.0
        )

    def reachable(self) -> bool:
        return True


class HashEmbeddingProvider:
    """Deterministic local embedder (feature hashing, L2-normalized).

    Not a semantic model: it exists so embedding-mode code paths can run
    offline and reproducibly. Tokens are hashed with sha256 into a fixed
    number of signed buckets.
    """

    def __init__(self, dimension: int = HASH_EMBED_DIMENSION):
        if dimension < 2:
            raise ValueError("dimension must be at least 2")
        self.dimension = dimension
        self.model = f"feature-hash-{dimension}"

    def _vector(self, text: str) -> list[float]:
        vec = [0.0] * self.dimension
        for token in tokenize(text):
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dimension
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = math.sqrt(sum(x * x for x in vec))
        if norm == 0.0:
            vec[0] = 1.0  # degenerate text (no tokens): fixed unit vector
            return vec
        return [x / norm for x in vec]

    def embed(self, texts: list[str]) -> EmbeddingResult:
        return EmbeddingResult(
            model=self.model,
            dimension=self.dimension,
            vectors=[self._vector(t) for t in texts],
        )

    def reachable(self) -> bool:
        return True


def build_chat_provider(url: str | None, model: str = "default", **kwargs):
    """Build a chat provider from a URL; stub://<file> selects the stub."""
    if url is None:
        return None
    if url.startswith("stub://"):
        return StubChatProvider.from_file(url[len("stub://"):])
    return HttpChatProvider(url, model=model, **kwargs)


def build_embedding_provider(url: str | None, model: str = "default", **kwargs):
    """Build an embedder from a URL; hash://<dim> selects the local one."""
    if url is None:
        return None
    if url.startswith("hash://"):
        suffix = url[len("hash://"):] or str(HASH_EMBED_DIMENSION)
        return HashEmbeddingProvider(dimension=int(suffix))
    return HttpEmbeddingProvider(url, model=model, **kwargs)


# Request models for the protocol endpoints; module scope so FastAPI can
# resolve the (deferred) annotations when create_stub_app builds the app.
class ChatProtocolRequest(BaseModel):
    model: str
    system: str
    messages: list[dict]


class EmbedProtocolRequest(BaseModel):
    model: str
    texts: list[str]


def create_stub_app(responses_path: str | Path | None = None,
                    dimension: int = HASH_EMBED_DIMENSION):
    """ASGI app implementing both provider protocols for offline serving."""
    from fastapi import FastAPI

    chat = (
        StubChatProvider.from_file(responses_path)
        if responses_path is not None
        else StubChatProvider(responses={}, default=None)
    )
    embedder = HashEmbeddingProvider(dimension=dimension)
    app = FastAPI(title="labassist stub providers")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/chat")
    def chat_endpoint(request: ChatProtocolRequest) -> dict:
        user = ""
        for message in request.messages:
            if message.get("role") == "user":
                user = message.get("content", "")
        return {"content": chat.lookup(user)}

    @app.post("/embed")
    def embed_endpoint(request: EmbedProtocolRequest) -> dict:
        result = embedder.embed(request.texts)
        return {
            "model": result.model,
            "dimension": result.dimension,
            "vectors": result.vectors,
        }

    return app
