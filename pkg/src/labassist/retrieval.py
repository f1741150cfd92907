"""Chunking, scoring, and the server-side grounding gate.

One chunk per manual section. Scoring is either embedding cosine similarity
(when an embedding provider is configured) or a BM25 lexical fallback
(k1 = 1.2, b = 0.75, corpus statistics from the resolved catalog). The
grounding gate is the deterministic second safety layer: whatever the chat
model would claim, an answer is only attempted when the best retrieval score
clears the threshold.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    DimensionMismatch,
    ModelMismatch,
    ProviderUnavailable,
    ZeroVector,
)
from .manuals import ManualCatalog, ManualDocument

logger = logging.getLogger(__name__)

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class Grounding(str, Enum):
    GROUNDED = "grounded"
    UNGROUNDED = "ungrounded"


class Method(str, Enum):
    EMBEDDING = "embedding"
    LEXICAL = "lexical"


@dataclass(frozen=True)
class Chunk:
    doc: str           # logical name
    source_file: str
    section_id: str
    text: str


@dataclass(frozen=True)
class RetrievalHit:
    chunk: Chunk
    score: float
    method: Method


@dataclass
class RetrievalConfig:
    top_k: int = 4
    grounding_threshold: float = 0.35
    lexical_fallback: bool = True
    instructional_section_cap: int = 16


def tokenize(text: str) -> list[str]:
    """Case-folded alphanumeric runs; punctuation and underscores split."""
    return _TOKEN_RE.findall(text.casefold())


def chunk_document(doc: ManualDocument) -> list[Chunk]:
    """One chunk per section; the text starts with '<id> <title>'."""
    chunks = []
    for section in doc.sections:
        head = f"{section.id} {section.title}".strip()
        chunks.append(
            Chunk(
                doc=doc.logical_name,
                source_file=doc.source_file,
                section_id=section.id,
                text=f"{head}\n{section.body}",
            )
        )
    return chunks


def chunk_catalog(catalog: ManualCatalog) -> list[Chunk]:
    chunks: list[Chunk] = []
    for doc in catalog.resolved_documents():
        chunks.extend(chunk_document(doc))
    return chunks


def cosine_similarity(a: list[float], b: list[float]) -> float:
    if len(a) != len(b):
        raise DimensionMismatch(f"vector lengths differ: {len(a)} != {len(b)}")
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (norm_a * norm_b)


class Bm25Index:
    """BM25 over a fixed chunk list.

    idf uses the non-negative variant ln(1 + (N - df + 0.5) / (df + 0.5));
    term frequency saturation is tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl)).
    Query tokens are scored as given, so repeated terms count twice.
    """

    def __init__(self, chunks: list[Chunk], k1: float = BM25_K1, b: float = BM25_B):
        self.chunks = list(chunks)
        self.k1 = k1
        self.b = b
        self._doc_tokens = [tokenize(c.text) for c in self.chunks]
        self._doc_tf: list[dict[str, int]] = []
        df: dict[str, int] = {}
        for tokens in self._doc_tokens:
            tf: dict[str, int] = {}
            for tok in tokens:
                tf[tok] = tf.get(tok, 0) + 1
            self._doc_tf.append(tf)
            for tok in tf:
                df[tok] = df.get(tok, 0) + 1
        self._df = df
        n = len(self.chunks)
        self._idf = {
            tok: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for tok, d in df.items()
        }
        self._avgdl = (
            sum(len(t) for t in self._doc_tokens) / n if n else 0.0
        )

    def score(self, query: str, index: int) -> float:
        tf = self._doc_tf[index]
        dl = len(self._doc_tokens[index])
        score = 0.0
        for tok in tokenize(query):
            f = tf.get(tok)
            if not f:
                continue
            idf = self._idf[tok]
            denom = f + self.k1 * (1.0 - self.b + self.b * dl / self._avgdl)
            score += idf * f * (self.k1 + 1.0) / denom
        return score

    def scores(self, query: str) -> list[float]:
        return [self.score(query, i) for i in range(len(self.chunks))]


def lexical_score(query: str, chunk: Chunk, index: Bm25Index) -> float:
    """BM25 score of one chunk; 0.0 when no query term occurs in it."""
    try:
        pos = index.chunks.index(chunk)
    except ValueError:
        raise ValueError("chunk is not part of the index corpus") from None
    return index.score(query, pos)


def _section_sort_key(section_id: str) -> tuple:
    parts = re.split(r"(\d+)", section_id)
    return tuple(int(p) if p.isdigit() else p for p in parts)


def _hit_order(hit: RetrievalHit) -> tuple:
    return (-hit.score, hit.chunk.doc, _section_sort_key(hit.chunk.section_id))


class Retriever:
    """Retrieval over one immutable catalog snapshot.

    Embedding mode is used when an embedder is configured; chunk embeddings
    are computed once and cached together with the model id, and scoring
    against a different model id is rejected. If the embedder is unreachable
    and lexical_fallback is enabled, BM25 takes over for that query.
    """

    def __init__(self, catalog: ManualCatalog, config: RetrievalConfig, embedder=None):
        self.catalog = catalog
        self.config = config
        self.embedder = embedder
        self.chunks = chunk_catalog(catalog)
        self._bm25 = Bm25Index(self.chunks)
        self._chunk_vectors: list[list[float]] | None = None
        self._model_id: str | None = None

    # -- embedding plumbing -------------------------------------------------

    def _ensure_chunk_vectors(self) -> None:
        if self._chunk_vectors is not None or not self.chunks:
            return
        result = self.embedder.embed([c.text for c in self.chunks])
        vectors = result.vectors
        if any(len(v) != result.dimension for v in vectors):
            raise DimensionMismatch("provider returned inconsistent dimensions")
        self._chunk_vectors = vectors
        self._model_id = result.model

    def _embedding_scores(self, query: str) -> list[float]:
        self._ensure_chunk_vectors()
        result = self.embedder.embed([query])
        if self._model_id is not None and result.model != self._model_id:
            raise ModelMismatch(
                f"index built with '{self._model_id}', query embedded with '{result.model}'"
            )
        qvec = result.vectors[0]
        return [cosine_similarity(qvec, v) for v in self._chunk_vectors or []]

    # -- public API ---------------------------------------------------------

    def retrieve(self, query: str, top_k: int | None = None) -> list[RetrievalHit]:
        """Top-k hits sorted by non-increasing score.

        Ties break by (logical_name, section_id) ascending. Lexical chunks
        with score 0 (no query term present) are not hits at all.
        """
        k = self.config.top_k if top_k is None else top_k
        if not self.chunks or k <= 0:
            return []

        method = Method.LEXICAL
        scores: list[float] | None = None
        if self.embedder is not None:
            try:
                scores = self._embedding_scores(query)
                method = Method.EMBEDDING
            except ProviderUnavailable:
                if not self.config.lexical_fallback:
                    raise
                logger.warning("embedding provider unavailable; lexical fallback")
        if scores is None:
            scores = self._bm25.scores(query)

        hits = [
            RetrievalHit(chunk=c, score=s, method=method)
            for c, s in zip(self.chunks, scores)
            if method is Method.EMBEDDING or s > 0.0
        ]
        hits.sort(key=_hit_order)
        return hits[:k]

    def document_sections(self, logical_name: str) -> list[Chunk]:
        """All chunks of one resolved document, capped for instructional mode."""
        cap = self.config.instructional_section_cap
        selected = [c for c in self.chunks if c.doc == logical_name]
        return selected[:cap]


def retrieve(
    query: str,
    catalog: ManualCatalog,
    config: RetrievalConfig,
    embedder=None,
) -> list[RetrievalHit]:
    """One-shot convenience wrapper around Retriever."""
    return Retriever(catalog, config, embedder).retrieve(query)


def grounding_gate(hits: list[RetrievalHit], config: RetrievalConfig) -> Grounding:
    """Grounded iff the best score clears the threshold.

    Embedding mode compares against grounding_threshold with strict
    less-than, so a best score exactly at the threshold is grounded.
    Lexical hits only exist with score > 0, so any lexical hit grounds.
    Empty hit lists are always ungrounded.
    """
    if not hits:
        return Grounding.UNGROUNDED
    best = max(h.score for h in hits)
    if hits[0].method is Method.EMBEDDING and best < config.grounding_threshold:
        return Grounding.UNGROUNDED
    if best <= 0.0:
        return Grounding.UNGROUNDED
    return Grounding.GROUNDED
