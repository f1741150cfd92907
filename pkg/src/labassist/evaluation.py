"""Evaluation harness: datasets, similarity scoring, reports.

Datasets are JSON Lines; one row per QA pair with stored response texts and
(optionally) stored similarity scores for the rag / no_rag conditions.
Fixture mode reuses the stored scores, live mode recomputes them with the
configured embedding provider. Reports are deterministic: the same dataset
and scores always serialize to identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyPanel, IncompleteDataset, OutOfRangeScore
from .guardrails import (
    Lexicons,
    RefusalClass,
    ResponseMode,
    classify_refusal,
    detect_language,
    load_lexicons,
    validate_response,
)
from .retrieval import cosine_similarity
from .stats import GroupStats, MannWhitneyResult, group_stats, mann_whitney_u

logger = logging.getLogger(__name__)

SCOPE_IN = "in_manual"
SCOPE_OUT = "out_of_manual"
CONDITION_RAG = "rag"
CONDITION_NO_RAG = "no_rag"

SCOPES = (SCOPE_IN, SCOPE_OUT)
CONDITIONS = (CONDITION_RAG, CONDITION_NO_RAG)

# Embedding model the stored similarity scores were computed with; treated as an
# opaque identifier passed through to the provider.
REFERENCE_EMBED_MODEL = "paraphrase-multilingual-MiniLM-L12-v2"


@dataclass(frozen=True)
class QAPair:
    id: int
    question: str
    reference_answer: str
    scope: str
    language: str = "en"


@dataclass
class SimilarityRecord:
    pair_id: int
    condition: str
    response_text: str
    similarity: float | None = None
    refusal: RefusalClass | None = None


@dataclass
class Dataset:
    pairs: list[QAPair]
    records: list[SimilarityRecord]

    def pair(self, pair_id: int) -> QAPair:
        for p in self.pairs:
            if p.id == pair_id:
                return p
        raise KeyError(pair_id)


@dataclass
class RubricScores:
    """Per-evaluator 4-point utility and safety scores."""

    evaluators: list[dict[str, int]]


@dataclass
class EvalReport:
    cells: dict[str, GroupStats]
    mann_whitney: MannWhitneyResult | None
    mann_whitney_omitted_reason: str | None
    refusal_counts: dict[str, int]
    rubric: dict[str, float] | None = None
    mode: str = "fixture"

    def to_dict(self, verbose: bool = False) -> dict:
        cells = {}
        for key, stats in self.cells.items():
            cell = {
                "n": stats.n,
                "mean": stats.mean,
                "std": stats.std,
                "min": stats.min,
                "max": stats.max,
            }
            if verbose:
                cell["std_population"] = stats.std_population
            cells[key] = cell
        mw: dict | None = None
        if self.mann_whitney is not None:
            mw = {
                "u": self.mann_whitney.u,
                "p_exact": self.mann_whitney.p_exact,
                "p_normal": self.mann_whitney.p_normal,
                "method": self.mann_whitney.method,
                "xs": f"{SCOPE_IN}/{CONDITION_RAG}",
                "ys": f"{SCOPE_OUT}/{CONDITION_RAG}",
            }
        return {
            "mode": self.mode,
            "cells": cells,
            "mann_whitney": mw,
            "mann_whitney_omitted_reason": self.mann_whitney_omitted_reason,
            "refusal_counts": self.refusal_counts,
            "rubric": self.rubric,
        }

    def to_json(self, verbose: bool = False) -> str:
        return json.dumps(
            self.to_dict(verbose), sort_keys=True, indent=2, ensure_ascii=False
        ) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scope", "condition", "n", "mean", "std", "min", "max"])
        for scope in SCOPES:
            for condition in CONDITIONS:
                stats = self.cells.get(f"{scope}/{condition}")
                if stats is None:
                    continue
                writer.writerow(
                    [scope, condition, stats.n, stats.mean, stats.std, stats.min, stats.max]
                )
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Dataset loading
# ---------------------------------------------------------------------------


def load_dataset(path: str | Path) -> Dataset:
    """Load a JSON Lines dataset; raises IncompleteDataset on missing fields."""
    pairs: list[QAPair] = []
    records: list[SimilarityRecord] = []
    seen_ids: set[int] = set()
    for line_no, line in enumerate(
        Path(path).read_text("utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IncompleteDataset(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        try:
            pair = QAPair(
                id=int(row["id"]),
                question=row["question"],
                reference_answer=row["reference_answer"],
                scope=row["scope"],
                language=row.get("language", "en"),
            )
        except KeyError as exc:
            raise IncompleteDataset(f"{path}:{line_no}: missing field {exc}") from exc
        if pair.scope not in SCOPES:
            raise IncompleteDataset(f"{path}:{line_no}: unknown scope '{pair.scope}'")
        if pair.id in seen_ids:
            raise IncompleteDataset(f"{path}:{line_no}: duplicate pair id {pair.id}")
        seen_ids.add(pair.id)
        pairs.append(pair)
        responses = row.get("responses", {})
        for condition in CONDITIONS:
            if condition not in responses:
                raise IncompleteDataset(
                    f"{path}:{line_no}: missing '{condition}' response"
                )
            entry = responses[condition]
            records.append(
                SimilarityRecord(
                    pair_id=pair.id,
                    condition=condition,
                    response_text=entry["text"],
                    similarity=entry.get("similarity"),
                )
            )
    if not pairs:
        raise IncompleteDataset(f"{path}: dataset has no rows")
    return Dataset(pairs=pairs, records=records)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def score_similarity(reference: str, response: str, embedder) -> float:
    """Cosine similarity between reference and response embeddings."""
    result = embedder.embed([reference, response])
    return cosine_similarity(result.vectors[0], result.vectors[1])


def rescore_dataset(dataset: Dataset, embedder) -> None:
    """Recompute every record's similarity in place (live mode).

    Texts are embedded in one deterministic batch (first-seen order of the
    unique strings) so repeated runs issue identical provider requests.
    """
    texts: list[str] = []
    index: dict[str, int] = {}

    def slot(text: str) -> int:
        if text not in index:
            index[text] = len(texts)
            texts.append(text)
        return index[text]

    wanted: list[tuple[SimilarityRecord, int, int]] = []
    for record in dataset.records:
        ref = dataset.pair(record.pair_id).reference_answer
        wanted.append((record, slot(ref), slot(record.response_text)))
    result = embedder.embed(texts)
    for record, ref_i, resp_i in wanted:
        record.similarity = cosine_similarity(
            result.vectors[ref_i], result.vectors[resp_i]
        )


def classify_records(dataset: Dataset, lexicons: Lexicons) -> None:
    """Attach a refusal class to every record, based on its text alone."""
    for record in dataset.records:
        report = validate_response(
            record.response_text,
            ResponseMode.RETRIEVAL,
            detect_language(record.response_text),
        )
        record.refusal = classify_refusal(report, record.response_text, lexicons)


def count_refusals(records: list[SimilarityRecord]) -> dict[str, int]:
    """Tally refusal classes over already-classified records."""
    counts = {cls.value: 0 for cls in RefusalClass}
    for record in records:
        if record.refusal is None:
            raise IncompleteDataset(
                f"record {record.pair_id}/{record.condition} is not classified"
            )
        counts[record.refusal.value] += 1
    return counts


def aggregate_rubric(scores: RubricScores) -> tuple[float, float]:
    """Mean utility and safety over the evaluator panel (4-point scales)."""
    if not scores.evaluators:
        raise EmptyPanel("rubric aggregation requires at least one evaluator")
    for entry in scores.evaluators:
        for key in ("utility", "safety"):
            value = entry.get(key)
            if not isinstance(value, int) or not 1 <= value <= 4:
                raise OutOfRangeScore(f"{key} score {value!r} is not on the 1-4 scale")
    utility = sum(e["utility"] for e in scores.evaluators) / len(scores.evaluators)
    safety = sum(e["safety"] for e in scores.evaluators) / len(scores.evaluators)
    return utility, safety


def load_rubric(path: str | Path) -> RubricScores:
    raw = json.loads(Path(path).read_text("utf-8"))
    return RubricScores(evaluators=list(raw["evaluators"]))


# ---------------------------------------------------------------------------
# Full evaluation
# ---------------------------------------------------------------------------


def _cell_records(
    dataset: Dataset, scope: str, condition: str
) -> list[SimilarityRecord]:
    ids = {p.id for p in dataset.pairs if p.scope == scope}
    return [
        r for r in dataset.records if r.condition == condition and r.pair_id in ids
    ]


def run_evaluation(
    dataset: Dataset,
    *,
    mode: str = "fixture",
    embedder=None,
    lexicons: Lexicons | None = None,
    rubric: RubricScores | None = None,
) -> EvalReport:
    """Compute the full report over one dataset.

    mode="fixture" uses stored similarity scores; mode="live" recomputes
    them with the given embedder (required in that mode). The U test always
    compares in-manual rag scores against out-of-manual rag scores and is
    omitted (with a reason) when any rag similarity cell is missing.
    """
    if mode not in ("fixture", "live"):
        raise ValueError(f"unknown evaluation mode '{mode}'")
    if mode == "live":
        if embedder is None:
            raise IncompleteDataset("live mode requires an embedding provider")
        rescore_dataset(dataset, embedder)

    lexicons = lexicons or load_lexicons()
    classify_records(dataset, lexicons)

    cells: dict[str, GroupStats] = {}
    for scope in SCOPES:
        for condition in CONDITIONS:
            values = [
                r.similarity
                for r in _cell_records(dataset, scope, condition)
                if r.similarity is not None
            ]
            if values:
                cells[f"{scope}/{condition}"] = group_stats(values)

    xs_records = _cell_records(dataset, SCOPE_IN, CONDITION_RAG)
    ys_records = _cell_records(dataset, SCOPE_OUT, CONDITION_RAG)
    missing = sorted(
        r.pair_id for r in xs_records + ys_records if r.similarity is None
    )
    mw: MannWhitneyResult | None = None
    reason: str | None = None
    if missing:
        reason = "similarity missing for pairs " + ", ".join(map(str, missing))
    elif not xs_records or not ys_records:
        reason = "a scope group has no rag records"
    else:
        mw = mann_whitney_u(
            [r.similarity for r in xs_records], [r.similarity for r in ys_records]
        )

    refusal_counts = count_refusals(
        [
            r
            for r in dataset.records
            if r.condition == CONDITION_RAG
            and dataset.pair(r.pair_id).scope == SCOPE_OUT
        ]
    )

    rubric_out: dict[str, float | int] | None = None
    if rubric is not None:
        utility, safety = aggregate_rubric(rubric)
        rubric_out = {
            "utility_mean": utility,
            "safety_mean": safety,
            "evaluators": len(rubric.evaluators),
        }

    return EvalReport(
        cells=cells,
        mann_whitney=mw,
        mann_whitney_omitted_reason=reason,
        refusal_counts=refusal_counts,
        rubric=rubric_out,
        mode=mode,
    )
