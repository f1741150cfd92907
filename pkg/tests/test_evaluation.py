"""Dataset loading, similarity cells, refusal tallies, rubric aggregation."""

from __future__ import annotations

import json

import pytest

from labassist.errors import EmptyPanel, IncompleteDataset, OutOfRangeScore
from labassist.evaluation import (
    Dataset,
    QAPair,
    RubricScores,
    SimilarityRecord,
    aggregate_rubric,
    classify_records,
    count_refusals,
    load_dataset,
    load_rubric,
    rescore_dataset,
    run_evaluation,
    score_similarity,
)
from labassist.guardrails import RefusalClass
from labassist.providers import HashEmbeddingProvider
from labassist.retrieval import cosine_similarity

FIXTURE_ROWS = 21


def write_jsonl(tmp_path, rows, name="data.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", "utf-8")
    return path


def make_row(pair_id, scope="in_manual", rag_sim=0.5, no_rag_sim=0.4):
    return {
        "id": pair_id,
        "question": f"q{pair_id}",
        "reference_answer": f"ref{pair_id}",
        "scope": scope,
        "responses": {
            "rag": {"text": f"rag answer {pair_id}", "similarity": rag_sim},
            "no_rag": {"text": f"no rag answer {pair_id}", "similarity": no_rag_sim},
        },
    }


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def test_load_fixture_dataset_shape(dataset):
    assert len(dataset.pairs) == FIXTURE_ROWS
    assert len(dataset.records) == 2 * FIXTURE_ROWS
    scopes = {p.scope for p in dataset.pairs}
    assert scopes == {"in_manual", "out_of_manual"}
    assert dataset.pair(1).language == "en"
    with pytest.raises(KeyError):
        dataset.pair(999)


def test_fixture_missing_similarities_are_none(dataset):
    missing = [
        r.pair_id
        for r in dataset.records
        if r.condition == "rag" and r.similarity is None
    ]
    assert missing == [19, 20, 21]


def test_load_rejects_bad_rows(tmp_path):
    cases = [
        ([{"id": 1}], "missing field"),
        ([make_row(1) | {"scope": "elsewhere"}], "unknown scope"),
        ([make_row(1), make_row(1)], "duplicate pair id"),
        ([], "no rows"),
    ]
    for rows, fragment in cases:
        path = write_jsonl(tmp_path, rows)
        with pytest.raises(IncompleteDataset, match=fragment):
            load_dataset(path)


def test_load_rejects_missing_condition(tmp_path):
    row = make_row(1)
    del row["responses"]["no_rag"]
    path = write_jsonl(tmp_path, [row])
    with pytest.raises(IncompleteDataset, match="missing 'no_rag' response"):
        load_dataset(path)


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": 1, "question": \n', "utf-8")
    with pytest.raises(IncompleteDataset, match="invalid JSON"):
        load_dataset(path)


def test_load_skips_blank_lines(tmp_path):
    path = tmp_path / "gaps.jsonl"
    path.write_text(
        json.dumps(make_row(1)) + "\n\n" + json.dumps(make_row(2)) + "\n", "utf-8"
    )
    assert len(load_dataset(path).pairs) == 2


# ---------------------------------------------------------------------------
# Fixture-mode report
# ---------------------------------------------------------------------------


def test_fixture_cell_means(dataset):
    report = run_evaluation(dataset)
    cells = report.cells
    assert cells["in_manual/rag"].n == 8
    assert cells["in_manual/rag"].mean == pytest.approx(0.585, abs=1e-12)
    assert cells["in_manual/no_rag"].mean == pytest.approx(0.49875, abs=1e-12)
    assert cells["out_of_manual/no_rag"].n == 13
    assert cells["out_of_manual/no_rag"].mean == pytest.approx(
        0.40769230769230774, abs=1e-12
    )
    assert cells["out_of_manual/rag"].n == 10
    assert cells["out_of_manual/rag"].mean == pytest.approx(0.321, abs=1e-12)


def test_fixture_u_omitted_with_reason(dataset):
    report = run_evaluation(dataset)
    assert report.mann_whitney is None
    assert report.mann_whitney_omitted_reason == (
        "similarity missing for pairs 19, 20, 21"
    )


def test_fixture_refusal_counts(dataset):
    report = run_evaluation(dataset)
    counts = report.refusal_counts
    assert counts["explicit_refusal"] == 4
    assert counts["full_answer"] == 0
    assert counts["safety_warning"] + counts["partial_with_escalation"] == 9
    assert sum(counts.values()) == 13


def test_complete_synthetic_dataset_runs_u():
    rows = [make_row(i, "in_manual", 0.5 + i / 100, 0.4) for i in range(1, 4)]
    rows += [make_row(i, "out_of_manual", 0.2 + i / 100, 0.3) for i in range(4, 8)]
    dataset = Dataset(pairs=[], records=[])
    import tempfile, pathlib

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "synthetic.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", "utf-8")
        dataset = load_dataset(path)
    report = run_evaluation(dataset)
    assert report.mann_whitney is not None
    assert report.mann_whitney_omitted_reason is None
    assert report.mann_whitney.u == 12.0  # all xs above all ys


def test_unknown_mode_rejected(dataset):
    with pytest.raises(ValueError, match="unknown evaluation mode"):
        run_evaluation(dataset, mode="weird")


def test_live_mode_requires_embedder(dataset):
    with pytest.raises(IncompleteDataset, match="live mode requires"):
        run_evaluation(dataset, mode="live")


def test_live_mode_rescoring_overwrites_similarities(dataset):
    embedder = HashEmbeddingProvider(64)
    report = run_evaluation(dataset, mode="live", embedder=embedder)
    assert report.mode == "live"
    # Every record now has a recomputed score, so U is no longer omitted.
    assert report.mann_whitney is not None
    assert all(r.similarity is not None for r in dataset.records)
    record = dataset.records[0]
    expected = score_similarity(
        dataset.pair(record.pair_id).reference_answer,
        record.response_text,
        embedder,
    )
    assert record.similarity == pytest.approx(expected, abs=1e-12)


def test_rescore_matches_pairwise_scoring(dataset):
    embedder = HashEmbeddingProvider(32)
    rescore_dataset(dataset, embedder)
    for record in dataset.records[:6]:
        ref = dataset.pair(record.pair_id).reference_answer
        result = embedder.embed([ref, record.response_text])
        assert record.similarity == pytest.approx(
            cosine_similarity(result.vectors[0], result.vectors[1]), abs=1e-12
        )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def test_report_json_is_deterministic(dataset, lexicons):
    a = run_evaluation(dataset, lexicons=lexicons).to_json()
    b = run_evaluation(dataset, lexicons=lexicons).to_json()
    assert a == b
    payload = json.loads(a)
    assert payload["mode"] == "fixture"
    assert payload["mann_whitney"] is None
    assert set(payload["cells"]) == {
        "in_manual/rag", "in_manual/no_rag", "out_of_manual/rag", "out_of_manual/no_rag",
    }
    assert "std_population" not in payload["cells"]["in_manual/rag"]


def test_report_verbose_includes_population_std(dataset):
    payload = json.loads(run_evaluation(dataset).to_json(verbose=True))
    assert "std_population" in payload["cells"]["in_manual/rag"]


def test_report_csv_layout(dataset):
    lines = run_evaluation(dataset).to_csv().splitlines()
    assert lines[0] == "scope,condition,n,mean,std,min,max"
    assert len(lines) == 5
    assert lines[1].startswith("in_manual,rag,8,0.585")
    assert lines[3].startswith("out_of_manual,rag,10,")


def test_report_json_round_trips_mann_whitney():
    rows = [make_row(i, "in_manual") for i in range(1, 3)]
    rows += [make_row(i, "out_of_manual", rag_sim=0.1) for i in range(3, 5)]
    import tempfile, pathlib

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "mini.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", "utf-8")
        report = run_evaluation(load_dataset(path))
    payload = json.loads(report.to_json())
    mw = payload["mann_whitney"]
    assert mw["u"] == 4.0
    assert mw["xs"] == "in_manual/rag"
    assert mw["ys"] == "out_of_manual/rag"
    assert mw["method"] == "tie_enumeration"


# ---------------------------------------------------------------------------
# Classification helpers
# ---------------------------------------------------------------------------


def test_classify_records_covers_all(dataset, lexicons):
    classify_records(dataset, lexicons)
    assert all(r.refusal is not None for r in dataset.records)


def test_count_refusals_requires_classification(dataset):
    with pytest.raises(IncompleteDataset, match="not classified"):
        count_refusals(dataset.records)


def test_count_refusals_tally():
    records = [
        SimilarityRecord(1, "rag", "x", refusal=RefusalClass.EXPLICIT_REFUSAL),
        SimilarityRecord(2, "rag", "y", refusal=RefusalClass.EXPLICIT_REFUSAL),
        SimilarityRecord(3, "rag", "z", refusal=RefusalClass.FULL_ANSWER),
    ]
    counts = count_refusals(records)
    assert counts["explicit_refusal"] == 2
    assert counts["full_answer"] == 1
    assert counts["safety_warning"] == 0
    assert counts["partial_with_escalation"] == 0


# ---------------------------------------------------------------------------
# Rubric
# ---------------------------------------------------------------------------


def test_rubric_aggregation_hand_cases():
    scores = RubricScores(
        evaluators=[
            {"utility": 4, "safety": 4},
            {"utility": 3, "safety": 4},
            {"utility": 3, "safety": 4},
            {"utility": 3, "safety": 4},
        ]
    )
    utility, safety = aggregate_rubric(scores)
    assert utility == 3.25
    assert safety == 4.0


def test_rubric_fixture_file(fixtures_dir):
    scores = load_rubric(fixtures_dir / "rubric.json")
    assert aggregate_rubric(scores) == (3.25, 4.0)


def test_rubric_rejects_bad_scores():
    with pytest.raises(EmptyPanel):
        aggregate_rubric(RubricScores(evaluators=[]))
    with pytest.raises(OutOfRangeScore):
        aggregate_rubric(RubricScores(evaluators=[{"utility": 5, "safety": 4}]))
    with pytest.raises(OutOfRangeScore):
        aggregate_rubric(RubricScores(evaluators=[{"utility": 4}]))
    with pytest.raises(OutOfRangeScore):
        aggregate_rubric(RubricScores(evaluators=[{"utility": 2.5, "safety": 4}]))


def test_rubric_in_report(dataset, fixtures_dir):
    rubric = load_rubric(fixtures_dir / "rubric.json")
    report = run_evaluation(dataset, rubric=rubric)
    assert report.rubric == {
        "utility_mean": 3.25,
        "safety_mean": 4.0,
        "evaluators": 4,
    }
    assert run_evaluation(dataset).rubric is None
