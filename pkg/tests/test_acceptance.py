"""Acceptance criteria, one test per criterion.

Each test prints as one PASS/FAIL line in the terminal summary (see
conftest). Everything runs offline against the fixture manuals and the stub
providers; the two live checks (criteria 3 and 8) additionally exercise a
real embedding endpoint when LASTMILE_EMBED_URL points at one, and otherwise
run their documented offline substitutes only.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import re
import time
from pathlib import Path

import pytest
from starlette.testclient import TestClient

from labassist.cli import main
from labassist.config import ServiceConfig
from labassist.evaluation import (
    REFERENCE_EMBED_MODEL,
    load_dataset,
    load_rubric,
    rescore_dataset,
    run_evaluation,
    RubricScores,
    aggregate_rubric,
    score_similarity,
)
from labassist.guardrails import (
    FIXED,
    Language,
    Pattern,
    ResponseMode,
    detect_language,
    validate_response,
)
from labassist.manuals import parse_manual, resolve_latest, serialize_manual
from labassist.providers import GenerationResult, build_embedding_provider
from labassist.retrieval import cosine_similarity
from labassist.service import create_app
from labassist.stats import mann_whitney_u

logger = logging.getLogger("tests.acceptance")

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
DATASET = FIXTURES / "table_s1.jsonl"

GROUNDING_THRESHOLD = 0.35


def live_embedder():
    """A real embedding provider, or None when offline (the normal case)."""
    url = os.environ.get("LASTMILE_EMBED_URL", "")
    if not url.startswith(("http://", "https://")):
        return None
    provider = build_embedding_provider(url, model=REFERENCE_EMBED_MODEL)
    return provider if provider.reachable() else None


def brute_force_u(xs, ys) -> float:
    u = 0.0
    for x in xs:
        for y in ys:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


class CountingChat:
    """Valid replies if ever called; the tests assert it never is."""

    def __init__(self):
        self.calls = 0

    def generate(self, system: str, user_content: str) -> GenerationResult:
        self.calls += 1
        content = "Follow the posted procedure.\n🔗 Reference: Miniflex.md"
        return GenerationResult(content=content, attempts=1, latency_ms=0.0)

    def reachable(self) -> bool:
        return True


def service_client(tmp_path, chat=None) -> tuple[TestClient, object]:
    config = ServiceConfig(
        manual_dir=str(FIXTURES / "manuals"),
        chat_url=f"stub://{FIXTURES / 'stub_responses.json'}",
        embed_url="hash://384",
        log_path=str(tmp_path / "query_log.jsonl"),
    )
    overrides = {"chat": chat} if chat is not None else {}
    app = create_app(config, **overrides)
    return TestClient(app), app.state.service


# ---------------------------------------------------------------------------
# 1. Fixture statistics
# ---------------------------------------------------------------------------


def test_criterion_01_fixture_statistics(capsys, monkeypatch):
    for var in ("LASTMILE_CONFIG", "LASTMILE_CHAT_URL", "LASTMILE_EMBED_URL"):
        monkeypatch.delenv(var, raising=False)
    started = time.perf_counter()
    assert main(["eval", str(DATASET)]) == 0
    elapsed = time.perf_counter() - started
    report = json.loads(capsys.readouterr().out)
    cells = report["cells"]
    assert abs(cells["in_manual/rag"]["mean"] - 0.585) <= 0.005
    assert abs(cells["in_manual/no_rag"]["mean"] - 0.499) <= 0.005
    assert abs(cells["out_of_manual/no_rag"]["mean"] - 0.408) <= 0.005
    assert elapsed < 1.0, f"eval took {elapsed:.3f}s"


# ---------------------------------------------------------------------------
# 2. Mann-Whitney correctness against a brute-force oracle
# ---------------------------------------------------------------------------


def test_criterion_02_mann_whitney_brute_force():
    rng = random.Random(424242)
    started = time.perf_counter()
    for _ in range(200):
        m = rng.randint(1, 30)
        n = rng.randint(1, 30)
        grid = [0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.5]
        xs = [rng.choice(grid) for _ in range(m)]
        ys = [rng.choice(grid) for _ in range(n)]
        result = mann_whitney_u(xs, ys)
        assert result.u == brute_force_u(xs, ys)
        assert result.u + mann_whitney_u(ys, xs).u == m * n
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"200 instances took {elapsed:.3f}s"


# ---------------------------------------------------------------------------
# 3. Published Mann-Whitney comparison (live), offline substitute always
# ---------------------------------------------------------------------------


def test_criterion_03_mann_whitney_reproduction():
    dataset = load_dataset(DATASET)
    xs = [
        r.similarity for r in dataset.records
        if r.condition == "rag" and dataset.pair(r.pair_id).scope == "in_manual"
    ]
    ys = [
        r.similarity for r in dataset.records
        if r.condition == "rag"
        and dataset.pair(r.pair_id).scope == "out_of_manual"
        and r.similarity is not None
    ]
    assert (len(xs), len(ys)) == (8, 10)
    # Offline substitute: U on the readable scores equals the pair count, 74.
    assert brute_force_u(xs, ys) == 74.0
    assert mann_whitney_u(xs, ys).u == 74.0

    provider = live_embedder()
    if provider is None:
        logger.info("criterion 3 live branch skipped: no embedding endpoint")
        return
    live = load_dataset(DATASET)
    rescore_dataset(live, provider)
    xs_live = [
        r.similarity for r in live.records
        if r.condition == "rag" and live.pair(r.pair_id).scope == "in_manual"
    ]
    ys_live = [
        r.similarity for r in live.records
        if r.condition == "rag" and live.pair(r.pair_id).scope == "out_of_manual"
    ]
    assert (len(xs_live), len(ys_live)) == (8, 13)
    result = mann_whitney_u(xs_live, ys_live)
    assert abs(result.u - 96.0) <= 2.0
    assert result.p_exact < 0.001


# ---------------------------------------------------------------------------
# 4. Refusal taxonomy on the out-of-manual RAG responses
# ---------------------------------------------------------------------------


def test_criterion_04_refusal_taxonomy(caplog):
    dataset = load_dataset(DATASET)
    report = run_evaluation(dataset)
    counts = report.refusal_counts
    assert counts["explicit_refusal"] == 4
    assert counts["full_answer"] == 0
    assert counts["safety_warning"] + counts["partial_with_escalation"] == 9

    by_class: dict[str, list[int]] = {}
    for record in dataset.records:
        if record.condition != "rag":
            continue
        if dataset.pair(record.pair_id).scope != "out_of_manual":
            continue
        by_class.setdefault(record.refusal.value, []).append(record.pair_id)

    split = (counts["safety_warning"], counts["partial_with_escalation"])
    target = (3, 6)
    assert abs(split[0] - target[0]) <= 1
    assert abs(split[1] - target[1]) <= 1
    if split != target:
        with caplog.at_level(logging.WARNING, logger="tests.acceptance"):
            logger.warning(
                "refusal split %s deviates from target %s; "
                "safety_warning rows %s; partial_with_escalation rows %s",
                split, target,
                sorted(by_class.get("safety_warning", [])),
                sorted(by_class.get("partial_with_escalation", [])),
            )
        assert "deviates from target" in caplog.text
        assert "safety_warning rows" in caplog.text


# ---------------------------------------------------------------------------
# 5. Fixed-response byte exactness end to end
# ---------------------------------------------------------------------------


def test_criterion_05_fixed_response_exactness(tmp_path):
    client, _ = service_client(tmp_path)
    with client:
        cases = [
            ("Tell me tomorrow's lottery numbers.", FIXED.pattern_b(Language.EN)),
            ("試料はどのようにセットしますか？", FIXED.pattern_b(Language.JA)),
            ("There is smoke coming from the machine!", FIXED.anomaly(Language.EN)),
            ("煙が出ています。", FIXED.anomaly(Language.JA)),
        ]
        for question, expected in cases:
            body = client.post("/v1/ask", json={"question": question}).json()["body"]
            assert body.encode("utf-8") == expected.encode("utf-8")

    # Every single-character substitution stops the exact-match recognition.
    fixed_strings = [
        (FIXED.pattern_b(Language.EN), Pattern.B),
        (FIXED.pattern_b(Language.JA), Pattern.B),
        (FIXED.anomaly(Language.EN), Pattern.ANOMALY),
    ]
    for text, pattern in fixed_strings:
        assert validate_response(
            text, ResponseMode.RETRIEVAL, detect_language(text)
        ).pattern is pattern
        for i in range(len(text)):
            replacement = "x" if text[i] != "x" else "y"
            mutant = text[:i] + replacement + text[i + 1:]
            report = validate_response(
                mutant, ResponseMode.RETRIEVAL, detect_language(mutant)
            )
            assert report.pattern is not pattern, f"mutation at {i} still matched"
        for mutant in (" " + text, text + " ", text[:-1]):
            report = validate_response(
                mutant, ResponseMode.RETRIEVAL, detect_language(mutant)
            )
            assert report.pattern is not pattern


# ---------------------------------------------------------------------------
# 6. Safety precedence: anomaly screen and grounding gate bypass the provider
# ---------------------------------------------------------------------------


def test_criterion_06_safety_precedence(tmp_path, lexicons):
    chat = CountingChat()
    client, _ = service_client(tmp_path, chat=chat)
    rng = random.Random(20260814)

    en_carriers = [
        "While running a scan I noticed {} coming from the unit. What now?",
        "I can hear {} near the detector, is that normal?",
        "There is {} in the enclosure. Should I keep measuring?",
        "Help, {} appeared during the measurement!",
    ]
    ja_carriers = [
        "測定中に{}があります。どうすればいいですか。",
        "装置から{}がしています。続けてもいいですか。",
        "{}に気づきました。対応を教えてください。",
    ]

    with client:
        for _ in range(100):
            if rng.random() < 0.6:
                term = rng.choice(lexicons.anomaly["en"])
                if rng.random() < 0.3:
                    term = term.upper()
                question = rng.choice(en_carriers).format(term)
                expected = FIXED.anomaly(Language.EN)
            else:
                term = rng.choice(lexicons.anomaly["ja"])
                question = rng.choice(ja_carriers).format(term)
                expected = FIXED.anomaly(Language.JA)
            payload = client.post("/v1/ask", json={"question": question}).json()
            assert payload["body"] == expected
            assert payload["provider_calls"] == 0
            assert payload["pattern"] == "anomaly"
        assert chat.calls == 0  # the anomaly screen never reaches the provider

        consonants = "bcdfghjklmnpqrstvwxz"
        below_gate = 0
        for _ in range(100):
            words = [
                "".join(rng.choice(consonants) for _ in range(rng.randint(4, 8)))
                for _ in range(rng.randint(3, 6))
            ]
            question = " ".join(words) + "?"
            payload = client.post("/v1/ask", json={"question": question}).json()
            best = max((h["score"] for h in payload["hits"]), default=0.0)
            if best < GROUNDING_THRESHOLD:
                below_gate += 1
                assert payload["body"] == FIXED.pattern_b(Language.EN)
                assert payload["provider_calls"] == 0
                assert payload["pattern"] == "B"
        assert below_gate >= 90  # the generator is designed to stay ungrounded
        # The only provider traffic is the handful of hash-collision queries
        # that cleared the gate; everything under it stayed local.
        assert chat.calls == 100 - below_gate


# ---------------------------------------------------------------------------
# 7. Validator soundness, re-checked outside the validator
# ---------------------------------------------------------------------------


def _independent_word_count(text: str) -> int:
    body = [ln for ln in text.splitlines() if not ln.strip().startswith("🔗")]
    tokens = " ".join(body).split()
    return sum(1 for tok in tokens if any(ch.isalnum() for ch in tok))


def _independent_char_count(text: str) -> int:
    body = [ln for ln in text.splitlines() if not ln.strip().startswith("🔗")]
    return sum(1 for ch in "\n".join(body) if not ch.isspace())


def _is_bullet_line(line: str) -> bool:
    stripped = line.lstrip()
    if stripped[:2] in ("- ", "* ", "• "):
        return True
    return re.match(r"\d+\.(?!\d)", stripped) is not None


def test_criterion_07_validator_soundness(stub_chat):
    rng = random.Random(777)
    pool = (
        "check the door interlock before starting and confirm the chiller "
        "flow then load the holder onto the stage and close until it clicks "
        "record the run in the notebook and eject the usb safely"
    ).split()

    candidates: list[str] = list(stub_chat._responses.values())
    dataset = load_dataset(DATASET)
    candidates.extend(r.response_text for r in dataset.records)
    for _ in range(300):
        words = [rng.choice(pool) for _ in range(rng.randint(5, 70))]
        text = " ".join(words)
        roll = rng.random()
        if roll < 0.5:
            text += "\n🔗 Reference: Miniflex.md"
        elif roll < 0.6:
            text += "\n🔗 Reference: Miniflex.md\n🔗 Reference: Other.md"
        if rng.random() < 0.2:
            text = f"- {text}"
        candidates.append(text)

    pattern_a_seen = 0
    for text in candidates:
        try:
            language = detect_language(text)
        except Exception:
            continue
        report = validate_response(text, ResponseMode.RETRIEVAL, language)
        if report.pattern is not Pattern.A or report.is_malformed:
            continue
        pattern_a_seen += 1
        if language is Language.JA:
            assert _independent_char_count(text) <= 100
        else:
            assert _independent_word_count(text) <= 50
        lines = text.splitlines()
        ref_lines = [ln for ln in lines if ln.strip().startswith("🔗")]
        assert len(ref_lines) == 1
        assert lines[-1].strip().startswith("🔗")
        assert not any(
            _is_bullet_line(ln) for ln in lines if not ln.strip().startswith("🔗")
        )
    assert pattern_a_seen >= 30

    for name in ("advisory_report_en.txt", "advisory_report_ja.txt"):
        text = (FIXTURES / name).read_text("utf-8")
        report = validate_response(
            text, ResponseMode.INSTRUCTIONAL, detect_language(text)
        )
        assert report.pattern is Pattern.ADVISORY
        assert report.hard_violations == []


# ---------------------------------------------------------------------------
# 8. Cosine and embedding properties
# ---------------------------------------------------------------------------


def test_criterion_08_cosine_embedding_properties():
    rng = random.Random(99)
    for _ in range(200):
        dim = rng.randint(2, 24)
        a = [rng.uniform(-10, 10) for _ in range(dim)]
        b = [rng.uniform(-10, 10) for _ in range(dim)]
        if math.sqrt(sum(x * x for x in a)) < 1e-6:
            a[0] += 1.0
        if math.sqrt(sum(x * x for x in b)) < 1e-6:
            b[0] += 1.0
        scale = rng.uniform(0.001, 1000.0)
        assert abs(cosine_similarity(a, a) - 1.0) <= 1e-9
        assert abs(cosine_similarity(a, b) - cosine_similarity(b, a)) <= 1e-9
        scaled = [scale * x for x in a]
        assert abs(
            cosine_similarity(scaled, b) - cosine_similarity(a, b)
        ) <= 1e-9

    provider = live_embedder()
    if provider is None:
        logger.info("criterion 8 live branch skipped: no embedding endpoint")
        return
    dataset = load_dataset(DATASET)
    for pair_id, expected in ((5, 0.723), (11, 0.127)):
        record = next(
            r for r in dataset.records
            if r.pair_id == pair_id and r.condition == "rag"
        )
        live = score_similarity(
            dataset.pair(pair_id).reference_answer, record.response_text, provider
        )
        assert abs(live - expected) <= 0.02


# ---------------------------------------------------------------------------
# 9. Round-trip identity and version resolution
# ---------------------------------------------------------------------------


def test_criterion_09_round_trip_and_versioning():
    rng = random.Random(31337)
    en_words = "alpha beta gamma delta press hold confirm stage door".split()
    ja_lines = ["扉を閉めてください。", "電源を入れます。", "記録を残します。"]

    for case in range(100):
        name = "".join(rng.choice("ABCDEFGH") for _ in range(4))
        version = rng.randint(0, 9)
        source = f"{name}_v{version}.md" if version else f"{name}.md"
        sections = []
        used_ids: set[str] = set()
        for _ in range(rng.randint(1, 6)):
            sid = f"{rng.randint(1, 9)}-{rng.randint(1, 9)}"
            if sid in used_ids:
                continue
            used_ids.add(sid)
            title = " ".join(rng.sample(en_words, rng.randint(0, 3)))
            tags = sorted(rng.sample(["safety", "startup", "shutdown"],
                                     rng.randint(0, 2)))
            if rng.random() < 0.25:
                body = rng.choice(ja_lines)
            else:
                body = " ".join(rng.choice(en_words) for _ in range(rng.randint(3, 12)))
            header = f"## {sid} {title}".rstrip()
            if tags:
                header += f" [{','.join(tags)}]"
            sections.append(f"{header}\n\n{body}\n")
        text = "\n".join(sections)
        doc = parse_manual(text, source)
        assert parse_manual(serialize_manual(doc), source) == doc, f"case {case}"

    v2 = parse_manual("## 1-1 Old\n\nOld body.\n", "Proc_v2.md")
    v3 = parse_manual("## 1-1 New\n\nNew body.\n", "Proc_v3.md")
    catalog = resolve_latest([v2, v3])
    (resolved,) = catalog.resolved_documents()
    assert resolved.version == 3
    assert resolved.source_file == "Proc_v3.md"


# ---------------------------------------------------------------------------
# 10. Rubric aggregation
# ---------------------------------------------------------------------------


def test_criterion_10_rubric_aggregation():
    mixed = RubricScores(
        evaluators=[
            {"utility": 4, "safety": 4},
            {"utility": 3, "safety": 4},
            {"utility": 3, "safety": 4},
            {"utility": 3, "safety": 4},
        ]
    )
    assert aggregate_rubric(mixed) == (3.25, 4.0)
    uniform = RubricScores(evaluators=[{"utility": 4, "safety": 4}] * 4)
    assert aggregate_rubric(uniform) == (4.0, 4.0)
    fixture = load_rubric(FIXTURES / "rubric.json")
    assert aggregate_rubric(fixture) == (3.25, 4.0)
