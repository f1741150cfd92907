"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

import re
from pathlib import Path

import pytest

from labassist.assistant import Assistant, load_templates
from labassist.evaluation import load_dataset
from labassist.guardrails import load_lexicons
from labassist.manuals import ManualStore
from labassist.providers import HashEmbeddingProvider, StubChatProvider
from labassist.retrieval import RetrievalConfig

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def lexicons():
    return load_lexicons()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture()
def dataset():
    # Function-scoped: run_evaluation mutates record classifications.
    return load_dataset(FIXTURES / "table_s1.jsonl")


@pytest.fixture(scope="session")
def catalog():
    return ManualStore(FIXTURES / "manuals").catalog()


@pytest.fixture(scope="session")
def stub_chat():
    return StubChatProvider.from_file(FIXTURES / "stub_responses.json")


@pytest.fixture(scope="session")
def hash_embedder():
    return HashEmbeddingProvider(384)


@pytest.fixture()
def assistant(catalog, lexicons, stub_chat, hash_embedder):
    return Assistant(
        catalog,
        RetrievalConfig(),
        lexicons,
        chat=stub_chat,
        embedder=hash_embedder,
    )


# ---------------------------------------------------------------------------
# Acceptance summary: one PASS/FAIL line per criterion test.
# ---------------------------------------------------------------------------

_CRITERION_RE = re.compile(r"test_criterion_(\d+)")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION_RE.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call":
        outcome = "PASS" if report.passed else "FAIL"
        if report.skipped:
            outcome = "SKIP"
        _results[number] = (report.nodeid.split("::")[-1], outcome)
    elif report.when == "setup" and report.skipped:
        _results[number] = (report.nodeid.split("::")[-1], "SKIP")
    elif not report.passed and report.when in ("setup", "teardown"):
        _results[number] = (report.nodeid.split("::")[-1], "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(_results):
        name, outcome = _results[number]
        label = name.replace("test_criterion_", "criterion ")
        terminalreporter.write_line(f"{label:<58s} {outcome}")
