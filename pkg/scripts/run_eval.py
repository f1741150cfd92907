"""Run the evaluation harness on a similarity dataset and print the report.

Defaults to the bundled validation dataset in fixture mode (stored
similarity scores). Pass --live plus an embedding endpoint to recompute
every similarity before aggregating:

    python3 scripts/run_eval.py
    python3 scripts/run_eval.py --format csv
    python3 scripts/run_eval.py --live --embed-url http://127.0.0.1:9090
"""

from __future__ import annotations

import argparse
from pathlib import Path

from labassist.evaluation import (
    REFERENCE_EMBED_MODEL,
    load_dataset,
    load_rubric,
    run_evaluation,
)
from labassist.providers import build_embedding_provider

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "dataset", nargs="?", default=str(FIXTURES / "table_s1.jsonl"),
        help="JSONL similarity dataset (default: bundled fixture)",
    )
    parser.add_argument("--live", action="store_true",
                        help="recompute similarities before aggregating")
    parser.add_argument("--embed-url", default="hash://384",
                        help="embedding provider for --live")
    parser.add_argument("--model", default=REFERENCE_EMBED_MODEL,
                        help="embedding model name for --live")
    parser.add_argument("--rubric", default=None,
                        help="optional rubric JSON to aggregate into the report")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--verbose", action="store_true",
                        help="include population std in JSON cells")
    args = parser.parse_args(argv)

    dataset = load_dataset(Path(args.dataset))
    rubric = load_rubric(Path(args.rubric)) if args.rubric else None
    if args.live:
        embedder = build_embedding_provider(args.embed_url, model=args.model)
        report = run_evaluation(dataset, mode="live", embedder=embedder,
                                rubric=rubric)
    else:
        report = run_evaluation(dataset, rubric=rubric)

    if args.format == "csv":
        print(report.to_csv(), end="")
    else:
        print(report.to_json(verbose=args.verbose))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
