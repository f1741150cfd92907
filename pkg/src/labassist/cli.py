"""Command line interface.

Subcommands: ingest, ask, eval, serve, validate. Errors go to stderr as one
JSON object and a nonzero exit code so scripts can parse failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .assistant import Assistant, load_templates
from .config import load_config
from .errors import LabAssistError
from .evaluation import load_dataset, load_rubric, run_evaluation
from .guardrails import ResponseMode, detect_language, load_lexicons, validate_response
from .manuals import ManualStore, export_catalog
from .providers import build_chat_provider, build_embedding_provider
from .service import _answer_payload, create_app


def _fail(exc: Exception, code: int = 1) -> int:
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n"
    )
    return code


def _build_assistant(config) -> Assistant:
    store = ManualStore(config.manual_dir)
    chat = build_chat_provider(
        config.chat_url, model=config.chat_model,
        timeout_ms=config.chat_timeout_ms, retries=config.chat_retries,
        max_inflight=config.max_inflight,
    )
    embedder = build_embedding_provider(
        config.embed_url, model=config.embed_model,
        timeout_ms=config.embed_timeout_ms, retries=config.embed_retries,
        max_inflight=config.max_inflight,
    )
    return Assistant(
        store.catalog(),
        config.retrieval_config(),
        load_lexicons(config.lexicon_path),
        templates=load_templates(config.template_dir),
        chat=chat,
        embedder=embedder,
        max_regenerations=config.max_regenerations,
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    store = ManualStore(args.manual_dir)
    print(export_catalog(store.catalog()))
    return 0


def cmd_ask(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.manual_dir is not None:
        config = replace(config, manual_dir=args.manual_dir)
    assistant = _build_assistant(config)
    answer = assistant.answer(args.text, ResponseMode(args.mode))
    if args.json:
        print(json.dumps(_answer_payload(answer), ensure_ascii=False, indent=2))
    else:
        print(answer.body)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    dataset = load_dataset(args.dataset)
    embedder = None
    if args.live:
        embedder = build_embedding_provider(
            config.embed_url, model=config.embed_model,
            timeout_ms=config.embed_timeout_ms, retries=config.embed_retries,
            max_inflight=config.max_inflight,
        )
        if embedder is None:
            raise LabAssistError("live mode requires embed_url to be configured")
    rubric = load_rubric(args.rubric) if args.rubric else None
    report = run_evaluation(
        dataset,
        mode="live" if args.live else "fixture",
        embedder=embedder,
        lexicons=load_lexicons(config.lexicon_path),
        rubric=rubric,
    )
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(report.to_json(verbose=args.verbose))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    text = Path(args.file).read_text("utf-8")
    language = detect_language(text)
    report = validate_response(text, ResponseMode(args.mode), language)
    print(
        json.dumps(
            {
                "pattern": report.pattern.value,
                "language": report.language.value,
                "length_units": report.length_units,
                "violations": report.violations,
                "references": [
                    {"file": f, "sections": s} for f, s in report.references
                ],
            },
            ensure_ascii=False,
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labassist",
        description="Manual-grounded lab Q&A service and evaluation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a manual directory, print the catalog")
    p.add_argument("manual_dir")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("ask", help="answer one question")
    p.add_argument("text")
    p.add_argument("--mode", choices=["retrieval", "instructional"],
                   default="retrieval")
    p.add_argument("--json", action="store_true", help="print the full answer record")
    p.add_argument("--manual-dir", default=None, help="override the manual directory")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("eval", help="run the evaluation harness on a dataset")
    p.add_argument("dataset")
    p.add_argument("--live", action="store_true",
                   help="recompute similarities with the embedding provider")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--rubric", default=None, help="rubric scores JSON file")
    p.add_argument("--verbose", action="store_true",
                   help="include population std in JSON cells")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate", help="validate a response file against the contracts")
    p.add_argument("file")
    p.add_argument("--mode", choices=["retrieval", "instructional"],
                   default="retrieval")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LabAssistError as exc:
        return _fail(exc, 2)
    except OSError as exc:
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
