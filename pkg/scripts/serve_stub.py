"""Run the Q&A service fully offline against the bundled fixtures.

The chat provider is the canned-response stub and the embedder is the
deterministic feature-hash model, so nothing leaves the process. Useful for
frontend development and for demoing the API:

    python3 scripts/serve_stub.py --port 8080
    curl -s localhost:8080/v1/ask -d '{"question": "The door won't open."}' \
        -H 'content-type: application/json'
"""

from __future__ import annotations

import argparse
from pathlib import Path

import uvicorn

from labassist.config import ServiceConfig
from labassist.service import create_app

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument(
        "--manual-dir", default=str(FIXTURES / "manuals"),
        help="directory of sectioned manuals to ingest at startup",
    )
    parser.add_argument(
        "--stub-file", default=str(FIXTURES / "stub_responses.json"),
        help="canned chat responses (JSON)",
    )
    parser.add_argument(
        "--log-path", default=str(REPO_ROOT / "query_log.jsonl"),
        help="where to append the query log",
    )
    args = parser.parse_args(argv)

    config = ServiceConfig(
        manual_dir=args.manual_dir,
        chat_url=f"stub://{args.stub_file}",
        embed_url="hash://384",
        log_path=args.log_path,
        listen_host=args.host,
        listen_port=args.port,
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
