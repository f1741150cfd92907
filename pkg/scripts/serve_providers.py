"""Serve the chat and embedding provider protocols over HTTP.

Hosts the canned chat stub and the feature-hash embedder behind the same
wire protocol a real deployment would use, so the http:// client path can
be exercised without external services:

    python3 scripts/serve_providers.py --port 9090
    LASTMILE_CHAT_URL=http://127.0.0.1:9090 \
    LASTMILE_EMBED_URL=http://127.0.0.1:9090 labassist serve
"""

from __future__ import annotations

import argparse
from pathlib import Path

import uvicorn

from labassist.providers import create_stub_app

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9090)
    parser.add_argument(
        "--stub-file", default=str(FIXTURES / "stub_responses.json"),
        help="canned chat responses (JSON)",
    )
    parser.add_argument(
        "--dimension", type=int, default=384,
        help="embedding dimension for the feature-hash model",
    )
    args = parser.parse_args(argv)

    app = create_stub_app(Path(args.stub_file), dimension=args.dimension)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
