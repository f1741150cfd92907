"""Regenerate the frontend test fixtures from the running service.

Drives the real service (stub chat + hash embedder + fixture manuals)
through its HTTP interface and dumps the verbatim request/response pairs the
UI tests replay. Run after changing fixtures, lexicons, or response
contracts:

    python3 scripts/export_ui_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from starlette.testclient import TestClient

from labassist.config import ServiceConfig
from labassist.service import create_app

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
OUT_DIR = REPO_ROOT / "frontend" / "tests" / "fixtures"

# One scripted conversation: grounded answers, deferrals in both languages,
# anomaly reports in both languages, and one advisory-mode request.
TURNS: list[dict] = [
    {"question": "The door won't open."},
    {"question": "How do I set the sample?"},
    {"question": "How can I tell whether X-rays are on during the measurement?"},
    {"question": "Can the wavelength be changed?"},
    {"question": "Tell me tomorrow's lottery numbers."},
    {"question": "試料はどのようにセットしますか？"},
    {"question": "There is smoke coming from the machine!"},
    {"question": "I can hear an unusual sound from the detector."},
    {"question": "I saw sparks near the power inlet."},
    {"question": "煙が出ています。"},
    {"question": "エラーが表示されました。"},
    {
        "question": "How can I determine the crystal structure of TiO₂ using the MiniFlex600?",
        "mode": "instructional",
    },
    {"question": "What is the startup order for the instrument?"},
    {"question": "Where is the emergency stop button?"},
    {"question": "How long does a typical scan take?"},
    {"question": "扉が開きません。"},
    {"question": "Is it safe to open the enclosure during a scan?"},
    {"question": "The screen shows an error message."},
    {"question": "Which sample holder should I use for powder?"},
    {"question": "There is a burning smell near the power supply."},
]


def dump(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        "utf-8",
    )
    print(f"wrote {path.relative_to(REPO_ROOT)}")


def main() -> int:
    config = ServiceConfig(
        manual_dir=str(FIXTURES / "manuals"),
        chat_url=f"stub://{FIXTURES / 'stub_responses.json'}",
        embed_url="hash://384",
        log_path=str(REPO_ROOT / "query_log.jsonl"),
    )
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with TestClient(create_app(config)) as client:
        turns = []
        for request in TURNS:
            response = client.post("/v1/ask", json=request)
            response.raise_for_status()
            turns.append({"request": request, "response": response.json()})
        dump(OUT_DIR / "turns.json", turns)

        report = client.post(
            "/v1/eval",
            json={
                "dataset_path": str(FIXTURES / "table_s1.jsonl"),
                "rubric_path": str(FIXTURES / "rubric.json"),
            },
        )
        report.raise_for_status()
        dump(OUT_DIR / "eval_report.json", report.json())

        manuals = client.get("/v1/manuals")
        manuals.raise_for_status()
        dump(OUT_DIR / "manuals.json", manuals.json())

        health = client.get("/v1/health")
        health.raise_for_status()
        dump(OUT_DIR / "health.json", health.json())
    (REPO_ROOT / "query_log.jsonl").unlink(missing_ok=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
