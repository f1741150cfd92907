"""Append-only JSON Lines query log with size-based rotation.

One JSON object per line; appends are serialized under a lock so concurrent
requests cannot interleave partial lines. When the file would exceed
max_bytes it is rotated to <path>.1, <path>.2, ... up to the configured
number of backups.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path


class QueryLog:
    def __init__(self, path: str | Path, max_bytes: int = 5_000_000, backups: int = 3):
        self.path = Path(path)
        self.max_bytes = max_bytes
        self.backups = backups
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def _rotate(self) -> None:
        for i in range(self.backups - 1, 0, -1):
            src = self.path.with_name(f"{self.path.name}.{i}")
            dst = self.path.with_name(f"{self.path.name}.{i + 1}")
            if src.exists():
                src.replace(dst)
        if self.backups > 0 and self.path.exists():
            self.path.replace(self.path.with_name(f"{self.path.name}.1"))

    def append(self, entry: dict) -> None:
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n"
        data = line.encode("utf-8")
        with self._lock:
            size = self.path.stat().st_size if self.path.exists() else 0
            if size and size + len(data) > self.max_bytes:
                self._rotate()
            with open(self.path, "ab") as fh:
                fh.write(data)
                fh.flush()

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        return [
            json.loads(line)
            for line in self.path.read_text("utf-8").splitlines()
            if line.strip()
        ]
