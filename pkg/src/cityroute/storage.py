"""Append-safe JSON-lines persistence.

Each table is one file; every write appends one line. A record line carries
the full record keyed by ``id``; a tombstone line ``{"id": ..., "deleted":
true}`` removes it. Replaying the file top to bottom rebuilds current state,
so a crash mid-append loses at most the trailing partial line.
"""

from __future__ import annotations

import copy
import json
import threading
from pathlib import Path


class JsonlTable:
    """One entity type persisted as JSON lines. ``path=None`` keeps the table
    purely in memory, which the tests and the demo use."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._records: dict = {}
        self._appended = 0
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        with self._path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    # Tolerate a torn final line from an interrupted append.
                    continue
                self._appended += 1
                key = record.get("id")
                if record.get("deleted"):
                    self._records.pop(key, None)
                else:
                    self._records[key] = record

    def _append(self, record: dict) -> None:
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, sort_keys=True) + "\n")
        self._appended += 1

    @property
    def appended(self) -> int:
        """Total lines ever appended; doubles as a mutation counter."""
        with self._lock:
            return self._appended

    def put(self, record: dict) -> None:
        if "id" not in record:
            raise ValueError("record needs an 'id' field")
        with self._lock:
            self._append(record)
            self._records[record["id"]] = copy.deepcopy(record)

    def delete(self, key) -> None:
        with self._lock:
            self._append({"id": key, "deleted": True})
            self._records.pop(key, None)

    def get(self, key) -> dict | None:
        with self._lock:
            record = self._records.get(key)
            return copy.deepcopy(record) if record is not None else None

    def all_records(self) -> list[dict]:
        with self._lock:
            return [copy.deepcopy(r) for r in self._records.values()]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)
