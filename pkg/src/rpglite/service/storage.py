"""Durable storage for the game service.

Three append-only NDJSON streams plus a periodic snapshot:

* ``events.ndjson``: the authoritative domain event log.  Replaying it
  from an empty state reproduces the service exactly; every piece of
  randomness (seeds, salts, roll outcomes) is captured in event data,
  so replay needs no RNG, clock, or solver.
* ``interactions.ndjson``: one row per API request, for research use.
  Never read back during recovery.
* ``games.ndjson``: finished game records, mirroring the batch
  simulator's output so the analysis commands work on live data.
* ``snapshot.json``: a full-state checkpoint written every
  ``SNAPSHOT_EVERY`` events so recovery replays only the log tail.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

EVENT_SCHEMA = "rpglite.event/1"
SNAPSHOT_SCHEMA = "rpglite.snapshot/1"

EVENTS_FILE = "events.ndjson"
SNAPSHOT_FILE = "snapshot.json"
INTERACTIONS_FILE = "interactions.ndjson"
GAMES_FILE = "games.ndjson"

SNAPSHOT_EVERY = 200


def _compact(row: dict) -> str:
    return json.dumps(row, separators=(",", ":"), sort_keys=True)


class EventLog:
    """Append-only domain event log with snapshot support."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.path = self.dir / EVENTS_FILE
        self.snapshot_path = self.dir / SNAPSHOT_FILE
        self._fh = None

    def append(self, seq: int, at: float, kind: str, data: dict) -> None:
        row = {"schema": EVENT_SCHEMA, "seq": seq, "at": at, "kind": kind, "data": data}
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(_compact(row) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def read_all(self) -> list[dict]:
        """Every event row, validated minimally and ordered by seq."""
        if not self.path.exists():
            return []
        rows = []
        with open(self.path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                if row.get("schema") != EVENT_SCHEMA:
                    raise ValueError(f"{self.path.name}:{n}: not an event row")
                rows.append(row)
        rows.sort(key=lambda r: r["seq"])
        return rows

    def read_since(self, seq: int) -> list[dict]:
        return [r for r in self.read_all() if r["seq"] > seq]

    def write_snapshot(self, event_seq: int, taken_at: float, state: dict) -> None:
        row = {
            "schema": SNAPSHOT_SCHEMA,
            "event_seq": event_seq,
            "taken_at": taken_at,
            "state": state,
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(_compact(row) + "\n", encoding="utf-8")
        tmp.replace(self.snapshot_path)

    def read_snapshot(self) -> dict | None:
        if not self.snapshot_path.exists():
            return None
        row = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
        if row.get("schema") != SNAPSHOT_SCHEMA:
            raise ValueError("snapshot file has the wrong schema")
        return row


class AppendLog:
    """Plain append-only NDJSON sink (interactions, finished games)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = None

    def append(self, row: dict) -> None:
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(_compact(row) + "\n")
        self._fh.flush()

    def count_rows(self) -> int:
        if not self.path.exists():
            return 0
        with open(self.path, encoding="utf-8") as fh:
            return sum(1 for line in fh if line.strip())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
