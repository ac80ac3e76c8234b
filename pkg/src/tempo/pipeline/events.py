"""Append-only pipeline event log: the audit trail the acceptance suite reads."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import IntegrityError

EVENTS_HEADER = "TEMPO-EVENTS 1"


@dataclass
class PipelineEvent:
    seq: int
    at: int  # clock ms (simulated in replay)
    kind: str
    detail: dict = field(default_factory=dict)
    outcome: str = "ok"

    def to_dict(self) -> dict:
        return {"seq": self.seq, "at": self.at, "kind": self.kind,
                "detail": self.detail, "outcome": self.outcome}


class EventLog:
    def __init__(self, path: str | Path | None = None):
        self.events: list[PipelineEvent] = []
        self._path = Path(path) if path is not None else None
        self._handle = None
        if self._path is not None:
            self._open()

    def _open(self) -> None:
        assert self._path is not None
        self._path.parent.mkdir(parents=True, exist_ok=True)
        if self._path.exists() and self._path.stat().st_size > 0:
            lines = self._path.read_text(encoding="utf-8").splitlines()
            if not lines or lines[0].strip() != EVENTS_HEADER:
                raise IntegrityError(f"{self._path}: expected header {EVENTS_HEADER!r}")
            for line in lines[1:]:
                if line.strip():
                    try:
                        record = json.loads(line)
                    except json.JSONDecodeError:
                        break  # torn trailing record after a crash
                    self.events.append(PipelineEvent(**record))
        self._handle = open(self._path, "a", encoding="utf-8")
        if self._path.stat().st_size == 0:
            self._handle.write(EVENTS_HEADER + "\n")
            self._handle.flush()

    def append(self, kind: str, at: int, detail: Optional[dict] = None, outcome: str = "ok") -> PipelineEvent:
        event = PipelineEvent(seq=len(self.events) + 1, at=at, kind=kind,
                              detail=detail or {}, outcome=outcome)
        self.events.append(event)
        if self._handle is not None:
            self._handle.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
            self._handle.flush()
        return event

    def since(self, seq: int) -> list[PipelineEvent]:
        return [e for e in self.events if e.seq > seq]

    def of_kind(self, *kinds: str) -> list[PipelineEvent]:
        return [e for e in self.events if e.kind in kinds]

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
