"""Clock abstraction: wall clock for service mode, simulated clock for replay.

All timestamps in the system are integer milliseconds since the Unix epoch
(UTC). Replay mode must never touch the wall clock, otherwise exports and
event logs stop being byte-reproducible.
"""

from __future__ import annotations

import time
from datetime import datetime, timezone


def to_iso(ts_ms: int) -> str:
    """Render a millisecond timestamp as ISO-8601 with millisecond precision."""
    dt = datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts_ms % 1000:03d}Z"


def from_iso(text: str) -> int:
    """Parse ISO-8601 (with or without fractional seconds / 'Z') to epoch ms."""
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    dt = datetime.fromisoformat(cleaned)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp() * 1000))


class WallClock:
    """Real time; used only in service mode."""

    def now(self) -> int:
        return int(time.time() * 1000)


class SimulatedClock:
    """Manually advanced clock driving deterministic replay.

    The clock never moves backwards: advancing to an earlier time is a no-op
    so that out-of-order callers cannot corrupt scheduler arithmetic.
    """

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now(self) -> int:
        return self._now

    def advance_to(self, ts_ms: int) -> None:
        if ts_ms > self._now:
            self._now = ts_ms
