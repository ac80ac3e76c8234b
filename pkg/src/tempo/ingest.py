"""Observation intake: capture controls, frame bundling, and corpus replay.

Live capture and OCR are out of scope; frames arrive with their text
already extracted (or attached by a pluggable extractor upstream). The
corpus file is the canonical offline input: a plain-text header line
``TEMPO-CORPUS v1`` followed by one JSON observation record per line.
"""

from __future__ import annotations

import fnmatch
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional
from urllib.parse import urlparse

from .clock import SimulatedClock, from_iso, to_iso
from .errors import ValidationError

logger = logging.getLogger(__name__)

CORPUS_HEADER = "TEMPO-CORPUS v1"


@dataclass
class Frame:
    id: str
    captured_at: int  # epoch ms
    source_app: str
    source_url: Optional[str] = None
    image_ref: Optional[str] = None
    ocr_text: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"id": self.id, "captured_at": to_iso(self.captured_at), "source_app": self.source_app}
        if self.source_url is not None:
            out["source_url"] = self.source_url
        if self.image_ref is not None:
            out["image_ref"] = self.image_ref
        if self.ocr_text is not None:
            out["ocr_text"] = self.ocr_text
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Frame":
        return cls(
            id=data["id"],
            captured_at=from_iso(data["captured_at"]),
            source_app=data["source_app"],
            source_url=data.get("source_url"),
            image_ref=data.get("image_ref"),
            ocr_text=data.get("ocr_text"),
        )


@dataclass
class Observation:
    id: str
    frames: list[Frame]
    transcription: Optional[str] = None
    summary: Optional[str] = None

    def __post_init__(self):
        if not self.frames:
            raise ValidationError(f"observation {self.id}: frames must be nonempty")

    @property
    def time_range(self) -> tuple[int, int]:
        return (self.frames[0].captured_at, self.frames[-1].captured_at)

    def to_dict(self) -> dict:
        out = {"id": self.id, "frames": [f.to_dict() for f in self.frames]}
        if self.transcription is not None:
            out["transcription"] = self.transcription
        if self.summary is not None:
            out["summary"] = self.summary
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Observation":
        return cls(
            id=data["id"],
            frames=[Frame.from_dict(f) for f in data["frames"]],
            transcription=data.get("transcription"),
            summary=data.get("summary"),
        )


@dataclass
class CaptureSettings:
    paused: bool = False
    excluded_apps: set[str] = field(default_factory=set)
    excluded_url_patterns: set[str] = field(default_factory=set)
    sampling_interval_s: int = 7

    def validate(self) -> None:
        if self.sampling_interval_s <= 0:
            raise ValidationError("sampling_interval must be > 0")

    def to_dict(self) -> dict:
        return {
            "paused": self.paused,
            "excluded_apps": sorted(self.excluded_apps),
            "excluded_url_patterns": sorted(self.excluded_url_patterns),
            "sampling_interval_s": self.sampling_interval_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CaptureSettings":
        settings = cls(
            paused=bool(data.get("paused", False)),
            excluded_apps=set(data.get("excluded_apps", [])),
            excluded_url_patterns=set(data.get("excluded_url_patterns", [])),
            sampling_interval_s=data.get("sampling_interval_s", 7),
        )
        settings.validate()
        return settings


def url_excluded(url: str, patterns: Iterable[str]) -> bool:
    """Glob match against both the full URL and its hostname."""
    host = urlparse(url).netloc
    for pattern in patterns:
        if fnmatch.fnmatch(url, pattern) or (host and fnmatch.fnmatch(host, pattern)):
            return True
    return False


class FrameBundler:
    """Groups accepted frames into contiguous observation bundles.

    A bundle closes when it reaches ``bundle_size`` frames or when the gap to
    the next frame exceeds ``gap_ms``; a flush closes whatever is buffered.
    Dropped frames (paused / excluded) are never buffered anywhere.
    """

    def __init__(self, bundle_size: int = 12, gap_ms: int = 60_000):
        self.bundle_size = bundle_size
        self.gap_ms = gap_ms
        self._buffer: list[Frame] = []
        self._ready: list[Observation] = []
        self._obs_counter = 0

    def _close(self, reason: str) -> Optional[Observation]:
        if not self._buffer:
            return None
        self._obs_counter += 1
        obs = Observation(id=f"obs-{self._obs_counter}", frames=list(self._buffer))
        self._buffer.clear()
        self._ready.append(obs)
        logger.debug("bundle %s closed (%s, %d frames)", obs.id, reason, len(obs.frames))
        return obs

    def ingest_frame(self, frame: Frame, settings: CaptureSettings) -> str:
        """Returns 'accepted', 'dropped_paused', or 'dropped_excluded'."""
        if settings.paused:
            return "dropped_paused"
        if frame.source_app in settings.excluded_apps:
            return "dropped_excluded"
        if frame.source_url and url_excluded(frame.source_url, settings.excluded_url_patterns):
            return "dropped_excluded"
        if self._buffer and frame.captured_at - self._buffer[-1].captured_at > self.gap_ms:
            self._close("gap_exceeded")
        self._buffer.append(frame)
        if len(self._buffer) >= self.bundle_size:
            self._close("count_reached")
        return "accepted"

    def close_bundle(self, reason: str = "flush") -> Optional[Observation]:
        return self._close(reason)

    def take_ready(self) -> list[Observation]:
        out = self._ready
        self._ready = []
        return out

    @property
    def buffered(self) -> int:
        return len(self._buffer)


# ---------------------------------------------------------------------------
# Corpus file format
# ---------------------------------------------------------------------------

def write_corpus(path: str | Path, observations: Iterable[Observation]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CORPUS_HEADER + "\n")
        for obs in observations:
            fh.write(json.dumps(obs.to_dict(), sort_keys=True) + "\n")


def read_corpus(path: str | Path) -> list[Observation]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read corpus {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != CORPUS_HEADER:
        raise ValidationError(f"{path}: expected corpus header {CORPUS_HEADER!r}")
    observations = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            observations.append(Observation.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ValidationError(f"{path}: bad observation record at line {i}: {exc}") from exc
    return observations


def replay_corpus(corpus: list[Observation], clock: SimulatedClock) -> Iterator[Observation]:
    """Yield observations in order, advancing the simulated clock to each.

    The corpus must already be sorted by time_range start; replay refuses
    unsorted input rather than silently reordering it.
    """
    previous_start = None
    for obs in corpus:
        start, end = obs.time_range
        if previous_start is not None and start < previous_start:
            raise ValidationError(f"corpus not sorted by start time at {obs.id}")
        previous_start = start
        clock.advance_to(start)
        yield obs
        clock.advance_to(end)
