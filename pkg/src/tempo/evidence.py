"""Persisted store of transmitted observations and their frames.

Backs the evidence panel and transitive evidence resolution. Only
observations that cleared the privacy guard are ever admitted; the store is
journaled (add / remove events) so evidence removal survives restarts the
same way graph mutations do.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

from .errors import IntegrityError, NotFoundError
from .ingest import Frame, Observation

logger = logging.getLogger(__name__)

OBS_HEADER = "TEMPO-OBS 1"


class ObservationStore:
    def __init__(self, journal_path: str | Path | None = None):
        self.observations: dict[str, Observation] = {}
        self._frame_index: dict[str, str] = {}  # frame id -> observation id
        self._journal_path = Path(journal_path) if journal_path is not None else None
        self._handle = None
        if self._journal_path is not None:
            self._open_journal()

    def _open_journal(self) -> None:
        assert self._journal_path is not None
        self._journal_path.parent.mkdir(parents=True, exist_ok=True)
        if self._journal_path.exists() and self._journal_path.stat().st_size > 0:
            self._replay()
        self._handle = open(self._journal_path, "a", encoding="utf-8")
        if self._journal_path.stat().st_size == 0:
            self._handle.write(OBS_HEADER + "\n")
            self._handle.flush()

    def _replay(self) -> None:
        lines = self._journal_path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].strip() != OBS_HEADER:
            raise IntegrityError(f"{self._journal_path}: expected header {OBS_HEADER!r}")
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                if i == len(lines):
                    logger.warning("%s: dropping torn trailing record", self._journal_path)
                    break
                raise IntegrityError(f"{self._journal_path}: corrupt record at line {i}")
            if event["event"] == "add":
                self._add(Observation.from_dict(event["observation"]))
            elif event["event"] == "remove_frame":
                self._remove_frame(event["frame_id"])
            elif event["event"] == "remove_observation":
                self._remove_observation(event["observation_id"])

    def _write(self, event: dict) -> None:
        if self._handle is not None:
            self._handle.write(json.dumps(event, sort_keys=True) + "\n")
            self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    # ------------------------------------------------------------------

    def _add(self, obs: Observation) -> None:
        self.observations[obs.id] = obs
        for frame in obs.frames:
            self._frame_index[frame.id] = obs.id

    def add(self, obs: Observation) -> None:
        self._add(obs)
        self._write({"event": "add", "observation": obs.to_dict()})

    def get(self, obs_id: str) -> Observation:
        try:
            return self.observations[obs_id]
        except KeyError:
            raise NotFoundError(f"unknown observation {obs_id!r}") from None

    def frame(self, frame_id: str) -> Frame:
        obs_id = self._frame_index.get(frame_id)
        if obs_id is None:
            raise NotFoundError(f"unknown frame {frame_id!r}")
        for frame in self.observations[obs_id].frames:
            if frame.id == frame_id:
                return frame
        raise NotFoundError(f"unknown frame {frame_id!r}")

    def observation_of_frame(self, frame_id: str) -> Optional[str]:
        return self._frame_index.get(frame_id)

    def has_frame(self, frame_id: str) -> bool:
        return frame_id in self._frame_index

    def _remove_frame(self, frame_id: str) -> None:
        obs_id = self._frame_index.pop(frame_id, None)
        if obs_id is None:
            return
        obs = self.observations[obs_id]
        kept = [f for f in obs.frames if f.id != frame_id]
        if kept:
            obs.frames = kept
        else:
            del self.observations[obs_id]

    def remove_frame(self, frame_id: str) -> None:
        frame = self.frame(frame_id)  # raises NotFound first
        if frame.image_ref:
            try:
                Path(frame.image_ref).unlink(missing_ok=True)
            except OSError:
                logger.warning("could not delete image file %s", frame.image_ref)
        self._remove_frame(frame_id)
        self._write({"event": "remove_frame", "frame_id": frame_id})

    def _remove_observation(self, obs_id: str) -> None:
        obs = self.observations.pop(obs_id, None)
        if obs is None:
            return
        for frame in obs.frames:
            self._frame_index.pop(frame.id, None)

    def remove_observation(self, obs_id: str) -> None:
        obs = self.get(obs_id)
        for frame in obs.frames:
            if frame.image_ref:
                try:
                    Path(frame.image_ref).unlink(missing_ok=True)
                except OSError:
                    logger.warning("could not delete image file %s", frame.image_ref)
        self._remove_observation(obs_id)
        self._write({"event": "remove_observation", "observation_id": obs_id})
