"""Pipeline configuration: trigger thresholds, windows, and capture defaults.

Values load from a JSON file; anything omitted falls back to the defaults
below. Durations are seconds in the file and converted to milliseconds
internally so they combine directly with epoch-ms timestamps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ValidationError


@dataclass
class PipelineConfig:
    batch_size: int = 20                  # operations per segmentation batch
    inactivity_window_s: int = 600        # idle time that drains a partial batch
    overlap_lookback_s: int = 86400       # how far back overlap edges reach
    stabilization_batches: int = 2        # distinct batches before an activity is stable
    synthesis_ceiling_s: int = 86400      # synthesis fallback interval
    context_k: int = 20                   # most-recent items kept in prompt context lists
    confidence_threshold: int = 5         # below this, strivings are marked low-confidence
    sampling_interval_s: int = 7          # capture cadence
    bundle_size: int = 12                 # frames per observation bundle
    bundle_gap_s: int = 60                # intra-bundle contiguity threshold
    max_retries: int = 2                  # schema repair re-asks per gateway call
    max_deferrals: int = 3                # batch deferrals before replay aborts
    window_token_budget: int = 8000       # sliding-window size for the flat variant
    window_trigger_observations: int = 10 # flat-variant synthesis cadence
    user_name: str = "The user"

    @property
    def inactivity_window_ms(self) -> int:
        return self.inactivity_window_s * 1000

    @property
    def overlap_lookback_ms(self) -> int:
        return self.overlap_lookback_s * 1000

    @property
    def synthesis_ceiling_ms(self) -> int:
        return self.synthesis_ceiling_s * 1000

    @property
    def bundle_gap_ms(self) -> int:
        return self.bundle_gap_s * 1000

    def validate(self) -> None:
        positive = (
            "batch_size", "inactivity_window_s", "overlap_lookback_s",
            "stabilization_batches", "synthesis_ceiling_s", "context_k",
            "sampling_interval_s", "bundle_size", "bundle_gap_s",
            "window_token_budget", "window_trigger_observations",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValidationError(f"config field {name} must be > 0")
        if self.max_retries < 0 or self.max_deferrals < 0:
            raise ValidationError("retry/deferral counts must be >= 0")
        if not 1 <= self.confidence_threshold <= 10:
            raise ValidationError("confidence_threshold must be in [1, 10]")

    @classmethod
    def load(cls, path: str | Path | None) -> "PipelineConfig":
        if path is None:
            cfg = cls()
            cfg.validate()
            return cfg
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def dump(self, path: str | Path) -> None:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
