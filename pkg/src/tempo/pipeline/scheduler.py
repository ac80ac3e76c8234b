"""Trigger rules: when to segment the operation buffer and when to synthesize.

Segmentation fires when a full batch has collected or when a nonempty buffer
has sat idle past the inactivity window. Striving synthesis waits for a
one-batch warmup and dirty activities, with a ceiling interval as fallback
so the striving layer can never starve.
"""

from __future__ import annotations

from typing import Optional

from ..config import PipelineConfig
from .records import SchedulerState


def maybe_trigger_segmentation(state: SchedulerState, now: int,
                               config: PipelineConfig) -> Optional[tuple[list[str], str]]:
    """Drain and return (batch, reason) when a trigger condition holds."""
    if not state.op_buffer:
        return None
    if len(state.op_buffer) >= config.batch_size:
        batch = state.op_buffer[:config.batch_size]
        state.op_buffer = state.op_buffer[config.batch_size:]
        return batch, "batch_full"
    if now - state.last_op_at >= config.inactivity_window_ms:
        batch = state.op_buffer
        state.op_buffer = []
        return batch, "inactivity"
    return None


def maybe_trigger_synthesis(state: SchedulerState, now: int, config: PipelineConfig) -> bool:
    if state.batches_completed >= 1 and state.activities_dirty:
        return True
    return now - state.last_synthesis_at >= config.synthesis_ceiling_ms


def synthesis_due_at(state: SchedulerState, config: PipelineConfig) -> int:
    """Next instant the ceiling alone would fire."""
    return state.last_synthesis_at + config.synthesis_ceiling_ms


def segmentation_due_at(state: SchedulerState, config: PipelineConfig) -> Optional[int]:
    """Next instant the inactivity rule alone would fire, if a buffer is pending."""
    if not state.op_buffer:
        return None
    return state.last_op_at + config.inactivity_window_ms
