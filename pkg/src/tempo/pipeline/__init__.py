from .ablation import SlidingWindowPipeline, VARIANTS, build_variant_pipeline
from .events import EventLog, PipelineEvent
from .records import (
    ActivityCandidate,
    ONBOARDING_QUESTIONS,
    QUESTION_IDS,
    ReconcileDecision,
    SchedulerState,
    StrivingRecord,
    SynthesisResult,
    UserContextDoc,
)
from .runner import InductionPipeline
from .scheduler import maybe_trigger_segmentation, maybe_trigger_synthesis
from .temporal import Interval, TemporalEdges, compute_temporal_edges

__all__ = [
    "ActivityCandidate", "EventLog", "InductionPipeline", "Interval", "ONBOARDING_QUESTIONS",
    "PipelineEvent", "QUESTION_IDS", "ReconcileDecision", "SchedulerState",
    "SlidingWindowPipeline", "StrivingRecord", "SynthesisResult", "TemporalEdges",
    "UserContextDoc", "VARIANTS", "build_variant_pipeline", "compute_temporal_edges",
    "maybe_trigger_segmentation", "maybe_trigger_synthesis",
]
