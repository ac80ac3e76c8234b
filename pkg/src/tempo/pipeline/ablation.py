"""Ablation variants: full, no_context, and the flat sliding-window pipeline.

* full: the staged pipeline as configured.
* no_context: identical, but every user-context placeholder renders empty.
* no_hierarchy: no intermediate structure at all; strivings are synthesized
  directly from a sliding window of observation transcriptions bounded by a
  token budget, and the resulting striving nodes carry direct observation
  evidence with no action/activity descendants.
"""

from __future__ import annotations

import logging
from collections import deque
from typing import Iterable

from ..config import PipelineConfig
from ..errors import DeferralError, ValidationError
from ..evidence import ObservationStore
from ..gateway import ModelGateway
from ..graph import Actor, GraphStore, MutationKind, Tier
from ..ingest import Observation
from ..privacy import AuditGuard, PiiPattern, scan_frames
from .events import EventLog
from .records import SynthesisResult, UserContextDoc
from .stages import apply_synthesis, filter_rejected_labels, synthesis_check
from .runner import InductionPipeline

logger = logging.getLogger(__name__)

VARIANTS = ("full", "no_context", "no_hierarchy")


def _approx_tokens(text: str) -> int:
    return max(1, len(text) // 4)


class SlidingWindowPipeline:
    """Striving synthesis straight from observations; no operations, no actions."""

    def __init__(self, store: GraphStore, obs_store: ObservationStore, gateway: ModelGateway,
                 audit_guard: AuditGuard, patterns: list[PiiPattern], config: PipelineConfig,
                 clock, events: EventLog):
        self.store = store
        self.obs_store = obs_store
        self.gateway = gateway
        self.audit_guard = audit_guard
        self.patterns = patterns
        self.config = config
        self.clock = clock
        self.events = events
        self.window: deque[tuple[str, str]] = deque()  # (observation id, transcription)
        self._since_synthesis = 0
        self._last_synthesis_at = clock.now()
        self.deferral_exhausted = False

    def process_observation(self, observation: Observation) -> None:
        self.clock.advance_to(observation.time_range[0])
        now = self.clock.now()
        result = scan_frames(observation, self.patterns)
        if result.observation is None:
            self.events.append("observation_dropped", now, {"observation": observation.id})
            return
        observation = result.observation
        if result.deleted:
            observation.transcription = None
        decision = self.audit_guard.audit(observation, [], now)
        if not decision.transmit_data:
            self.events.append("audit", now, {"observation": observation.id}, outcome="quarantined")
            return
        if observation.transcription is None:
            screenshots = "\n".join(f"frame {f.id} app={f.source_app}: {f.ocr_text or ''}"
                                    for f in observation.frames)
            try:
                record = self.gateway.complete("transcribe", {"screenshots": screenshots,
                                                              "user_context": ""})
            except DeferralError:
                return
            observation.transcription = record["transcription"]
        self.obs_store.add(observation)
        self._push_window(observation.id, observation.transcription)
        self.clock.advance_to(observation.time_range[1])
        self._since_synthesis += 1
        ceiling_due = self.clock.now() - self._last_synthesis_at >= self.config.synthesis_ceiling_ms
        if self._since_synthesis >= self.config.window_trigger_observations or ceiling_due:
            self.synthesize()

    def _push_window(self, obs_id: str, transcription: str) -> None:
        self.window.append((obs_id, transcription))
        while sum(_approx_tokens(t) for _, t in self.window) > self.config.window_token_budget:
            self.window.popleft()

    def synthesize(self) -> None:
        now = self.clock.now()
        previous_ids = [n.id for n in self.store.live_nodes(Tier.STRIVING)]
        window_text = "\n\n".join(f"[{obs_id}]\n{text}" for obs_id, text in self.window)
        window_obs_ids = [obs_id for obs_id, _ in self.window]
        self.events.append("synthesis_triggered", now, {
            "reason": "window",
            "batches_completed": 0,
            "previous": previous_ids,
            "window": window_obs_ids,
        })
        check = synthesis_check(set(previous_ids), known_activity_ids=set())
        try:
            record = self.gateway.complete("synthesize_strivings", {
                "activities": window_text,
                "existing_goals": "\n".join(f"- {sid}: {self.store.node(sid).label}"
                                            for sid in previous_ids),
                "user_constraints": "",
                "user_review_edits": "",
                "user_context": "",
            }, extra_check=check)
        except DeferralError as exc:
            self.events.append("synthesis_deferred", now, {"error": str(exc)}, outcome="deferred")
            self._last_synthesis_at = now
            self._since_synthesis = 0
            return
        result, _ = filter_rejected_labels(self.store, SynthesisResult.from_record(record))
        event = self.events.append("refine_strivings", now, {"strivings": len(result.strivings)})
        application = apply_synthesis(self.store, result, self.config, f"evt-{event.seq}", now)
        # direct observation evidence links instead of child edges
        for striving_id in application.created + application.surviving:
            node = self.store.node(striving_id)
            merged = list(node.evidence)
            for obs_id in window_obs_ids:
                if obs_id not in merged:
                    merged.append(obs_id)
            self.store.submit(MutationKind.SET_METADATA,
                              {"node_id": striving_id, "evidence": merged},
                              actor=Actor.PIPELINE, cause=f"evt-{event.seq}", ts=now)
        self.events.append("synthesis_applied", now, {
            "reason": "window",
            "previous": previous_ids,
            "surviving": application.surviving,
            "created": application.created,
            "dropped": application.dropped,
        })
        self._last_synthesis_at = now
        self._since_synthesis = 0

    def run_stream(self, observations: Iterable[Observation]) -> None:
        previous_start = None
        for observation in observations:
            start = observation.time_range[0]
            if previous_start is None:
                # anchor the ceiling to the stream start, as the staged runner does
                if self._last_synthesis_at == 0:
                    self._last_synthesis_at = start
            elif start < previous_start:
                raise ValidationError(f"corpus not sorted by start time at {observation.id}")
            previous_start = start
            self.process_observation(observation)
        if self._since_synthesis:
            self.synthesize()
        self.events.append("flush", self.clock.now(), {})


def build_variant_pipeline(variant: str, *, store, obs_store, gateway_factory, audit_guard,
                           patterns, config, clock, events, context_doc,
                           constraint_block_fn=None, review_edits_fn=None):
    """gateway_factory(blank_placeholders) -> ModelGateway bound per variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown ablation variant {variant!r}")
    if variant == "full":
        gateway = gateway_factory(())
        return InductionPipeline(store, obs_store, gateway, audit_guard, patterns, config,
                                 clock, events, context_doc,
                                 constraint_block_fn=constraint_block_fn,
                                 review_edits_fn=review_edits_fn)
    if variant == "no_context":
        gateway = gateway_factory(("user_context",))
        return InductionPipeline(store, obs_store, gateway, audit_guard, patterns, config,
                                 clock, events, UserContextDoc(),
                                 constraint_block_fn=constraint_block_fn,
                                 review_edits_fn=review_edits_fn)
    gateway = gateway_factory(("user_context",))
    return SlidingWindowPipeline(store, obs_store, gateway, audit_guard, patterns, config,
                                 clock, events)
