"""The induction worker: staged abstraction from observations to strivings.

One logical worker consumes a stream of observations plus edit retriggers
and timer ticks; stages never run concurrently with each other. The
simulated clock drives every trigger in replay, so identical corpus + mock
rulebook + config reproduce the same events, mutations, and export bytes.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from typing import Iterable, Optional

from ..config import PipelineConfig
from ..errors import DeferralError, ValidationError
from ..evidence import ObservationStore
from ..gateway import ModelGateway
from ..graph import Actor, GraphStore, MutationKind, NodeStatus, Tier
from ..graph.types import node_sort_key
from ..ingest import Observation
from ..privacy import AuditGuard, PiiPattern, scan_frames
from .events import EventLog
from .records import ActivityCandidate, ReconcileDecision, SchedulerState, SynthesisResult, UserContextDoc
from .scheduler import (
    maybe_trigger_segmentation,
    maybe_trigger_synthesis,
    segmentation_due_at,
    synthesis_due_at,
)
from . import stages

logger = logging.getLogger(__name__)


class InductionPipeline:
    def __init__(self, store: GraphStore, obs_store: ObservationStore, gateway: ModelGateway,
                 audit_guard: AuditGuard, patterns: list[PiiPattern], config: PipelineConfig,
                 clock, events: EventLog, context_doc: UserContextDoc,
                 constraint_block_fn=None, review_edits_fn=None):
        self.store = store
        self.obs_store = obs_store
        self.gateway = gateway
        self.audit_guard = audit_guard
        self.patterns = patterns
        self.config = config
        self.clock = clock
        self.events = events
        self.context_doc = context_doc
        self.constraint_block_fn = constraint_block_fn or (lambda: "")
        self.review_edits_fn = review_edits_fn or (lambda: "")
        self.state = SchedulerState(last_synthesis_at=clock.now())
        self.retriggers: deque[dict] = deque()
        self.deferral_exhausted = False
        self._batch_counter = 0
        self._deferred_batches: list[dict] = []
        self._deferred_obs: list[dict] = []
        self._audit_attempts: dict[str, int] = {}
        self._recover_counters()

    def _recover_counters(self) -> None:
        """Resume batch numbering and scheduler anchors after a restart.

        Reused batch ids would make stabilization double-count a batch, and a
        reset ceiling anchor would mistime the fallback synthesis.
        """
        highest = 0
        for node in self.store.live_nodes(Tier.ACTIVITY):
            if node.metadata is not None:
                for batch_id in node.metadata.batch_ids:
                    _, _, num = batch_id.rpartition("-")
                    if num.isdigit():
                        highest = max(highest, int(num))
        for event in self.events.events:
            batch = event.detail.get("batch", "") if isinstance(event.detail, dict) else ""
            _, _, num = str(batch).rpartition("-")
            if num.isdigit():
                highest = max(highest, int(num))
        self._batch_counter = highest
        for event in self.events.events:
            if event.kind == "reconcile_activities":
                self.state.batches_completed += 1
            if event.kind in ("synthesis_applied", "synthesis_deferred"):
                self.state.last_synthesis_at = event.at

    # ------------------------------------------------------------------
    # Prompt context helpers
    # ------------------------------------------------------------------

    def _user_context(self) -> str:
        return self.context_doc.render()

    def _recent_action_ids(self) -> list[str]:
        actions = self.store.live_nodes(Tier.ACTION)
        return [a.id for a in actions[-self.config.context_k:]]

    def _recent_action_labels(self) -> list[str]:
        return [self.store.node(a).label for a in self._recent_action_ids()]

    def _live_striving_ids(self) -> list[str]:
        return [n.id for n in self.store.live_nodes(Tier.STRIVING)]

    def _stable_activity_ids(self) -> list[str]:
        return [n.id for n in self.store.live_nodes(Tier.ACTIVITY) if n.status == NodeStatus.STABLE]

    # ------------------------------------------------------------------
    # Clock-driven triggers
    # ------------------------------------------------------------------

    def advance_clock(self, target_ms: int) -> None:
        """Fire every due trigger at its logical time before reaching target."""
        while True:
            due = []
            seg_at = segmentation_due_at(self.state, self.config)
            if seg_at is not None and seg_at <= target_ms:
                due.append((seg_at, 0, "segmentation"))
            syn_at = synthesis_due_at(self.state, self.config)
            if syn_at <= target_ms:
                due.append((syn_at, 1, "synthesis"))
            if not due:
                break
            at, _, which = min(due)
            self.clock.advance_to(at)
            if which == "segmentation":
                trigger = maybe_trigger_segmentation(self.state, at, self.config)
                if trigger:
                    self.run_batch(trigger[0], trigger[1])
            else:
                self.run_synthesis(reason="ceiling")
        self.clock.advance_to(target_ms)

    # ------------------------------------------------------------------
    # Observation intake
    # ------------------------------------------------------------------

    def process_observation(self, observation: Observation) -> None:
        self.advance_clock(observation.time_range[0])
        self.drain_retriggers()
        self._retry_deferred()
        now = self.clock.now()

        result = scan_frames(observation, self.patterns)
        self.events.append("privacy_scan", now, {
            "observation": observation.id,
            "deleted": [{"frame": f, "pattern": p} for f, p in result.deleted],
        })
        if result.observation is None:
            self.events.append("observation_dropped", now, {"observation": observation.id,
                                                            "reason": "all frames deleted"})
            return
        observation = result.observation
        if result.deleted:
            # pre-supplied transcription may quote deleted frames; rebuild from survivors
            observation.transcription = None
            observation.summary = None

        decision = self.audit_guard.audit(observation, self._recent_action_labels(), now)
        if not decision.transmit_data:
            outcome = "deferred" if decision.deferred else "quarantined"
            self.events.append("audit", now, {"observation": observation.id,
                                              "data_type": decision.data_type}, outcome=outcome)
            return
        self.events.append("audit", now, {"observation": observation.id,
                                          "data_type": decision.data_type}, outcome="transmitted")
        self._ingest_transmitted(observation)

    def _ingest_transmitted(self, observation: Observation) -> None:
        now = self.clock.now()
        try:
            self._ensure_transcription(observation)
            op_ids = self.extract_operations(observation)
        except DeferralError as exc:
            self.events.append("observation_deferred", now, {"observation": observation.id,
                                                             "error": str(exc)}, outcome="deferred")
            self._deferred_obs.append({"observation": observation, "attempts": 1})
            return
        self.obs_store.add(observation)
        if op_ids:
            self.state.op_buffer.extend(op_ids)
            self.state.last_op_at = observation.time_range[1]
        self.advance_clock(observation.time_range[1])
        trigger = maybe_trigger_segmentation(self.state, self.clock.now(), self.config)
        if trigger:
            self.run_batch(trigger[0], trigger[1])

    def _ensure_transcription(self, observation: Observation) -> None:
        screenshots = "\n".join(
            f"frame {f.id} app={f.source_app} url={f.source_url or '-'}: {f.ocr_text or ''}"
            for f in observation.frames
        )
        if observation.transcription is None:
            record = self.gateway.complete("transcribe", {
                "screenshots": screenshots,
                "user_context": self._user_context(),
            })
            observation.transcription = record["transcription"]
            self.events.append("transcribe", self.clock.now(), {"observation": observation.id})
        if observation.summary is None:
            record = self.gateway.complete("summarize", {"screenshots": screenshots})
            observation.summary = record["summary"]
            self.events.append("summarize", self.clock.now(), {"observation": observation.id})

    def extract_operations(self, observation: Observation) -> list[str]:
        record = self.gateway.complete("extract_operations", {
            "observation_text": observation.transcription or "",
            "user_context": self._user_context(),
        })
        event = self.events.append("extract_operations", self.clock.now(),
                                   {"observation": observation.id,
                                    "count": len(record["operations"])})
        cause = f"evt-{event.seq}"
        op_ids = []
        frame_ids = [f.id for f in observation.frames]
        for op in record["operations"]:
            verdict = self.store.submit(MutationKind.CREATE_NODE, {
                "tier": "operation",
                "label": op["text"],
                "reasoning": op["reasoning"],
                "confidence": op["confidence"],
                "time_range": list(observation.time_range),
                "evidence": frame_ids,
                "metadata": {
                    "tool_kind": op["tool_kind"],
                    "social_target": op["social_target"],
                    "rule_tags": op["rule_tags"],
                    "automaticity_hint": op["automaticity_hint"],
                    "affect_hint": op["affect_hint"],
                    "decay": op["decay"],
                },
            }, actor=Actor.PIPELINE, cause=cause, ts=self.clock.now())
            op_ids.append(verdict.affected[0])
        return op_ids

    # ------------------------------------------------------------------
    # Batch: segmentation -> temporal edges -> propose -> reconcile
    # ------------------------------------------------------------------

    def run_batch(self, batch_op_ids: list[str], reason: str,
                  batch_id: Optional[str] = None, resume_action_ids: Optional[list[str]] = None,
                  attempts: int = 0) -> bool:
        now = self.clock.now()
        if batch_id is None:
            self._batch_counter += 1
            batch_id = f"batch-{self._batch_counter}"
        self.events.append("segmentation_triggered", now,
                           {"batch": batch_id, "reason": reason, "operations": len(batch_op_ids)})
        action_ids = resume_action_ids
        try:
            if action_ids is None:
                action_ids = self.segment_actions(batch_op_ids, batch_id)
            self.propose_and_reconcile(action_ids, batch_id)
        except DeferralError as exc:
            # resume at propose when segmentation already wrote its actions,
            # otherwise retrying would re-segment and duplicate them
            stage = "segment" if action_ids is None else "propose"
            entry = {
                "batch_id": batch_id,
                "op_ids": batch_op_ids,
                "action_ids": action_ids,
                "attempts": attempts + 1,
                "reason": reason,
            }
            self.events.append("batch_deferred", self.clock.now(),
                               {"batch": batch_id, "stage": stage, "error": str(exc)},
                               outcome="deferred")
            if entry["attempts"] > self.config.max_deferrals:
                self.events.append("batch_abandoned", self.clock.now(), {"batch": batch_id},
                                   outcome="deferral_exhausted")
                self.deferral_exhausted = True
            else:
                self._deferred_batches.append(entry)
            return False
        self.state.batches_completed += 1
        if maybe_trigger_synthesis(self.state, self.clock.now(), self.config):
            reason = "warmup+dirty" if self.state.activities_dirty else "ceiling"
            self.run_synthesis(reason=reason)
        return True

    def segment_actions(self, batch_op_ids: list[str], batch_id: str) -> list[str]:
        record = self.gateway.complete("segment_actions", {
            "operations": stages.format_operations(self.store, batch_op_ids),
            "recent_actions": stages.format_actions(self.store, self._recent_action_ids()),
            "current_goals": stages.format_strivings(self.store, self._live_striving_ids()),
            "user_feedback": self.review_edits_fn(),
            "user_context": self._user_context(),
        }, extra_check=stages.segmentation_check(len(batch_op_ids)))
        event = self.events.append("segment_actions", self.clock.now(),
                                   {"batch": batch_id, "segments": len(record["actions"])})
        cause = f"evt-{event.seq}"
        action_ids = stages.apply_segmentation(self.store, record, batch_op_ids, cause, self.clock.now())
        counts = stages.link_temporal_edges(self.store, action_ids, self.config, cause, self.clock.now())
        self.events.append("temporal_edges", self.clock.now(), {"batch": batch_id, **counts})
        return action_ids

    def _context_action_ids(self, action_ids: list[str]) -> tuple[list[str], list[str]]:
        """Actions reachable over follows (prior) and co_occurs/overlaps (concurrent)."""
        from ..graph.types import EdgeKind

        batch = set(action_ids)
        prior: set[str] = set()
        concurrent: set[str] = set()
        for action_id in action_ids:
            for edge in self.store.edges_of(action_id):
                other = edge.dst if edge.src == action_id else edge.src
                if other in batch or self.store.nodes[other].removed:
                    continue
                if self.store.nodes[other].tier != Tier.ACTION:
                    continue
                if edge.kind == EdgeKind.FOLLOWS:
                    prior.add(other)
                elif edge.kind in (EdgeKind.CO_OCCURS, EdgeKind.OVERLAPS):
                    concurrent.add(other)
        k = self.config.context_k
        return sorted(prior, key=node_sort_key)[-k:], sorted(concurrent, key=node_sort_key)[-k:]

    def propose_and_reconcile(self, action_ids: list[str], batch_id: str) -> None:
        prior_ids, concurrent_ids = self._context_action_ids(action_ids)
        proposal = self.gateway.complete("propose_activities", {
            "user_name": self.config.user_name,
            "actions": stages.format_actions(self.store, action_ids),
            "temporal_context": stages.format_temporal_context(self.store, action_ids),
            "prior_context": stages.format_actions(self.store, prior_ids, assigned_to=True),
            "concurrent_context": stages.format_actions(self.store, concurrent_ids, assigned_to=True),
            "user_stated_goals": "",
            "system_goals": stages.format_strivings(self.store, self._live_striving_ids()),
            "user_constraints": self.constraint_block_fn(),
            "user_context": self._user_context(),
        }, extra_check=stages.coverage_check(action_ids))
        candidates = [ActivityCandidate.from_record(c) for c in proposal["candidates"]]
        self.events.append("propose_activities", self.clock.now(),
                           {"batch": batch_id, "candidates": len(candidates)})
        self.reconcile_activities(candidates, batch_id)

    def reconcile_activities(self, candidates: list[ActivityCandidate], batch_id: str) -> stages.ReconcileOutcome:
        existing_ids = [n.id for n in self.store.live_nodes(Tier.ACTIVITY)]
        record = self.gateway.complete("reconcile_activities", {
            "candidates": json.dumps([{
                "index": i,
                "description": c.description,
                "purpose": c.purpose,
                "identity_context": c.identity_context,
                "action_ids": c.action_ids,
            } for i, c in enumerate(candidates)], sort_keys=True, indent=1),
            "existing_activities": stages.format_activities(self.store, existing_ids),
            "user_constraints": self.constraint_block_fn(),
            "user_context": self._user_context(),
        }, extra_check=stages.reconcile_check(len(candidates), set(existing_ids)))
        decisions = [ReconcileDecision.from_record(d) for d in record["decisions"]]
        event = self.events.append("reconcile_activities", self.clock.now(), {
            "batch": batch_id,
            "decisions": [{"decision": d.decision, "candidate_index": d.candidate_index} for d in decisions],
        })
        cause = f"evt-{event.seq}"
        outcome = stages.apply_reconcile_decisions(self.store, decisions, candidates, batch_id,
                                                   self.config, cause, self.clock.now())
        stages.recompute_activity_temporal_edges(self.store, self.config, cause, self.clock.now())
        if outcome.dirtied:
            self.state.activities_dirty = True
        event.detail["applied"] = outcome.applied_decisions
        return outcome

    # ------------------------------------------------------------------
    # Synthesis + self-refine
    # ------------------------------------------------------------------

    def run_synthesis(self, reason: str) -> None:
        now = self.clock.now()
        previous_ids = self._live_striving_ids()
        stable_ids = self._stable_activity_ids()
        self.events.append("synthesis_triggered", now, {
            "reason": reason,
            "batches_completed": self.state.batches_completed,
            "previous": previous_ids,
            "stable_activities": stable_ids,
        })
        base_inputs = {
            "activities": stages.format_activities(self.store, stable_ids),
            "existing_goals": stages.format_strivings(self.store, previous_ids),
            "user_constraints": self.constraint_block_fn(),
            "user_review_edits": self.review_edits_fn(),
            "user_context": self._user_context(),
        }
        known_activities = set(stable_ids)
        try:
            synthesis_record = self.gateway.complete(
                "synthesize_strivings", base_inputs,
                extra_check=stages.synthesis_check(set(previous_ids), known_activities))
            synthesis, filtered = stages.filter_rejected_labels(
                self.store, SynthesisResult.from_record(synthesis_record))
            self.events.append("synthesize_strivings", self.clock.now(), {
                "strivings": len(synthesis.strivings),
                "dropped": [g for g, _ in synthesis.dropped_goals],
                "filtered_rejected": filtered,
            })
            refine_inputs = {k: v for k, v in base_inputs.items() if k != "existing_goals"}
            refine_record = self.gateway.complete("refine_strivings", {
                **refine_inputs,
                "previous_output": json.dumps({
                    "strivings": [vars(s) for s in synthesis.strivings],
                    "dropped_goals": [{"goal_id": g, "reason": r} for g, r in synthesis.dropped_goals],
                }, sort_keys=True, indent=1),
            }, extra_check=stages.synthesis_check(set(previous_ids), known_activities,
                                                  require_coverage_of=known_activities))
            refined, refiltered = stages.filter_rejected_labels(
                self.store, SynthesisResult.from_record(refine_record))
        except DeferralError as exc:
            # previous striving set stays intact; dirty flag persists for a retry
            self.events.append("synthesis_deferred", self.clock.now(), {"error": str(exc)},
                               outcome="deferred")
            self.state.last_synthesis_at = self.clock.now()
            return
        event = self.events.append("refine_strivings", self.clock.now(),
                                   {"strivings": len(refined.strivings),
                                    "filtered_rejected": refiltered})
        cause = f"evt-{event.seq}"
        application = stages.apply_synthesis(self.store, refined, self.config, cause, self.clock.now())
        self.events.append("synthesis_applied", self.clock.now(), {
            "reason": reason,
            "previous": previous_ids,
            "surviving": application.surviving,
            "created": application.created,
            "dropped": [g for g, _ in refined.dropped_goals],
            "stable_activities": stable_ids,
        })
        self.state.last_synthesis_at = self.clock.now()
        self.state.activities_dirty = False

    # ------------------------------------------------------------------
    # Edit retriggers and orphan reassignment
    # ------------------------------------------------------------------

    def enqueue_retrigger(self, edit_id: str, stage_names: list[str], payload: Optional[dict] = None) -> None:
        self.events.append("edit_retrigger", self.clock.now(),
                           {"edit": edit_id, "stages": stage_names, **(payload or {})})
        for name in stage_names:
            self.retriggers.append({"stage": name, "edit": edit_id, "payload": payload or {}})

    def drain_retriggers(self) -> None:
        synthesis_pending = False
        while self.retriggers:
            entry = self.retriggers.popleft()
            if entry["stage"] == "reconcile":
                self.reassign_orphans(entry["payload"], entry["edit"])
            else:  # synthesize / refine collapse into one synthesis cycle
                synthesis_pending = True
        if synthesis_pending:
            self.run_synthesis(reason="edit_retrigger")

    def reassign_orphans(self, payload: dict, edit_id: str) -> None:
        """Activity-inference pass for structures orphaned by a removal."""
        now = self.clock.now()
        orphan_action_ids = [
            a for a in payload.get("orphan_action_ids", [])
            if self.store.maybe_node(a) is not None and not self.store.node(a).removed
            and not self.store.parents(a)
        ]
        if orphan_action_ids:
            self._batch_counter += 1
            batch_id = f"batch-{self._batch_counter}"
            self.events.append("orphan_reassignment", now,
                               {"edit": edit_id, "orphan_actions": orphan_action_ids})
            try:
                self.propose_and_reconcile(orphan_action_ids, batch_id)
            except DeferralError as exc:
                self.events.append("batch_deferred", self.clock.now(),
                                   {"batch": batch_id, "stage": "propose", "error": str(exc)},
                                   outcome="deferred")

        orphan_activity_ids = [
            a for a in payload.get("orphan_activity_ids", [])
            if self.store.maybe_node(a) is not None and not self.store.node(a).removed
            and not self.store.parents(a)
        ]
        if not orphan_activity_ids:
            return
        self.events.append("orphan_reassignment", now,
                           {"edit": edit_id, "orphan_activities": orphan_activity_ids})
        candidates = []
        for orphan_id in orphan_activity_ids:
            node = self.store.node(orphan_id)
            meta = node.metadata
            candidates.append(ActivityCandidate(
                description=node.label,
                purpose=meta.purpose if meta else "",
                reasoning=f"previously assigned under a removed goal ({orphan_id})",
                people=list(meta.people) if meta else [],
                resources=list(meta.resources) if meta else [],
                temporal_pattern=meta.temporal_pattern if meta else "",
                engagement_profile=meta.engagement_profile if meta else "mixed",
                initiation_profile=meta.initiation_profile if meta else "mixed",
                identity_context=meta.identity_context if meta else "work",
                action_ids=[c.id for c in self.store.children(orphan_id)],
                action_valences=["supports"] * len(self.store.children(orphan_id)),
                confidence=node.confidence,
            ))
        self._batch_counter += 1
        batch_id = f"batch-{self._batch_counter}"
        try:
            outcome = self.reconcile_activities(candidates, batch_id)
        except DeferralError as exc:
            self.events.append("batch_deferred", self.clock.now(),
                               {"batch": batch_id, "stage": "reconcile", "error": str(exc)},
                               outcome="deferred")
            return
        # fold each orphan judged to be an existing activity into its match
        event_cause = f"orphan:{edit_id}"
        for applied, orphan_id in zip(outcome.applied_decisions, orphan_activity_ids):
            target = applied.get("target")
            if applied["decision"] in ("match", "revise", "merge") and target and target != orphan_id:
                if self.store.maybe_node(orphan_id) is not None and not self.store.node(orphan_id).removed:
                    self.store.submit(MutationKind.MERGE_NODES,
                                      {"source_ids": [orphan_id], "target_id": target},
                                      actor=Actor.PIPELINE, cause=event_cause, ts=self.clock.now())
        self.state.activities_dirty = True

    # ------------------------------------------------------------------
    # Deferral retries
    # ------------------------------------------------------------------

    def _retry_deferred(self) -> None:
        if self._deferred_batches:
            pending, self._deferred_batches = self._deferred_batches, []
            for entry in pending:
                self.run_batch(entry["op_ids"], entry["reason"], batch_id=entry["batch_id"],
                               resume_action_ids=entry["action_ids"], attempts=entry["attempts"])
        if self._deferred_obs:
            pending, self._deferred_obs = self._deferred_obs, []
            for entry in pending:
                observation = entry["observation"]
                try:
                    self._ensure_transcription(observation)
                    op_ids = self.extract_operations(observation)
                except DeferralError:
                    entry["attempts"] += 1
                    if entry["attempts"] > self.config.max_deferrals:
                        self.events.append("observation_abandoned", self.clock.now(),
                                           {"observation": observation.id},
                                           outcome="deferral_exhausted")
                        self.deferral_exhausted = True
                    else:
                        self._deferred_obs.append(entry)
                    continue
                self.obs_store.add(observation)
                if op_ids:
                    self.state.op_buffer.extend(op_ids)
                    self.state.last_op_at = max(self.state.last_op_at, observation.time_range[1])
        # audit retries: quarantined entries whose audit errored out
        for observation in self.audit_guard.deferred_observations():
            attempts = self._audit_attempts.get(observation.id, 0) + 1
            self._audit_attempts[observation.id] = attempts
            if attempts > self.config.max_deferrals:
                continue
            decision = self.audit_guard.audit(observation, self._recent_action_labels(), self.clock.now())
            if decision.transmit_data:
                self.audit_guard.release(observation.id)
                self.events.append("audit", self.clock.now(),
                                   {"observation": observation.id, "retry": attempts},
                                   outcome="transmitted")
                self._ingest_transmitted(observation)

    # ------------------------------------------------------------------
    # Drivers
    # ------------------------------------------------------------------

    def run_stream(self, observations: Iterable[Observation]) -> None:
        """Drive the pipeline over an ordered corpus, owning the clock.

        The runner advances the simulated clock itself so that due triggers
        (inactivity drains, the synthesis ceiling) fire at their logical
        times before later observations are processed.
        """
        previous_start = None
        for observation in observations:
            start = observation.time_range[0]
            if previous_start is None:
                # anchor the synthesis ceiling to the stream start
                if self.state.last_synthesis_at == 0:
                    self.state.last_synthesis_at = start
                self.clock.advance_to(start)
            elif start < previous_start:
                raise ValidationError(f"corpus not sorted by start time at {observation.id}")
            previous_start = start
            self.process_observation(observation)
        self.flush()

    def flush(self) -> None:
        """Drain pending work at end of stream for a complete, stable export."""
        self.drain_retriggers()
        self._retry_deferred()
        if self.state.op_buffer:
            batch = self.state.op_buffer
            self.state.op_buffer = []
            self.run_batch(batch, "flush")
        if self.state.batches_completed >= 1 and self.state.activities_dirty:
            self.run_synthesis(reason="flush")
        self.events.append("flush", self.clock.now(), {})

    def run_forced(self, stage: Optional[str] = None) -> None:
        """Manual trigger used by the service and the cycle-driving tests."""
        self.drain_retriggers()
        if stage in (None, "segment") and self.state.op_buffer:
            batch = self.state.op_buffer
            self.state.op_buffer = []
            self.run_batch(batch, "forced")
        if stage in (None, "synthesize", "refine"):
            self.run_synthesis(reason="forced")
