"""Stage plumbing: prompt input formatting, structural checks, result appliers.

Model outputs are validated against the structural rules here *before* any
mutation is submitted, so the store guard stays about user constraints only.
Appliers submit everything through GraphStore.apply with the pipeline actor;
whatever the guard drops, stays dropped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..clock import to_iso
from ..config import PipelineConfig
from ..errors import SchemaError
from ..graph import Actor, GraphStore, MutationKind, NodeStatus, Tier, VerdictOutcome
from ..graph.types import FlagKind, node_sort_key
from .records import ActivityCandidate, ReconcileDecision, StrivingRecord, SynthesisResult
from .temporal import Interval, compute_temporal_edges

logger = logging.getLogger(__name__)


def _json_block(items: list) -> str:
    return json.dumps(items, sort_keys=True, indent=1)


# ---------------------------------------------------------------------------
# Prompt input formatting
# ---------------------------------------------------------------------------

def format_operations(store: GraphStore, op_ids: list[str]) -> str:
    items = []
    for index, op_id in enumerate(op_ids, start=1):
        node = store.node(op_id)
        meta = node.metadata
        items.append({
            "index": index,
            "id": node.id,
            "text": node.label,
            "tool_kind": meta.tool_kind if meta else "other",
            "social_target": meta.social_target if meta else "none",
            "affect_hint": meta.affect_hint if meta else "none",
            "start": to_iso(node.time_range[0]) if node.time_range else None,
        })
    return _json_block(items)


def format_actions(store: GraphStore, action_ids: list[str], assigned_to: bool = False) -> str:
    items = []
    for action_id in action_ids:
        node = store.node(action_id)
        meta = node.metadata
        item = {
            "id": node.id,
            "label": node.label,
            "conf": node.confidence,
            "object": meta.object_label if meta else "",
            "outcome": meta.outcome_type if meta else "other",
            "domain": meta.domain if meta else "other",
            "community": meta.community if meta else "none",
            "engage": meta.engagement_state if meta else "sustained_focus",
            "cog": meta.cognitive_mode if meta else "knowledge_based",
            "init": meta.initiation if meta else "self_initiated",
            "social": meta.social_mode if meta else "solo",
            "start": to_iso(node.time_range[0]) if node.time_range else None,
            "end": to_iso(node.time_range[1]) if node.time_range else None,
        }
        if assigned_to:
            item["assigned_to"] = [
                f"{parent.id}:{parent.label}" for parent in store.parents(action_id)
            ]
        items.append(item)
    return _json_block(items)


def format_activities(store: GraphStore, activity_ids: list[str]) -> str:
    items = []
    for activity_id in activity_ids:
        node = store.node(activity_id)
        meta = node.metadata
        items.append({
            "id": node.id,
            "label": node.label,
            "status": node.status.value,
            "confidence": node.confidence,
            "purpose": meta.purpose if meta else "",
            "identity_context": meta.identity_context if meta else "work",
            "flags": sorted(f.value for f in node.flags),
            "action_ids": [c.id for c in store.children(activity_id)],
        })
    return _json_block(items)


def format_strivings(store: GraphStore, striving_ids: list[str]) -> str:
    items = []
    for striving_id in striving_ids:
        node = store.node(striving_id)
        items.append({
            "id": node.id,
            "label": node.label,
            "confidence": node.confidence,
            "flags": sorted(f.value for f in node.flags),
            "activity_ids": [c.id for c in store.children(striving_id)],
        })
    return _json_block(items)


def format_temporal_context(store: GraphStore, action_ids: list[str]) -> str:
    """Chronological deltas across the batch; a weak prior for clustering."""
    timed = [store.node(a) for a in action_ids]
    timed = [n for n in timed if n.time_range]
    timed.sort(key=lambda n: (n.time_range[0], node_sort_key(n.id)))
    lines = []
    for previous, current in zip(timed, timed[1:]):
        delta_s = max(0, (current.time_range[0] - previous.time_range[1]) // 1000)
        lines.append(f"{previous.id} -> {current.id}: +{delta_s}s")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Structural checks handed to the gateway as extra validation
# ---------------------------------------------------------------------------

def segmentation_check(batch_size: int) -> Callable[[dict], None]:
    def check(record: dict) -> None:
        segments = sorted(record["actions"], key=lambda s: s["start"])
        if segments[0]["start"] != 1:
            raise SchemaError("segments must start at operation 1")
        for previous, current in zip(segments, segments[1:]):
            if current["start"] != previous["end"] + 1:
                raise SchemaError(
                    f"segments must be contiguous and non-overlapping: "
                    f"[{previous['start']},{previous['end']}] then [{current['start']},{current['end']}]"
                )
        if segments[-1]["end"] != batch_size:
            raise SchemaError(f"segments must cover all {batch_size} operations")
    return check


def coverage_check(batch_action_ids: list[str]) -> Callable[[dict], None]:
    def check(record: dict) -> None:
        covered = set()
        for candidate in record["candidates"]:
            covered.update(candidate["action_ids"])
        missing = [a for a in batch_action_ids if a not in covered]
        if missing:
            raise SchemaError(f"every current-batch action needs a candidate; missing {missing}")
    return check


def reconcile_check(candidate_count: int, existing_ids: set[str]) -> Callable[[dict], None]:
    def check(record: dict) -> None:
        seen = set()
        for decision in record["decisions"]:
            index = decision["candidate_index"]
            if not 0 <= index < candidate_count:
                raise SchemaError(f"candidate_index {index} out of range")
            if index in seen:
                raise SchemaError(f"candidate {index} decided twice")
            seen.add(index)
            unknown = [t for t in decision["targets"] if t not in existing_ids]
            if unknown:
                raise SchemaError(f"decision targets unknown activities {unknown}")
        if len(seen) != candidate_count:
            raise SchemaError("choose ONE decision per candidate")
    return check


def synthesis_check(existing_striving_ids: set[str], known_activity_ids: set[str],
                    require_coverage_of: Optional[set[str]] = None) -> Callable[[dict], None]:
    def check(record: dict) -> None:
        accounted = set()
        for striving in record["strivings"]:
            goal_id = striving.get("goal_id")
            if goal_id:
                if goal_id not in existing_striving_ids:
                    raise SchemaError(f"goal_id {goal_id!r} does not reference an existing striving")
                accounted.add(goal_id)
            unknown = [a for a in striving["activity_ids"] if a not in known_activity_ids]
            if unknown:
                raise SchemaError(f"striving references unknown activities {unknown}")
        for goal_id, _ in ((d["goal_id"], d["reason"]) for d in record["dropped_goals"]):
            if goal_id not in existing_striving_ids:
                raise SchemaError(f"dropped_goals references unknown striving {goal_id!r}")
            accounted.add(goal_id)
        missing = existing_striving_ids - accounted
        if missing:
            raise SchemaError(
                f"every existing goal must appear in strivings or dropped_goals; missing {sorted(missing)}"
            )
        if require_coverage_of:
            covered = set()
            for striving in record["strivings"]:
                covered.update(striving["activity_ids"])
            uncovered = require_coverage_of - covered
            if uncovered:
                raise SchemaError(f"stable activities left unassigned: {sorted(uncovered)}")
    return check


# ---------------------------------------------------------------------------
# Appliers
# ---------------------------------------------------------------------------

def apply_segmentation(store: GraphStore, record: dict, batch_op_ids: list[str],
                       cause: str, ts: int) -> list[str]:
    """Create action nodes and their parent edges from a validated segmentation."""
    action_ids = []
    for segment in sorted(record["actions"], key=lambda s: s["start"]):
        op_ids = batch_op_ids[segment["start"] - 1: segment["end"]]
        ranges = [store.node(op).time_range for op in op_ids if store.node(op).time_range]
        time_range = [min(r[0] for r in ranges), max(r[1] for r in ranges)] if ranges else None
        metadata = {
            "object_label": segment["object_label"],
            "outcome_type": segment["outcome_type"],
            "domain": segment["domain"],
            "community": segment["community"],
            "engagement_state": segment["engagement_state"],
            "cognitive_mode": segment["cognitive_mode"],
            "initiation": segment["initiation"],
            "social_mode": segment["social_mode"],
        }
        verdict = store.submit(MutationKind.CREATE_NODE, {
            "tier": "action",
            "label": segment["label"],
            "reasoning": segment["reasoning"],
            "confidence": segment["confidence"],
            "time_range": time_range,
            "metadata": metadata,
        }, actor=Actor.PIPELINE, cause=cause, ts=ts)
        action_id = verdict.affected[0]
        for op_id in op_ids:
            store.submit(MutationKind.ADD_EDGE,
                         {"src": action_id, "dst": op_id, "kind": "parent_child"},
                         actor=Actor.PIPELINE, cause=cause, ts=ts)
        action_ids.append(action_id)
    return action_ids


def link_temporal_edges(store: GraphStore, new_action_ids: list[str],
                        config: PipelineConfig, cause: str, ts: int) -> dict[str, int]:
    """Materialize deterministic temporal edges for a batch of new actions."""
    new_intervals = []
    for action_id in new_action_ids:
        node = store.node(action_id)
        if node.time_range:
            new_intervals.append(Interval(action_id, node.time_range[0], node.time_range[1]))
    prior_intervals = [
        Interval(n.id, n.time_range[0], n.time_range[1])
        for n in store.live_nodes(Tier.ACTION)
        if n.time_range and n.id not in set(new_action_ids)
    ]
    edges = compute_temporal_edges(new_intervals, prior_intervals, config.overlap_lookback_ms)
    for src, dst in sorted(edges.follows):
        store.submit(MutationKind.ADD_EDGE, {"src": src, "dst": dst, "kind": "follows"},
                     actor=Actor.PIPELINE, cause=cause, ts=ts)
    for kind, pairs in (("co_occurs", edges.co_occurs), ("overlaps", edges.overlaps)):
        for src, dst in sorted(pairs):
            store.submit(MutationKind.ADD_EDGE, {"src": src, "dst": dst, "kind": kind},
                         actor=Actor.PIPELINE, cause=cause, ts=ts)
    return {"follows": len(edges.follows), "co_occurs": len(edges.co_occurs),
            "overlaps": len(edges.overlaps)}


@dataclass
class ReconcileOutcome:
    touched_activities: list[str] = field(default_factory=list)
    dirtied: bool = False
    applied_decisions: list[dict] = field(default_factory=list)


def _activity_payload_from_candidate(candidate: ActivityCandidate, batch_id: str) -> dict:
    return {
        "tier": "activity",
        "label": candidate.description,
        "reasoning": candidate.reasoning,
        "confidence": candidate.confidence,
        "metadata": {
            "purpose": candidate.purpose,
            "people": candidate.people,
            "resources": candidate.resources,
            "temporal_pattern": candidate.temporal_pattern,
            "engagement_profile": candidate.engagement_profile,
            "initiation_profile": candidate.initiation_profile,
            "identity_context": candidate.identity_context,
            "action_valences": dict(zip(candidate.action_ids, candidate.action_valences)),
            "batch_ids": [batch_id],
        },
    }


def _attach_actions(store: GraphStore, activity_id: str, candidate: ActivityCandidate,
                    batch_id: str, cause: str, ts: int) -> None:
    node = store.node(activity_id)
    for action_id in candidate.action_ids:
        if store.maybe_node(action_id) is None or store.node(action_id).removed:
            continue
        store.submit(MutationKind.ADD_EDGE,
                     {"src": activity_id, "dst": action_id, "kind": "parent_child"},
                     actor=Actor.PIPELINE, cause=cause, ts=ts)
    meta = store.node(activity_id).metadata
    valences = dict(meta.action_valences)
    valences.update(dict(zip(candidate.action_ids, candidate.action_valences)))
    batch_ids = list(meta.batch_ids)
    if batch_id not in batch_ids:
        batch_ids.append(batch_id)
    payload = {
        "node_id": activity_id,
        "metadata": {
            "purpose": meta.purpose or candidate.purpose,
            "people": meta.people,
            "resources": meta.resources,
            "temporal_pattern": meta.temporal_pattern or candidate.temporal_pattern,
            "engagement_profile": meta.engagement_profile,
            "initiation_profile": meta.initiation_profile,
            "identity_context": meta.identity_context,
            "action_valences": valences,
            "batch_ids": batch_ids,
        },
    }
    ranges = [c.time_range for c in store.children(activity_id) if c.time_range]
    if node.time_range:
        ranges.append(node.time_range)
    if ranges:
        payload["time_range"] = [min(r[0] for r in ranges), max(r[1] for r in ranges)]
    store.submit(MutationKind.SET_METADATA, payload, actor=Actor.PIPELINE, cause=cause, ts=ts)


def apply_reconcile_decisions(store: GraphStore, decisions: list[ReconcileDecision],
                              candidates: list[ActivityCandidate], batch_id: str,
                              config: PipelineConfig, cause: str, ts: int) -> ReconcileOutcome:
    outcome = ReconcileOutcome()
    for decision in sorted(decisions, key=lambda d: d.candidate_index):
        candidate = candidates[decision.candidate_index]
        applied = {"decision": decision.decision, "candidate_index": decision.candidate_index}
        if decision.decision == "match":
            target = decision.targets[0]
            _attach_actions(store, target, candidate, batch_id, cause, ts)
            applied["target"] = target
            outcome.touched_activities.append(target)
        elif decision.decision == "revise":
            target = decision.targets[0]
            verdict = store.submit(MutationKind.RELABEL, {"node_id": target, "label": decision.label},
                                   actor=Actor.PIPELINE, cause=cause, ts=ts)
            _attach_actions(store, target, candidate, batch_id, cause, ts)
            applied["target"] = target
            applied["relabel_outcome"] = verdict.outcome.value
            outcome.touched_activities.append(target)
            outcome.dirtied = True
        elif decision.decision == "new":
            verdict = store.submit(MutationKind.CREATE_NODE,
                                   _activity_payload_from_candidate(candidate, batch_id),
                                   actor=Actor.PIPELINE, cause=cause, ts=ts)
            new_id = verdict.affected[0]
            _attach_actions(store, new_id, candidate, batch_id, cause, ts)
            applied["target"] = new_id
            outcome.touched_activities.append(new_id)
            outcome.dirtied = True
        else:  # merge: first target is the merge target, the rest are sources
            target, *sources = decision.targets
            verdict = store.submit(MutationKind.MERGE_NODES, {
                "source_ids": sources,
                "target_id": target,
                "label": decision.label,
            }, actor=Actor.PIPELINE, cause=cause, ts=ts)
            applied["merge_outcome"] = verdict.outcome.value
            if verdict.outcome == VerdictOutcome.DROPPED:
                result_id = target
            else:
                result_id = verdict.affected[0]
            _attach_actions(store, result_id, candidate, batch_id, cause, ts)
            applied["target"] = result_id
            outcome.touched_activities.append(result_id)
            outcome.dirtied = True
        outcome.applied_decisions.append(applied)
    if _update_stabilization(store, outcome.touched_activities, config, cause, ts):
        # a newly stable activity changes the synthesis input set
        outcome.dirtied = True
    return outcome


def _update_stabilization(store: GraphStore, activity_ids: list[str],
                          config: PipelineConfig, cause: str, ts: int) -> bool:
    stabilized = False
    for activity_id in activity_ids:
        node = store.maybe_node(activity_id)
        if node is None or node.removed or node.status != NodeStatus.PROVISIONAL:
            continue
        if node.metadata and len(node.metadata.batch_ids) >= config.stabilization_batches:
            store.submit(MutationKind.SET_STATUS, {"node_id": activity_id, "status": "stable"},
                         actor=Actor.PIPELINE, cause=cause, ts=ts)
            stabilized = True
    return stabilized


def recompute_activity_temporal_edges(store: GraphStore, config: PipelineConfig,
                                      cause: str, ts: int) -> None:
    """Replace the activity-tier temporal edge set from current time ranges.

    follows/overlaps derive from time ranges; co_occurs from shared growth
    batches. Deterministic, so recomputing every cycle keeps edges current as
    activity spans widen.
    """
    activities = [n for n in store.live_nodes(Tier.ACTIVITY) if n.time_range]
    intervals = [Interval(n.id, n.time_range[0], n.time_range[1]) for n in activities]
    edges = compute_temporal_edges(intervals, [], lookback_ms=config.overlap_lookback_ms)
    desired: set[tuple[str, str, str]] = set()
    for src, dst in edges.follows:
        desired.add((src, dst, "follows"))
    for a, b in edges.overlaps:
        desired.add((a, b, "overlaps"))
    batch_sets = {
        n.id: set(n.metadata.batch_ids) if n.metadata else set()
        for n in activities
    }
    ordered = sorted(batch_sets, key=node_sort_key)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if batch_sets[a] & batch_sets[b]:
                desired.add((a, b, "co_occurs"))

    from ..graph.types import EdgeKind

    current: set[tuple[str, str, str]] = set()
    for edge in store.live_edges():
        if edge.kind == EdgeKind.PARENT_CHILD:
            continue
        if store.nodes[edge.src].tier == Tier.ACTIVITY:
            current.add((edge.src, edge.dst, edge.kind.value))
    for src, dst, kind in sorted(current - desired):
        store.submit(MutationKind.REMOVE_EDGE, {"src": src, "dst": dst, "kind": kind},
                     actor=Actor.PIPELINE, cause=cause, ts=ts)
    for src, dst, kind in sorted(desired - current):
        store.submit(MutationKind.ADD_EDGE, {"src": src, "dst": dst, "kind": kind},
                     actor=Actor.PIPELINE, cause=cause, ts=ts)


@dataclass
class SynthesisApplication:
    surviving: list[str] = field(default_factory=list)
    created: list[str] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
    filtered_rejected: list[str] = field(default_factory=list)


def filter_rejected_labels(store: GraphStore, result: SynthesisResult) -> tuple[SynthesisResult, list[str]]:
    """Strip strivings that would recreate a label the user rejected."""
    rejected_labels = {
        n.label for n in store.nodes.values() if n.has_flag(FlagKind.REJECTED)
    }
    kept: list[StrivingRecord] = []
    filtered: list[str] = []
    for record in result.strivings:
        if record.goal_id is None and record.label in rejected_labels:
            filtered.append(record.label)
            logger.info("filtered recreated rejected label %r", record.label)
            continue
        if record.goal_id is not None and record.label in rejected_labels:
            current = store.node(record.goal_id).label
            if current != record.label:
                record.label = current  # keep the original; the relabel would resurrect a rejection
                filtered.append(record.label)
        kept.append(record)
    return SynthesisResult(strivings=kept, dropped_goals=result.dropped_goals), filtered


def apply_synthesis(store: GraphStore, result: SynthesisResult, config: PipelineConfig,
                    cause: str, ts: int) -> SynthesisApplication:
    application = SynthesisApplication()
    for record in result.strivings:
        metadata = {
            "needs": sorted(record.needs),
            "orientation": record.orientation,
            "aspiration_vs_obligation": record.aspiration_vs_obligation,
            "autonomy": record.autonomy,
            "identity_link": record.identity_link,
            "feared_self": record.feared_self,
        }
        if record.goal_id is not None:
            node = store.node(record.goal_id)
            if node.label != record.label:
                store.submit(MutationKind.RELABEL, {"node_id": node.id, "label": record.label},
                             actor=Actor.PIPELINE, cause=cause, ts=ts)
            store.submit(MutationKind.SET_METADATA, {
                "node_id": node.id,
                "metadata": metadata,
                "confidence": record.confidence,
                "reasoning": record.reasoning,
            }, actor=Actor.PIPELINE, cause=cause, ts=ts)
            striving_id = node.id
            application.surviving.append(striving_id)
        else:
            verdict = store.submit(MutationKind.CREATE_NODE, {
                "tier": "striving",
                "label": record.label,
                "reasoning": record.reasoning,
                "confidence": record.confidence,
                "metadata": metadata,
                "status": "stable",
            }, actor=Actor.PIPELINE, cause=cause, ts=ts)
            striving_id = verdict.affected[0]
            application.created.append(striving_id)
        desired_children = [a for a in record.activity_ids
                            if store.maybe_node(a) is not None and not store.node(a).removed]
        current_children = [c.id for c in store.children(striving_id)]
        for activity_id in desired_children:
            if activity_id not in current_children:
                store.submit(MutationKind.ADD_EDGE,
                             {"src": striving_id, "dst": activity_id, "kind": "parent_child"},
                             actor=Actor.PIPELINE, cause=cause, ts=ts)
        for activity_id in current_children:
            if activity_id not in desired_children:
                store.submit(MutationKind.REMOVE_EDGE,
                             {"src": striving_id, "dst": activity_id, "kind": "parent_child"},
                             actor=Actor.PIPELINE, cause=cause, ts=ts)
    for goal_id, reason in result.dropped_goals:
        verdict = store.submit(MutationKind.SET_STATUS, {"node_id": goal_id, "status": "removed"},
                               actor=Actor.PIPELINE, cause=f"{cause} (dropped: {reason})", ts=ts)
        if verdict.outcome == VerdictOutcome.APPLIED:
            application.dropped.append(goal_id)
    return application
