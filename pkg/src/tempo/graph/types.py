"""Domain types for the striving hierarchy property graph.

Nodes live on one of four tiers (operation, action, activity, striving),
connected by parent-child edges between adjacent tiers and by temporal
edges (follows / co_occurs / overlaps) between siblings on the action and
activity tiers. Every write is expressed as a Mutation and judged by the
store's guard, which emits one GuardVerdict per mutation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional

from ..errors import InvariantError


class Tier(str, enum.Enum):
    OPERATION = "operation"
    ACTION = "action"
    ACTIVITY = "activity"
    STRIVING = "striving"


# Canonical ordering used by exports: bottom of the hierarchy first.
TIER_ORDER = {Tier.OPERATION: 0, Tier.ACTION: 1, Tier.ACTIVITY: 2, Tier.STRIVING: 3}

# parent tier -> child tier for parent_child edges
PARENT_CHILD = {
    Tier.STRIVING: Tier.ACTIVITY,
    Tier.ACTIVITY: Tier.ACTION,
    Tier.ACTION: Tier.OPERATION,
}

TEMPORAL_TIERS = {Tier.ACTION, Tier.ACTIVITY}


class NodeStatus(str, enum.Enum):
    PROVISIONAL = "provisional"
    STABLE = "stable"
    REMOVED = "removed"


class FlagKind(str, enum.Enum):
    LOCKED = "locked"
    USER_EDITED = "user_edited"
    USER_REASSIGNED = "user_reassigned"
    ENDORSED = "endorsed"
    REJECTED = "rejected"


class EdgeKind(str, enum.Enum):
    PARENT_CHILD = "parent_child"
    FOLLOWS = "follows"
    CO_OCCURS = "co_occurs"
    OVERLAPS = "overlaps"


SYMMETRIC_EDGE_KINDS = {EdgeKind.CO_OCCURS, EdgeKind.OVERLAPS}


class MutationKind(str, enum.Enum):
    CREATE_NODE = "create_node"
    RELABEL = "relabel"
    SET_METADATA = "set_metadata"
    ADD_EDGE = "add_edge"
    REMOVE_EDGE = "remove_edge"
    REMOVE_NODE = "remove_node"
    MERGE_NODES = "merge_nodes"
    SET_FLAG = "set_flag"
    SET_STATUS = "set_status"


class Actor(str, enum.Enum):
    PIPELINE = "pipeline"
    USER = "user"


class VerdictOutcome(str, enum.Enum):
    APPLIED = "applied"
    DROPPED = "dropped"
    DOWNGRADED = "downgraded"
    SKIPPED = "skipped"


# ---------------------------------------------------------------------------
# Tier metadata variants
# ---------------------------------------------------------------------------

TOOL_KINDS = frozenset({"editor", "messaging", "browser", "docs", "calendar", "data_analysis", "other"})
SOCIAL_TARGETS = frozenset({"advisor", "lab", "collaborators", "friends", "family", "none"})
AUTOMATICITY_HINTS = frozenset({"likely_habitual", "likely_deliberate", "unclear"})
AFFECT_HINTS = frozenset({"stressed", "rushed", "relaxed", "neutral", "none"})

OUTCOME_TYPES = frozenset({"produce_artifact", "communicate", "plan_organize", "learn_explore", "monitor_check", "other"})
DOMAINS = frozenset({"research", "teaching", "admin", "personal_life", "health", "other"})
COMMUNITIES = frozenset({"lab", "teaching_team", "students", "family_friends", "none"})
ENGAGEMENT_STATES = frozenset({"sustained_focus", "fragmented", "idle", "rapid_switching"})
COGNITIVE_MODES = frozenset({"skill_based", "rule_based", "knowledge_based"})
INITIATIONS = frozenset({"self_initiated", "externally_triggered"})
SOCIAL_MODES = frozenset({"solo", "synchronous", "async", "passive_consumption"})

ENGAGEMENT_PROFILES = frozenset({"mostly_sustained", "mostly_fragmented", "mixed"})
INITIATION_PROFILES = frozenset({"mostly_self_initiated", "mostly_externally_triggered", "mixed"})
IDENTITY_CONTEXTS = frozenset({"work", "personal", "creative", "social", "health"})
VALENCES = frozenset({"supports", "hinders", "neutral"})

NEEDS = frozenset({
    "competence", "autonomy", "relatedness", "status", "self_coherence", "understanding",
    "order", "nurturance", "safety", "growth", "stimulation", "purpose",
})
ORIENTATIONS = frozenset({"approach", "avoidance", "mixed"})
ASPIRATION_KINDS = frozenset({"ideal", "ought", "mixed"})
AUTONOMY_KINDS = frozenset({"autonomous", "controlled", "mixed"})


def _check_enum(value: str, allowed: frozenset, name: str) -> None:
    if value not in allowed:
        raise InvariantError(f"{name} must be one of {sorted(allowed)}, got {value!r}")


def _check_confidence(value: int, name: str = "confidence") -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 10:
        raise InvariantError(f"{name} must be an integer in [1, 10], got {value!r}")


@dataclass
class OperationMeta:
    tool_kind: str = "other"
    social_target: str = "none"
    rule_tags: list[str] = field(default_factory=list)
    automaticity_hint: str = "unclear"
    affect_hint: str = "none"
    decay: int = 5

    def validate(self) -> None:
        _check_enum(self.tool_kind, TOOL_KINDS, "tool_kind")
        _check_enum(self.social_target, SOCIAL_TARGETS, "social_target")
        _check_enum(self.automaticity_hint, AUTOMATICITY_HINTS, "automaticity_hint")
        _check_enum(self.affect_hint, AFFECT_HINTS, "affect_hint")
        _check_confidence(self.decay, "decay")


@dataclass
class ActionMeta:
    object_label: str = ""
    outcome_type: str = "other"
    domain: str = "other"
    community: str = "none"
    engagement_state: str = "sustained_focus"
    cognitive_mode: str = "knowledge_based"
    initiation: str = "self_initiated"
    social_mode: str = "solo"

    def validate(self) -> None:
        _check_enum(self.outcome_type, OUTCOME_TYPES, "outcome_type")
        _check_enum(self.domain, DOMAINS, "domain")
        _check_enum(self.community, COMMUNITIES, "community")
        _check_enum(self.engagement_state, ENGAGEMENT_STATES, "engagement_state")
        _check_enum(self.cognitive_mode, COGNITIVE_MODES, "cognitive_mode")
        _check_enum(self.initiation, INITIATIONS, "initiation")
        _check_enum(self.social_mode, SOCIAL_MODES, "social_mode")


@dataclass
class ActivityMeta:
    purpose: str = ""
    people: list[str] = field(default_factory=list)
    resources: list[str] = field(default_factory=list)
    temporal_pattern: str = ""
    engagement_profile: str = "mixed"
    initiation_profile: str = "mixed"
    identity_context: str = "work"
    action_valences: dict[str, str] = field(default_factory=dict)
    batch_ids: list[str] = field(default_factory=list)  # distinct batches that grew this activity

    def validate(self) -> None:
        _check_enum(self.engagement_profile, ENGAGEMENT_PROFILES, "engagement_profile")
        _check_enum(self.initiation_profile, INITIATION_PROFILES, "initiation_profile")
        _check_enum(self.identity_context, IDENTITY_CONTEXTS, "identity_context")
        for action_id, valence in self.action_valences.items():
            _check_enum(valence, VALENCES, f"valence for {action_id}")


@dataclass
class StrivingMeta:
    needs: list[str] = field(default_factory=list)
    orientation: str = "mixed"
    aspiration_vs_obligation: str = "mixed"
    autonomy: str = "mixed"
    identity_link: str = ""
    feared_self: str = ""

    def validate(self) -> None:
        for need in self.needs:
            _check_enum(need, NEEDS, "needs entry")
        _check_enum(self.orientation, ORIENTATIONS, "orientation")
        _check_enum(self.aspiration_vs_obligation, ASPIRATION_KINDS, "aspiration_vs_obligation")
        _check_enum(self.autonomy, AUTONOMY_KINDS, "autonomy")


META_TYPES = {
    Tier.OPERATION: OperationMeta,
    Tier.ACTION: ActionMeta,
    Tier.ACTIVITY: ActivityMeta,
    Tier.STRIVING: StrivingMeta,
}


def meta_from_dict(tier: Tier, data: dict[str, Any]):
    """Build and validate the tier's metadata variant from a plain dict."""
    cls = META_TYPES[tier]
    allowed = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(data) - allowed
    if unknown:
        raise InvariantError(f"unknown {tier.value} metadata fields: {sorted(unknown)}")
    meta = cls(**data)
    meta.validate()
    return meta


def meta_to_dict(meta) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for name in meta.__dataclass_fields__:
        value = getattr(meta, name)
        out[name] = list(value) if isinstance(value, list) else dict(value) if isinstance(value, dict) else value
    return out


# ---------------------------------------------------------------------------
# Graph records
# ---------------------------------------------------------------------------

@dataclass
class ConstraintFlag:
    kind: FlagKind
    set_at: int
    origin_edit: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "set_at": self.set_at, "origin_edit": self.origin_edit}


@dataclass
class GraphNode:
    id: str
    tier: Tier
    label: str
    reasoning: str = ""
    confidence: int = 5
    created_at: int = 0
    updated_at: int = 0
    time_range: Optional[tuple[int, int]] = None
    metadata: Any = None
    flags: dict[FlagKind, ConstraintFlag] = field(default_factory=dict)
    annotations: list[tuple[str, str]] = field(default_factory=list)
    evidence: list[str] = field(default_factory=list)
    status: NodeStatus = NodeStatus.PROVISIONAL
    needs_review: bool = False
    merged_into: Optional[str] = None

    def validate(self) -> None:
        _check_confidence(self.confidence)
        if self.time_range is not None and self.time_range[0] > self.time_range[1]:
            raise InvariantError(f"{self.id}: time_range start after end")
        if self.metadata is not None and not isinstance(self.metadata, META_TYPES[self.tier]):
            raise InvariantError(f"{self.id}: metadata variant does not match tier {self.tier.value}")
        if FlagKind.ENDORSED in self.flags and FlagKind.REJECTED in self.flags:
            raise InvariantError(f"{self.id}: endorsed and rejected are mutually exclusive")
        if self.metadata is not None:
            self.metadata.validate()

    def has_flag(self, kind: FlagKind) -> bool:
        return kind in self.flags

    @property
    def removed(self) -> bool:
        return self.status == NodeStatus.REMOVED

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "tier": self.tier.value,
            "label": self.label,
            "reasoning": self.reasoning,
            "confidence": self.confidence,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "time_range": list(self.time_range) if self.time_range else None,
            "metadata": meta_to_dict(self.metadata) if self.metadata is not None else None,
            "flags": [self.flags[k].to_dict() for k in sorted(self.flags, key=lambda f: f.value)],
            "annotations": [list(a) for a in self.annotations],
            "evidence": list(self.evidence),
            "status": self.status.value,
            "needs_review": self.needs_review,
            "merged_into": self.merged_into,
        }


@dataclass
class GraphEdge:
    id: str
    src: str
    dst: str
    kind: EdgeKind
    created_at: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "src": self.src, "dst": self.dst, "kind": self.kind.value, "created_at": self.created_at}


@dataclass
class Mutation:
    kind: MutationKind
    payload: dict[str, Any]
    actor: Actor
    cause: str = ""
    ts: int = 0
    seq: int = 0  # assigned by the store when logged

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "kind": self.kind.value,
            "actor": self.actor.value,
            "cause": self.cause,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Mutation":
        return cls(
            kind=MutationKind(data["kind"]),
            payload=data["payload"],
            actor=Actor(data["actor"]),
            cause=data.get("cause", ""),
            ts=data.get("ts", 0),
            seq=data.get("seq", 0),
        )


@dataclass
class GuardVerdict:
    mutation_seq: int
    outcome: VerdictOutcome
    rule: str = ""
    affected: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mutation_seq": self.mutation_seq,
            "outcome": self.outcome.value,
            "rule": self.rule,
            "affected": list(self.affected),
        }


def node_sort_key(node_id: str) -> tuple[str, int]:
    """Sort key for ids shaped like 'striving-3': (prefix, numeric suffix)."""
    prefix, _, num = node_id.rpartition("-")
    try:
        return (prefix, int(num))
    except ValueError:
        return (node_id, 0)
