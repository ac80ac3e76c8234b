from .store import GraphStore, check_invariants
from .types import (
    Actor,
    ActionMeta,
    ActivityMeta,
    ConstraintFlag,
    EdgeKind,
    FlagKind,
    GraphEdge,
    GraphNode,
    GuardVerdict,
    Mutation,
    MutationKind,
    NodeStatus,
    OperationMeta,
    StrivingMeta,
    Tier,
    VerdictOutcome,
)
from .export import canonical_export, canonical_export_bytes, tree_text

__all__ = [
    "Actor", "ActionMeta", "ActivityMeta", "ConstraintFlag", "EdgeKind", "FlagKind",
    "GraphEdge", "GraphNode", "GraphStore", "GuardVerdict", "Mutation", "MutationKind",
    "NodeStatus", "OperationMeta", "StrivingMeta", "Tier", "VerdictOutcome",
    "canonical_export", "canonical_export_bytes", "check_invariants", "tree_text",
]
