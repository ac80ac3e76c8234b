"""Deterministic, byte-comparable serializations of the graph.

The canonical export orders nodes by tier (operations first) then id, and
edges by id, so two stores holding the same state always serialize to the
same bytes. Removed nodes are excluded unless explicitly requested.
"""

from __future__ import annotations

import json

from .store import GraphStore, LOG_MAGIC, LOG_VERSION
from .types import TIER_ORDER, Tier, node_sort_key


def canonical_export(store: GraphStore, include_removed: bool = False,
                     confidence_threshold: int = 5) -> dict:
    if include_removed:
        nodes = sorted(store.nodes.values(), key=lambda n: (TIER_ORDER[n.tier], node_sort_key(n.id)))
        edges = sorted(store.edges.values(), key=lambda e: node_sort_key(e.id))
    else:
        nodes = sorted(store.live_nodes(), key=lambda n: (TIER_ORDER[n.tier], node_sort_key(n.id)))
        edges = store.live_edges()
    node_docs = []
    for node in nodes:
        doc = node.to_dict()
        if node.tier == Tier.STRIVING:
            doc["low_confidence"] = node.confidence < confidence_threshold
        node_docs.append(doc)
    return {
        "format": LOG_MAGIC,
        "version": LOG_VERSION,
        "nodes": node_docs,
        "edges": [e.to_dict() for e in edges],
    }


def canonical_export_bytes(store: GraphStore, include_removed: bool = False,
                           confidence_threshold: int = 5) -> bytes:
    doc = canonical_export(store, include_removed, confidence_threshold)
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def tree_text(store: GraphStore, confidence_threshold: int = 5) -> str:
    """Human-readable striving -> activity -> action -> operation tree."""
    lines: list[str] = []
    strivings = store.live_nodes(Tier.STRIVING)
    if not strivings and not store.live_nodes():
        return "(empty graph)\n"

    def flag_suffix(node) -> str:
        parts = [f.value.replace("_", "-") for f in sorted(node.flags, key=lambda k: k.value)]
        if node.tier == Tier.STRIVING and node.confidence < confidence_threshold:
            parts.append("low-confidence")
        return f" [{', '.join(parts)}]" if parts else ""

    def walk(node, indent: int) -> None:
        lines.append(f"{'  ' * indent}- {node.id}: {node.label}{flag_suffix(node)}")
        for child in store.children(node.id):
            walk(child, indent + 1)

    for striving in strivings:
        walk(striving, 0)
    assigned = {a.id for s in strivings for a in store.children(s.id)}
    orphans = [a for a in store.live_nodes(Tier.ACTIVITY) if a.id not in assigned]
    if orphans:
        lines.append("- (unassigned activities)")
        for orphan in orphans:
            walk(orphan, 1)
    return "\n".join(lines) + "\n"
