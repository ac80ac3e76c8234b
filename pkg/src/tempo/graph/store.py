"""Durable property-graph store with one guarded mutation path.

Every write enters through :meth:`GraphStore.apply` as a Mutation and is
judged against the user-constraint flags before anything changes:

* pipeline relabels / removals of ``user_edited`` or ``locked`` nodes are
  dropped;
* pipeline merges into a locked (or user-edited) target are downgraded to a
  match: the sources' evidence is re-parented, the target label is untouched;
* locked / user-edited sources are skipped out of pipeline merge groups;
* pipeline removal of a ``user_reassigned`` activity's parent edge is
  dropped;
* constraint flags themselves can only be written by the user.

User-actor mutations bypass the guard entirely: an explicit user action may
modify anything.

Durability is an append-only mutation log (one JSON record per line behind a
plain-text header) plus on-demand snapshots. Replaying the log from empty
through the same guard code reproduces the store state and the verdict
sequence exactly, which is what the crash-recovery tests lean on.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import threading
from collections import deque
from pathlib import Path
from typing import Optional

from ..errors import IntegrityError, InvariantError, NotFoundError, TierViolationError
from .types import (
    Actor,
    ConstraintFlag,
    EdgeKind,
    FlagKind,
    GraphEdge,
    GraphNode,
    GuardVerdict,
    Mutation,
    MutationKind,
    NodeStatus,
    PARENT_CHILD,
    SYMMETRIC_EDGE_KINDS,
    TEMPORAL_TIERS,
    Tier,
    VerdictOutcome,
    meta_from_dict,
    node_sort_key,
)

logger = logging.getLogger(__name__)

LOG_MAGIC = "TEMPO-GRAPH"
LOG_VERSION = 1

# Guard rule strings surfaced in verdicts.
RULE_USER_EDITED_LABEL = "user-edited label verbatim"
RULE_LOCKED = "locked: do not merge, delete, or substantially alter"
RULE_LOCKED_TARGET = "merge into protected target downgraded to match"
RULE_LOCKED_SOURCE = "protected source skipped from merge group"
RULE_REASSIGNED = "user-reassigned: respect current goal assignment"
RULE_FLAGS_USER_OWNED = "constraint flags are user-owned"
RULE_EMPTY_MERGE = "merge group reduced below two participants"

# label constraints: only these flags pin the label itself
_PROTECTED = (FlagKind.USER_EDITED, FlagKind.LOCKED)
# existence constraints: these nodes survive pipeline deletion and merge-absorption
# (a merged-away user_reassigned activity would lose its kept assignment)
_UNDELETABLE = (FlagKind.USER_EDITED, FlagKind.LOCKED, FlagKind.USER_REASSIGNED)

# Mutation kinds the guard vets when the pipeline touches a flagged node.
GUARDED_KINDS = {
    MutationKind.RELABEL,
    MutationKind.REMOVE_NODE,
    MutationKind.SET_STATUS,
    MutationKind.MERGE_NODES,
    MutationKind.REMOVE_EDGE,
    MutationKind.SET_FLAG,
}


class GraphStore:
    """Single-writer property graph; all mutations pass one serialized queue."""

    def __init__(self, log_path: str | Path | None = None):
        self._lock = threading.RLock()
        self.nodes: dict[str, GraphNode] = {}
        self.edges: dict[str, GraphEdge] = {}
        self._adjacency: dict[str, set[str]] = {}
        self._counters: dict[str, int] = {t.value: 0 for t in Tier}
        self._counters["edge"] = 0
        self._seq = 0
        self.mutations: list[Mutation] = []
        self.verdicts: list[GuardVerdict] = []
        self.label_pins: dict[str, str] = {}  # node id -> label at user_edited flag time
        self._log_path = Path(log_path) if log_path is not None else None
        self._log_handle = None
        self._replaying = False
        if self._log_path is not None:
            self._open_log()

    # ------------------------------------------------------------------
    # Log plumbing
    # ------------------------------------------------------------------

    def _open_log(self) -> None:
        assert self._log_path is not None
        self._log_path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not self._log_path.exists() or self._log_path.stat().st_size == 0
        self._log_handle = open(self._log_path, "a", encoding="utf-8")
        if fresh:
            self._log_handle.write(f"{LOG_MAGIC} {LOG_VERSION}\n")
            self._log_handle.flush()

    def _append_log(self, mutation: Mutation) -> None:
        if self._log_handle is None or self._replaying:
            return
        self._log_handle.write(json.dumps(mutation.to_dict(), sort_keys=True) + "\n")
        self._log_handle.flush()

    @classmethod
    def open(cls, log_path: str | Path) -> "GraphStore":
        """Open (or create) a store backed by ``log_path``, replaying its log.

        A trailing partial line (the footprint of a crash mid-write) is
        ignored; the corresponding mutation simply never happened. A corrupt
        record anywhere else is an integrity error.
        """
        log_path = Path(log_path)
        store = cls()
        if log_path.exists() and log_path.stat().st_size > 0:
            text = log_path.read_text(encoding="utf-8")
            lines = text.split("\n")
            if lines and lines[-1] == "":
                lines.pop()
                trailing_complete = True
            else:
                trailing_complete = False
            if not lines or lines[0].strip() != f"{LOG_MAGIC} {LOG_VERSION}":
                raise IntegrityError(f"{log_path}: expected header '{LOG_MAGIC} {LOG_VERSION}'")
            store._replaying = True
            try:
                for i, line in enumerate(lines[1:], start=2):
                    last = i == len(lines)
                    try:
                        record = json.loads(line)
                    except json.JSONDecodeError:
                        if last and not trailing_complete:
                            logger.warning("%s: dropping torn trailing record at line %d", log_path, i)
                            break
                        raise IntegrityError(f"{log_path}: corrupt record at line {i}")
                    mutation = Mutation.from_dict(record)
                    expected_seq = store._seq + 1
                    if mutation.seq != expected_seq:
                        raise IntegrityError(
                            f"{log_path}: sequence gap at line {i} (expected {expected_seq}, got {mutation.seq})"
                        )
                    store.apply(mutation)
            finally:
                store._replaying = False
        store._log_path = log_path
        store._open_log()
        return store

    def close(self) -> None:
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None

    # ------------------------------------------------------------------
    # Lookup helpers
    # ------------------------------------------------------------------

    def node(self, node_id: str) -> GraphNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NotFoundError(f"unknown node id {node_id!r}") from None

    def maybe_node(self, node_id: str) -> Optional[GraphNode]:
        return self.nodes.get(node_id)

    def live_nodes(self, tier: Tier | None = None) -> list[GraphNode]:
        out = [n for n in self.nodes.values() if not n.removed and (tier is None or n.tier == tier)]
        out.sort(key=lambda n: node_sort_key(n.id))
        return out

    def live_edges(self) -> list[GraphEdge]:
        out = [
            e for e in self.edges.values()
            if not self.nodes[e.src].removed and not self.nodes[e.dst].removed
        ]
        out.sort(key=lambda e: node_sort_key(e.id))
        return out

    def edges_of(self, node_id: str, kind: EdgeKind | None = None) -> list[GraphEdge]:
        ids = self._adjacency.get(node_id, set())
        out = [self.edges[eid] for eid in ids if kind is None or self.edges[eid].kind == kind]
        out.sort(key=lambda e: node_sort_key(e.id))
        return out

    def children(self, node_id: str, include_removed: bool = False) -> list[GraphNode]:
        out = []
        for edge in self.edges_of(node_id, EdgeKind.PARENT_CHILD):
            if edge.src == node_id:
                child = self.nodes[edge.dst]
                if include_removed or not child.removed:
                    out.append(child)
        out.sort(key=lambda n: node_sort_key(n.id))
        return out

    def parents(self, node_id: str, include_removed: bool = False) -> list[GraphNode]:
        out = []
        for edge in self.edges_of(node_id, EdgeKind.PARENT_CHILD):
            if edge.dst == node_id:
                parent = self.nodes[edge.src]
                if include_removed or not parent.removed:
                    out.append(parent)
        out.sort(key=lambda n: node_sort_key(n.id))
        return out

    def find_edge(self, src: str, dst: str, kind: EdgeKind) -> Optional[GraphEdge]:
        if kind in SYMMETRIC_EDGE_KINDS:
            src, dst = self._canonical_pair(src, dst)
        for edge in self.edges_of(src, kind):
            if edge.src == src and edge.dst == dst:
                return edge
        return None

    @staticmethod
    def _canonical_pair(a: str, b: str) -> tuple[str, str]:
        return (a, b) if node_sort_key(a) <= node_sort_key(b) else (b, a)

    def resolve_evidence(self, node_id: str) -> list[str]:
        """Evidence refs for a node, resolved transitively down to operations.

        Deduplicated, in first-encounter order of a breadth-first descent;
        stable because children are visited in id order.
        """
        root = self.node(node_id)
        seen_nodes = {root.id}
        queue = deque([root])
        refs: list[str] = []
        seen_refs: set[str] = set()
        while queue:
            current = queue.popleft()
            for ref in current.evidence:
                if ref not in seen_refs:
                    seen_refs.add(ref)
                    refs.append(ref)
            for child in self.children(current.id):
                if child.id not in seen_nodes:
                    seen_nodes.add(child.id)
                    queue.append(child)
        return refs

    def query_subgraph(self, root: str, depth: int) -> tuple[list[GraphNode], list[GraphEdge]]:
        """Breadth-first closure over parent_child and temporal edges.

        Removed nodes are excluded and never traversed through.
        """
        root_node = self.node(root)
        if root_node.removed:
            raise NotFoundError(f"node {root!r} is removed")
        dist = {root: 0}
        queue = deque([root])
        while queue:
            current = queue.popleft()
            if dist[current] >= depth:
                continue
            for edge in self.edges_of(current):
                other = edge.dst if edge.src == current else edge.src
                if other in dist or self.nodes[other].removed:
                    continue
                dist[other] = dist[current] + 1
                queue.append(other)
        node_ids = set(dist)
        nodes = sorted((self.nodes[nid] for nid in node_ids), key=lambda n: node_sort_key(n.id))
        edges = [e for e in self.live_edges() if e.src in node_ids and e.dst in node_ids]
        return nodes, edges

    # ------------------------------------------------------------------
    # Mutation entry point
    # ------------------------------------------------------------------

    def apply(self, mutation: Mutation) -> GuardVerdict:
        """Validate, guard, log, and execute one mutation atomically."""
        with self._lock:
            self._validate(mutation)
            if not self._replaying:
                self._seq += 1
                mutation.seq = self._seq
            else:
                self._seq = mutation.seq
            verdict = self._guard(mutation)
            self._append_log(mutation)
            self.mutations.append(mutation)
            if verdict.outcome != VerdictOutcome.DROPPED:
                self._execute(mutation, verdict)
            self.verdicts.append(verdict)
            return verdict

    # -- validation (raises; nothing is logged) -------------------------

    def _validate(self, m: Mutation) -> None:
        p = m.payload
        kind = m.kind
        if kind == MutationKind.CREATE_NODE:
            tier = Tier(p["tier"])
            if p.get("metadata") is not None:
                meta_from_dict(tier, p["metadata"])
            node = GraphNode(id="pending", tier=tier, label=p["label"], confidence=p.get("confidence", 5))
            node.validate()
            return
        if kind == MutationKind.ADD_EDGE or kind == MutationKind.REMOVE_EDGE:
            src = self.node(p["src"])
            dst = self.node(p["dst"])
            edge_kind = EdgeKind(p["kind"])
            if edge_kind == EdgeKind.PARENT_CHILD:
                expected_child = PARENT_CHILD.get(src.tier)
                if expected_child is None or dst.tier != expected_child:
                    raise InvariantError(
                        f"parent_child must link adjacent tiers, got {src.tier.value}->{dst.tier.value}"
                    )
            else:
                if src.tier != dst.tier or src.tier not in TEMPORAL_TIERS:
                    raise InvariantError(
                        f"{edge_kind.value} edges require two {sorted(t.value for t in TEMPORAL_TIERS)} "
                        f"nodes of one tier, got {src.tier.value}->{dst.tier.value}"
                    )
            return
        if kind == MutationKind.MERGE_NODES:
            ids = list(p["source_ids"])
            if p.get("target_id"):
                ids.append(p["target_id"])
            if len(set(ids)) != len(ids):
                raise InvariantError("merge_nodes participants must be distinct")
            if len(ids) < 2:
                raise InvariantError("merge_nodes needs at least two participants")
            tiers = {self.node(nid).tier for nid in ids}
            if len(tiers) != 1:
                raise TierViolationError("merge_nodes participants must share one tier")
            (tier,) = tiers
            if tier not in (Tier.STRIVING, Tier.ACTIVITY):
                raise TierViolationError("only strivings and activities can be merged")
            return
        if kind == MutationKind.SET_FLAG:
            FlagKind(p["flag"])
        if kind == MutationKind.SET_STATUS:
            NodeStatus(p["status"])
        if kind == MutationKind.SET_METADATA and p.get("metadata") is not None:
            meta_from_dict(self.node(p["node_id"]).tier, p["metadata"])
        # every remaining kind references a single node
        self.node(p["node_id"])

    # -- guard -----------------------------------------------------------

    def _guard(self, m: Mutation) -> GuardVerdict:
        if m.actor == Actor.USER or m.kind not in GUARDED_KINDS:
            return GuardVerdict(m.seq, VerdictOutcome.APPLIED)
        p = m.payload
        if m.kind == MutationKind.SET_FLAG:
            return GuardVerdict(m.seq, VerdictOutcome.DROPPED, RULE_FLAGS_USER_OWNED, [p["node_id"]])
        if m.kind == MutationKind.RELABEL:
            node = self.node(p["node_id"])
            if node.has_flag(FlagKind.USER_EDITED):
                return GuardVerdict(m.seq, VerdictOutcome.DROPPED, RULE_USER_EDITED_LABEL, [node.id])
            if node.has_flag(FlagKind.LOCKED):
                return GuardVerdict(m.seq, VerdictOutcome.DROPPED, RULE_LOCKED, [node.id])
        if m.kind == MutationKind.REMOVE_NODE or (
            m.kind == MutationKind.SET_STATUS and p["status"] == NodeStatus.REMOVED.value
        ):
            node = self.node(p["node_id"])
            for flag in _UNDELETABLE:
                if node.has_flag(flag):
                    rule = {FlagKind.USER_EDITED: RULE_USER_EDITED_LABEL,
                            FlagKind.LOCKED: RULE_LOCKED,
                            FlagKind.USER_REASSIGNED: RULE_REASSIGNED}[flag]
                    return GuardVerdict(m.seq, VerdictOutcome.DROPPED, rule, [node.id])
        if m.kind == MutationKind.REMOVE_EDGE:
            if EdgeKind(p["kind"]) == EdgeKind.PARENT_CHILD:
                child = self.node(p["dst"])
                if child.has_flag(FlagKind.USER_REASSIGNED):
                    return GuardVerdict(m.seq, VerdictOutcome.DROPPED, RULE_REASSIGNED, [child.id])
        if m.kind == MutationKind.MERGE_NODES:
            target_id = p.get("target_id")
            sources = [self.node(nid) for nid in p["source_ids"]]
            skipped = [n.id for n in sources if any(n.has_flag(f) for f in _UNDELETABLE)]
            if target_id is not None:
                target = self.node(target_id)
                if any(target.has_flag(f) for f in _UNDELETABLE):
                    return GuardVerdict(
                        m.seq, VerdictOutcome.DOWNGRADED, RULE_LOCKED_TARGET,
                        [target_id] + [n.id for n in sources],
                    )
            surviving = [n.id for n in sources if n.id not in skipped]
            participants = surviving + ([target_id] if target_id else [])
            if skipped and len(participants) < 2:
                return GuardVerdict(m.seq, VerdictOutcome.DROPPED, RULE_EMPTY_MERGE, skipped)
            if skipped:
                return GuardVerdict(m.seq, VerdictOutcome.SKIPPED, RULE_LOCKED_SOURCE, skipped)
        return GuardVerdict(m.seq, VerdictOutcome.APPLIED)

    # -- execution --------------------------------------------------------

    def _execute(self, m: Mutation, verdict: GuardVerdict) -> None:
        handler = {
            MutationKind.CREATE_NODE: self._exec_create_node,
            MutationKind.RELABEL: self._exec_relabel,
            MutationKind.SET_METADATA: self._exec_set_metadata,
            MutationKind.ADD_EDGE: self._exec_add_edge,
            MutationKind.REMOVE_EDGE: self._exec_remove_edge,
            MutationKind.REMOVE_NODE: self._exec_remove_node,
            MutationKind.MERGE_NODES: self._exec_merge,
            MutationKind.SET_FLAG: self._exec_set_flag,
            MutationKind.SET_STATUS: self._exec_set_status,
        }[m.kind]
        handler(m, verdict)

    def _next_id(self, kind: str) -> str:
        self._counters[kind] += 1
        return f"{kind}-{self._counters[kind]}"

    def _exec_create_node(self, m: Mutation, verdict: GuardVerdict) -> None:
        p = m.payload
        tier = Tier(p["tier"])
        node = GraphNode(
            id=self._next_id(tier.value),
            tier=tier,
            label=p["label"],
            reasoning=p.get("reasoning", ""),
            confidence=p.get("confidence", 5),
            created_at=m.ts,
            updated_at=m.ts,
            time_range=tuple(p["time_range"]) if p.get("time_range") else None,
            metadata=meta_from_dict(tier, p["metadata"]) if p.get("metadata") is not None else None,
            annotations=[tuple(a) for a in p.get("annotations", [])],
            evidence=list(p.get("evidence", [])),
            status=NodeStatus(p.get("status", "provisional")),
        )
        node.validate()
        self.nodes[node.id] = node
        self._adjacency.setdefault(node.id, set())
        verdict.affected.insert(0, node.id)

    def _exec_relabel(self, m: Mutation, verdict: GuardVerdict) -> None:
        node = self.node(m.payload["node_id"])
        node.label = m.payload["label"]
        node.updated_at = m.ts
        if m.actor == Actor.USER and node.has_flag(FlagKind.USER_EDITED):
            self.label_pins[node.id] = node.label
        verdict.affected.append(node.id)

    def _exec_set_metadata(self, m: Mutation, verdict: GuardVerdict) -> None:
        p = m.payload
        node = self.node(p["node_id"])
        if p.get("metadata") is not None:
            node.metadata = meta_from_dict(node.tier, p["metadata"])
        if "confidence" in p:
            node.confidence = p["confidence"]
        if "time_range" in p:
            node.time_range = tuple(p["time_range"]) if p["time_range"] else None
        if "evidence" in p:
            node.evidence = list(p["evidence"])
        if "needs_review" in p:
            node.needs_review = bool(p["needs_review"])
        if "reasoning" in p:
            node.reasoning = p["reasoning"]
        if "annotations_add" in p:
            node.annotations.extend(tuple(a) for a in p["annotations_add"])
        node.updated_at = m.ts
        node.validate()
        verdict.affected.append(node.id)

    def _add_edge_obj(self, src: str, dst: str, kind: EdgeKind, ts: int) -> GraphEdge:
        if kind in SYMMETRIC_EDGE_KINDS:
            src, dst = self._canonical_pair(src, dst)
        existing = self.find_edge(src, dst, kind)
        if existing is not None:
            return existing
        edge = GraphEdge(id=self._next_id("edge"), src=src, dst=dst, kind=kind, created_at=ts)
        self.edges[edge.id] = edge
        self._adjacency.setdefault(src, set()).add(edge.id)
        self._adjacency.setdefault(dst, set()).add(edge.id)
        return edge

    def _remove_edge_obj(self, edge: GraphEdge) -> None:
        self._adjacency[edge.src].discard(edge.id)
        self._adjacency[edge.dst].discard(edge.id)
        del self.edges[edge.id]

    def _exec_add_edge(self, m: Mutation, verdict: GuardVerdict) -> None:
        p = m.payload
        edge = self._add_edge_obj(p["src"], p["dst"], EdgeKind(p["kind"]), m.ts)
        verdict.affected.append(edge.id)

    def _exec_remove_edge(self, m: Mutation, verdict: GuardVerdict) -> None:
        p = m.payload
        edge = self.find_edge(p["src"], p["dst"], EdgeKind(p["kind"]))
        if edge is not None:
            self._remove_edge_obj(edge)
            verdict.affected.append(edge.id)

    def _exec_remove_node(self, m: Mutation, verdict: GuardVerdict) -> None:
        node = self.node(m.payload["node_id"])
        node.status = NodeStatus.REMOVED
        node.updated_at = m.ts
        verdict.affected.append(node.id)

    def _exec_set_status(self, m: Mutation, verdict: GuardVerdict) -> None:
        node = self.node(m.payload["node_id"])
        node.status = NodeStatus(m.payload["status"])
        node.updated_at = m.ts
        verdict.affected.append(node.id)

    def _exec_set_flag(self, m: Mutation, verdict: GuardVerdict) -> None:
        p = m.payload
        node = self.node(p["node_id"])
        flag = FlagKind(p["flag"])
        if p.get("clear"):
            node.flags.pop(flag, None)
            if flag == FlagKind.USER_EDITED:
                self.label_pins.pop(node.id, None)
        else:
            # endorsed and rejected are mutually exclusive
            if flag == FlagKind.ENDORSED:
                node.flags.pop(FlagKind.REJECTED, None)
            elif flag == FlagKind.REJECTED:
                node.flags.pop(FlagKind.ENDORSED, None)
            node.flags[flag] = ConstraintFlag(kind=flag, set_at=m.ts, origin_edit=m.cause)
            if flag == FlagKind.USER_EDITED:
                self.label_pins[node.id] = node.label
        node.updated_at = m.ts
        verdict.affected.append(node.id)

    # -- merge machinery --------------------------------------------------

    def _absorb_into(self, source: GraphNode, target: GraphNode, ts: int) -> None:
        """Move a source's evidence and child edges under the target, then retire it."""
        for ref in source.evidence:
            if ref not in target.evidence:
                target.evidence.append(ref)
        for child in self.children(source.id, include_removed=True):
            self._add_edge_obj(target.id, child.id, EdgeKind.PARENT_CHILD, ts)
        for edge in list(self.edges_of(source.id, EdgeKind.PARENT_CHILD)):
            if edge.src == source.id:
                self._remove_edge_obj(edge)
        if isinstance(source.metadata, type(target.metadata)) and hasattr(source.metadata, "batch_ids"):
            for batch_id in source.metadata.batch_ids:
                if batch_id not in target.metadata.batch_ids:
                    target.metadata.batch_ids.append(batch_id)
        source.status = NodeStatus.REMOVED
        source.merged_into = target.id
        source.updated_at = ts
        target.updated_at = ts

    def _exec_merge(self, m: Mutation, verdict: GuardVerdict) -> None:
        p = m.payload
        ts = m.ts
        sources = [self.node(nid) for nid in p["source_ids"]]
        target = self.node(p["target_id"]) if p.get("target_id") else None
        skipped = set(verdict.affected) if verdict.outcome == VerdictOutcome.SKIPPED else set()

        if verdict.outcome == VerdictOutcome.DOWNGRADED:
            # Match semantics: evidence re-parented under the protected target,
            # target label untouched; protected sources stay put.
            assert target is not None
            absorbed = []
            for source in sources:
                if any(source.has_flag(f) for f in _UNDELETABLE):
                    continue
                self._absorb_into(source, target, ts)
                absorbed.append(source.id)
            verdict.affected[:] = [target.id] + absorbed
            return

        participants = [s for s in sources if s.id not in skipped]
        if target is not None:
            participants.append(target)

        label = p.get("label")
        if label is None:
            label = target.label if target is not None else participants[0].label
        merged = GraphNode(
            id=self._next_id(participants[0].tier.value),
            tier=participants[0].tier,
            label=label,
            reasoning=p.get("reasoning", ""),
            confidence=max(n.confidence for n in participants),
            created_at=ts,
            updated_at=ts,
            status=NodeStatus.STABLE if any(n.status == NodeStatus.STABLE for n in participants) else NodeStatus.PROVISIONAL,
            metadata=copy.deepcopy((target or participants[0]).metadata),
        )
        ranges = [n.time_range for n in participants if n.time_range]
        if ranges:
            merged.time_range = (min(r[0] for r in ranges), max(r[1] for r in ranges))
        self.nodes[merged.id] = merged
        self._adjacency.setdefault(merged.id, set())
        for participant in participants:
            for parent in self.parents(participant.id):
                self._add_edge_obj(parent.id, merged.id, EdgeKind.PARENT_CHILD, ts)
            self._absorb_into(participant, merged, ts)
        merged.validate()
        verdict.affected[:] = [merged.id] + [n.id for n in participants] + sorted(skipped, key=node_sort_key)

    # ------------------------------------------------------------------
    # Snapshot / restore
    # ------------------------------------------------------------------

    def _state_dict(self) -> dict:
        return {
            "nodes": [self.nodes[nid].to_dict() for nid in sorted(self.nodes, key=node_sort_key)],
            "edges": [self.edges[eid].to_dict() for eid in sorted(self.edges, key=node_sort_key)],
            "counters": dict(sorted(self._counters.items())),
            "log_head": self._seq,
            "label_pins": dict(sorted(self.label_pins.items())),
        }

    def snapshot(self) -> bytes:
        with self._lock:
            state = self._state_dict()
            payload = json.dumps(state, sort_keys=True, separators=(",", ":"))
            digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
            doc = {"magic": LOG_MAGIC, "version": LOG_VERSION, "kind": "snapshot", "sha256": digest, "state": state}
            return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")

    @classmethod
    def restore(cls, blob: bytes, log_path: str | Path | None = None) -> "GraphStore":
        try:
            doc = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IntegrityError(f"snapshot unreadable: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("magic") != LOG_MAGIC or doc.get("kind") != "snapshot":
            raise IntegrityError(f"snapshot header missing '{LOG_MAGIC}' magic")
        if doc.get("version") != LOG_VERSION:
            raise IntegrityError(f"unsupported snapshot version {doc.get('version')!r}")
        state = doc.get("state")
        payload = json.dumps(state, sort_keys=True, separators=(",", ":"))
        if hashlib.sha256(payload.encode("utf-8")).hexdigest() != doc.get("sha256"):
            raise IntegrityError("snapshot checksum mismatch")
        store = cls()
        for record in state["nodes"]:
            tier = Tier(record["tier"])
            node = GraphNode(
                id=record["id"],
                tier=tier,
                label=record["label"],
                reasoning=record.get("reasoning", ""),
                confidence=record["confidence"],
                created_at=record["created_at"],
                updated_at=record["updated_at"],
                time_range=tuple(record["time_range"]) if record.get("time_range") else None,
                metadata=meta_from_dict(tier, record["metadata"]) if record.get("metadata") is not None else None,
                annotations=[tuple(a) for a in record.get("annotations", [])],
                evidence=list(record.get("evidence", [])),
                status=NodeStatus(record["status"]),
                needs_review=record.get("needs_review", False),
                merged_into=record.get("merged_into"),
            )
            for flag_rec in record.get("flags", []):
                kind = FlagKind(flag_rec["kind"])
                node.flags[kind] = ConstraintFlag(kind=kind, set_at=flag_rec["set_at"], origin_edit=flag_rec.get("origin_edit", ""))
            store.nodes[node.id] = node
            store._adjacency.setdefault(node.id, set())
        for record in state["edges"]:
            edge = GraphEdge(
                id=record["id"], src=record["src"], dst=record["dst"],
                kind=EdgeKind(record["kind"]), created_at=record["created_at"],
            )
            store.edges[edge.id] = edge
            store._adjacency.setdefault(edge.src, set()).add(edge.id)
            store._adjacency.setdefault(edge.dst, set()).add(edge.id)
        store._counters.update(state["counters"])
        store._seq = state["log_head"]
        store.label_pins = dict(state.get("label_pins", {}))
        if log_path is not None:
            store._log_path = Path(log_path)
            store._open_log()
        return store

    # ------------------------------------------------------------------
    # Convenience constructors for mutations
    # ------------------------------------------------------------------

    def submit(self, kind: MutationKind, payload: dict, actor: Actor, cause: str = "", ts: int = 0) -> GuardVerdict:
        return self.apply(Mutation(kind=kind, payload=payload, actor=actor, cause=cause, ts=ts))


def check_invariants(store: GraphStore) -> list[str]:
    """Full-scan structural audit; returns a list of violation descriptions."""
    problems: list[str] = []
    for node in store.nodes.values():
        try:
            node.validate()
        except InvariantError as exc:
            problems.append(str(exc))
    for edge in store.edges.values():
        src = store.nodes.get(edge.src)
        dst = store.nodes.get(edge.dst)
        if src is None or dst is None:
            problems.append(f"{edge.id}: dangling endpoint")
            continue
        if edge.kind == EdgeKind.PARENT_CHILD:
            if PARENT_CHILD.get(src.tier) != dst.tier:
                problems.append(f"{edge.id}: parent_child between {src.tier.value} and {dst.tier.value}")
        else:
            if src.tier != dst.tier:
                problems.append(f"{edge.id}: temporal edge across tiers {src.tier.value}/{dst.tier.value}")
            elif src.tier not in TEMPORAL_TIERS:
                problems.append(f"{edge.id}: temporal edge on tier {src.tier.value}")
    for node_id, pinned in store.label_pins.items():
        node = store.nodes.get(node_id)
        if node is None:
            problems.append(f"label pin for unknown node {node_id}")
        elif node.has_flag(FlagKind.USER_EDITED) and node.label != pinned:
            problems.append(f"{node_id}: user-edited label drifted from {pinned!r} to {node.label!r}")
    rejected_labels = {
        n.label for n in store.nodes.values() if n.has_flag(FlagKind.REJECTED)
    }
    for node in store.live_nodes(Tier.STRIVING):
        if node.label in rejected_labels and not node.has_flag(FlagKind.REJECTED):
            problems.append(f"{node.id}: recreated rejected label {node.label!r}")
    return problems
