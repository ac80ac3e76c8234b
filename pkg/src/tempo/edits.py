"""User edit operations and their persistent constraint effects.

Every edit maps to user-actor mutations (which bypass the write guard: an
explicit user action may modify anything), sets the corresponding constraint
flag, and enqueues the pipeline stages that must re-run. The constraint
block rendered here is injected into the proposal, reconciliation, synthesis
and refine prompts on every induction cycle, and the same flags back the
store's write-time guards, so an edit keeps steering the system long after
the session that made it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .clock import to_iso
from .errors import ClarificationError, NotFoundError, TierViolationError, ValidationError
from .graph import Actor, FlagKind, GraphStore, MutationKind, Tier
from .graph.types import node_sort_key

logger = logging.getLogger(__name__)

EDIT_KINDS = ("inline_edit", "reassign", "remove", "merge", "annotate", "endorse", "reject", "lock")

# stage sets re-triggered per edit kind
RETRIGGERS = {
    "inline_edit": ("synthesize", "refine"),
    "merge": ("synthesize", "refine"),
    "reassign": ("synthesize", "refine"),
    "remove_striving": ("reconcile", "synthesize", "refine"),
    "remove_other": ("reconcile",),
    "annotate": (),
    "endorse": (),
    "reject": (),
    "lock": (),
}

FLAG_LINE_TEXT = {
    FlagKind.LOCKED: "[locked] --- do not merge, delete, or substantially alter",
    FlagKind.USER_EDITED: "[user-edited] --- preserve exact label verbatim",
    FlagKind.ENDORSED: "[endorsed] --- user confirmed this goal is accurate, keep it",
    FlagKind.REJECTED: "[rejected] --- user says this goal is wrong, do not recreate it",
    FlagKind.USER_REASSIGNED: "[user-reassigned] --- respect current goal assignment",
}

CONSTRAINT_HEADER = (
    "# User constraints\n"
    "{user_name} has edited, locked, or annotated the following entities.\n"
    "Respect these constraints:\n"
    "- [locked] goals: Do NOT merge, delete, or substantially alter.\n"
    "- [user-edited] goals: Keep the exact label verbatim.\n"
    "- [user-reassigned] activities: Keep with their assigned goal.\n"
    "- Annotations provide privileged context --- weight above behavioral inference.\n"
)


@dataclass
class EditRecord:
    id: str
    kind: str
    targets: list[str]
    payload: dict = field(default_factory=dict)
    session_id: str = ""
    at: int = 0
    noop: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id, "kind": self.kind, "targets": list(self.targets),
            "payload": dict(self.payload), "session_id": self.session_id,
            "at": to_iso(self.at), "noop": self.noop,
        }


@dataclass
class ReviewSession:
    id: str
    started: int
    ended: Optional[int] = None
    edits: list[EditRecord] = field(default_factory=list)
    screenshot_removals: dict[str, int] = field(default_factory=dict)  # node id -> count


class EditEngine:
    def __init__(self, store: GraphStore, clock, pipeline=None, user_name: str = "The user"):
        self.store = store
        self.clock = clock
        self.pipeline = pipeline  # may be None in pure unit tests
        self.user_name = user_name
        self._edit_counter = self._recover_counter("edit-")
        self._session_counter = self._recover_counter("session-")
        self.current_session: Optional[ReviewSession] = None
        self.last_closed_session: Optional[ReviewSession] = None

    def _recover_counter(self, prefix: str) -> int:
        """Resume id numbering from the mutation log so restarts never reuse ids."""
        highest = 0
        for mutation in self.store.mutations:
            if mutation.cause.startswith(prefix):
                suffix = mutation.cause[len(prefix):]
                if suffix.isdigit():
                    highest = max(highest, int(suffix))
        return highest

    # ------------------------------------------------------------------
    # Sessions
    # ------------------------------------------------------------------

    def start_session(self) -> ReviewSession:
        self._session_counter += 1
        self.current_session = ReviewSession(id=f"session-{self._session_counter}",
                                             started=self.clock.now())
        return self.current_session

    def end_session(self) -> Optional[ReviewSession]:
        session = self.current_session
        if session is not None:
            session.ended = self.clock.now()
            self.last_closed_session = session
            self.current_session = None
        return session

    def note_screenshot_removal(self, node_id: str) -> None:
        if self.current_session is not None:
            counts = self.current_session.screenshot_removals
            counts[node_id] = counts.get(node_id, 0) + 1

    def _record(self, kind: str, targets: list[str], payload: dict, noop: bool = False) -> EditRecord:
        self._edit_counter += 1
        record = EditRecord(
            id=f"edit-{self._edit_counter}", kind=kind, targets=targets, payload=payload,
            session_id=self.current_session.id if self.current_session else "",
            at=self.clock.now(), noop=noop,
        )
        if self.current_session is not None:
            self.current_session.edits.append(record)
        return record

    def _retrigger(self, record: EditRecord, key: str, payload: Optional[dict] = None) -> list[str]:
        stage_names = list(RETRIGGERS[key])
        if self.pipeline is not None and stage_names:
            self.pipeline.enqueue_retrigger(record.id, stage_names, payload)
        return stage_names

    # ------------------------------------------------------------------
    # The four direct-manipulation operations
    # ------------------------------------------------------------------

    def inline_edit(self, node_id: str, new_label: str) -> EditRecord:
        node = self.store.node(node_id)
        if node.tier not in (Tier.STRIVING, Tier.ACTIVITY):
            raise TierViolationError(
                f"inline edit applies to strivings and activities, not {node.tier.value}s"
            )
        record = self._record("inline_edit", [node_id], {"new_label": new_label})
        ts = self.clock.now()
        self.store.submit(MutationKind.RELABEL, {"node_id": node_id, "label": new_label},
                          actor=Actor.USER, cause=record.id, ts=ts)
        self.store.submit(MutationKind.SET_FLAG, {"node_id": node_id, "flag": "user_edited"},
                          actor=Actor.USER, cause=record.id, ts=ts)
        self._retrigger(record, "inline_edit")
        return record

    def reassign(self, activity_id: str, new_striving_id: str, justification: str = "") -> EditRecord:
        activity = self.store.node(activity_id)
        target = self.store.node(new_striving_id)
        if target.removed:
            raise NotFoundError(f"striving {new_striving_id!r} is removed")
        if activity.tier != Tier.ACTIVITY or target.tier != Tier.STRIVING:
            raise TierViolationError("reassign moves an activity to a striving")
        record = self._record("reassign", [activity_id, new_striving_id],
                              {"justification": justification})
        ts = self.clock.now()
        for parent in self.store.parents(activity_id):
            self.store.submit(MutationKind.REMOVE_EDGE,
                              {"src": parent.id, "dst": activity_id, "kind": "parent_child"},
                              actor=Actor.USER, cause=record.id, ts=ts)
        self.store.submit(MutationKind.ADD_EDGE,
                          {"src": new_striving_id, "dst": activity_id, "kind": "parent_child"},
                          actor=Actor.USER, cause=record.id, ts=ts)
        self.store.submit(MutationKind.SET_FLAG,
                          {"node_id": activity_id, "flag": "user_reassigned"},
                          actor=Actor.USER, cause=record.id, ts=ts)
        if justification:
            self.store.submit(MutationKind.SET_METADATA,
                              {"node_id": activity_id,
                               "annotations_add": [["reassign_justification", justification]]},
                              actor=Actor.USER, cause=record.id, ts=ts)
        self._retrigger(record, "reassign")
        return record

    def remove(self, node_id: str, evidence_disposition: str = "reassign_evidence") -> EditRecord:
        if evidence_disposition not in ("reassign_evidence", "discard_evidence"):
            raise ValidationError(f"unknown evidence disposition {evidence_disposition!r}")
        node = self.store.node(node_id)
        if node.tier not in (Tier.STRIVING, Tier.ACTIVITY, Tier.ACTION):
            raise TierViolationError("operations are descriptive records and cannot be removed directly")
        if node.removed:
            return self._record("remove", [node_id], {"disposition": evidence_disposition}, noop=True)
        record = self._record("remove", [node_id], {"disposition": evidence_disposition})
        ts = self.clock.now()

        children = self.store.children(node_id)
        sole_children = [c for c in children if len(self.store.parents(c.id)) == 1]
        self.store.submit(MutationKind.REMOVE_NODE, {"node_id": node_id},
                          actor=Actor.USER, cause=record.id, ts=ts)

        payload: dict = {}
        if evidence_disposition == "discard_evidence":
            self._discard_subtree(sole_children, record.id, ts)
        elif node.tier == Tier.STRIVING:
            orphans = [c.id for c in sole_children]
            payload["orphan_activity_ids"] = orphans
        elif node.tier == Tier.ACTIVITY:
            payload["orphan_action_ids"] = [c.id for c in sole_children]

        key = "remove_striving" if node.tier == Tier.STRIVING else "remove_other"
        self._retrigger(record, key, payload)
        return record

    def _discard_subtree(self, roots, cause: str, ts: int) -> None:
        """Remove sole-parented descendants; delete frame evidence of their operations."""
        stack = list(roots)
        while stack:
            node = stack.pop()
            if node.removed:
                continue
            for child in self.store.children(node.id):
                if len(self.store.parents(child.id)) == 1:
                    stack.append(child)
            if node.tier == Tier.OPERATION and self.pipeline is not None:
                from .privacy import remove_evidence
                for frame_id in list(node.evidence):
                    if self.pipeline.obs_store.has_frame(frame_id):
                        remove_evidence(self.store, self.pipeline.obs_store, frame_id,
                                        cause=cause, ts=ts)
            self.store.submit(MutationKind.REMOVE_NODE, {"node_id": node.id},
                              actor=Actor.USER, cause=cause, ts=ts)

    def merge(self, node_ids: list[str], target_label: Optional[str] = None) -> EditRecord:
        if len(node_ids) < 2:
            raise ValidationError("merge needs at least two nodes")
        tiers = {self.store.node(n).tier for n in node_ids}
        if len(tiers) != 1 or next(iter(tiers)) not in (Tier.STRIVING, Tier.ACTIVITY):
            raise TierViolationError("merge combines strivings with strivings or activities with activities")
        record = self._record("merge", list(node_ids), {"target_label": target_label})
        ts = self.clock.now()
        payload = {"source_ids": list(node_ids)}
        if target_label is not None:
            payload["label"] = target_label
        verdict = self.store.submit(MutationKind.MERGE_NODES, payload,
                                    actor=Actor.USER, cause=record.id, ts=ts)
        merged_id = verdict.affected[0]
        record.payload["merged_id"] = merged_id
        if target_label is not None:
            self.store.submit(MutationKind.SET_FLAG, {"node_id": merged_id, "flag": "user_edited"},
                              actor=Actor.USER, cause=record.id, ts=ts)
        self._retrigger(record, "merge")
        return record

    # ------------------------------------------------------------------
    # Constraint-only edits
    # ------------------------------------------------------------------

    def annotate(self, node_id: str, annotation_type: str, text: str) -> EditRecord:
        self.store.node(node_id)
        record = self._record("annotate", [node_id], {"type": annotation_type, "text": text})
        self.store.submit(MutationKind.SET_METADATA,
                          {"node_id": node_id, "annotations_add": [[annotation_type, text]]},
                          actor=Actor.USER, cause=record.id, ts=self.clock.now())
        self._retrigger(record, "annotate")
        return record

    def _set_flag(self, node_id: str, kind: str, flag: str) -> EditRecord:
        self.store.node(node_id)
        record = self._record(kind, [node_id], {})
        self.store.submit(MutationKind.SET_FLAG, {"node_id": node_id, "flag": flag},
                          actor=Actor.USER, cause=record.id, ts=self.clock.now())
        self._retrigger(record, kind)
        return record

    def endorse(self, node_id: str) -> EditRecord:
        return self._set_flag(node_id, "endorse", "endorsed")

    def reject(self, node_id: str) -> EditRecord:
        record = self._set_flag(node_id, "reject", "rejected")
        # a rejected goal leaves the active hierarchy but its label stays known
        node = self.store.node(node_id)
        if not node.removed:
            self.store.submit(MutationKind.SET_STATUS, {"node_id": node_id, "status": "removed"},
                              actor=Actor.USER, cause=record.id, ts=self.clock.now())
        return record

    def lock(self, node_id: str) -> EditRecord:
        return self._set_flag(node_id, "lock", "locked")

    # ------------------------------------------------------------------
    # Natural-language edits
    # ------------------------------------------------------------------

    def parse_natural_language(self, text: str, gateway, hierarchy_text: str = "") -> dict:
        """Parse free-text into a structured edit proposal; never silently guess."""
        record = gateway.complete("parse_edit", {"text": text, "hierarchy": hierarchy_text})
        if record["kind"] == "unclear":
            raise ClarificationError(record.get("clarification") or "could not parse the edit request")
        return record

    def apply_parsed(self, parsed: dict) -> EditRecord:
        kind = parsed["kind"]
        payload = parsed.get("payload", {})
        if kind == "inline_edit":
            return self.inline_edit(payload["node_id"], payload["new_label"])
        if kind == "reassign":
            return self.reassign(payload["activity_id"], payload["new_striving_id"],
                                 payload.get("justification", ""))
        if kind == "remove":
            return self.remove(payload["node_id"], payload.get("evidence_disposition", "reassign_evidence"))
        if kind == "merge":
            return self.merge(payload["node_ids"], payload.get("target_label"))
        if kind == "annotate":
            return self.annotate(payload["node_id"], payload.get("annotation_type", "note"),
                                 payload["text"])
        if kind in ("endorse", "reject", "lock"):
            return getattr(self, kind)(payload["node_id"])
        raise ValidationError(f"unknown edit kind {kind!r}")

    # ------------------------------------------------------------------
    # Prompt blocks
    # ------------------------------------------------------------------

    def render_constraint_block(self) -> str:
        """App-style block: fixed header and rules, one line per flag/annotation.

        A pure function of the store's flagged-or-annotated strivings and
        activities, ordered striving lines first, then activities, by id.
        Rejected goals are included even though they are removed from the
        active hierarchy: remembering them is the point.
        """
        lines = [CONSTRAINT_HEADER.format(user_name=self.user_name)]
        entity_lines: list[str] = []
        for tier, prefix in ((Tier.STRIVING, "Goal"), (Tier.ACTIVITY, "Activity")):
            nodes = [
                n for n in self.store.nodes.values()
                if n.tier == tier and (n.flags or n.annotations)
                and (not n.removed or n.has_flag(FlagKind.REJECTED))
            ]
            nodes.sort(key=lambda n: node_sort_key(n.id))
            for node in nodes:
                for flag_kind in sorted(node.flags, key=lambda k: k.value):
                    entity_lines.append(
                        f"- {prefix} ID:{node.id} | {node.label} | {FLAG_LINE_TEXT[flag_kind]}"
                    )
                for ann_type, ann_text in node.annotations:
                    entity_lines.append(
                        f'- {prefix} ID:{node.id} | {node.label} | annotation ({ann_type}): "{ann_text}"'
                    )
        return "\n".join(lines + entity_lines)

    def render_review_edits(self, session: Optional[ReviewSession] = None) -> str:
        """Deterministic summary of the most recent review session."""
        session = session or self.last_closed_session
        if session is None or (not session.edits and not session.screenshot_removals):
            return "# Review session\nno edits"
        by_kind: dict[str, list[str]] = {}
        for edit in session.edits:
            if not edit.noop:
                by_kind.setdefault(edit.kind, []).extend(edit.targets)
        lines = [f"# Review session {session.id}"]
        for kind in sorted(by_kind):
            targets = sorted(set(by_kind[kind]), key=node_sort_key)
            lines.append(f"- {kind}: {len(by_kind[kind])} edit(s) on {', '.join(targets)}")
        if session.screenshot_removals:
            total = sum(session.screenshot_removals.values())
            per_node = ", ".join(
                f"{node_id} ({count})"
                for node_id, count in sorted(session.screenshot_removals.items(),
                                             key=lambda kv: node_sort_key(kv[0]))
            )
            lines.append(f"- screenshots removed: {total} from {per_node}")
        return "\n".join(lines)

    @staticmethod
    def retrigger(record: EditRecord, store: GraphStore) -> tuple[str, ...]:
        """The stage set an applied edit re-triggers (empty for constraint-only edits)."""
        if record.kind == "remove":
            node = store.node(record.targets[0])
            key = "remove_striving" if node.tier == Tier.STRIVING else "remove_other"
            return tuple(RETRIGGERS[key])
        return tuple(RETRIGGERS.get(record.kind, ()))
