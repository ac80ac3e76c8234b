"""Response schemas: no unparsed model text crosses the gateway boundary.

Each template has a validator that checks types, closed enums, and bounds,
returning a normalized record. Violations raise SchemaError with a message
suitable for the repair re-ask.
"""

from __future__ import annotations

from typing import Any, Callable

from ..errors import SchemaError
from ..graph.types import (
    AFFECT_HINTS,
    ASPIRATION_KINDS,
    AUTOMATICITY_HINTS,
    AUTONOMY_KINDS,
    COGNITIVE_MODES,
    COMMUNITIES,
    DOMAINS,
    ENGAGEMENT_PROFILES,
    ENGAGEMENT_STATES,
    IDENTITY_CONTEXTS,
    INITIATION_PROFILES,
    INITIATIONS,
    NEEDS,
    ORIENTATIONS,
    OUTCOME_TYPES,
    SOCIAL_MODES,
    SOCIAL_TARGETS,
    TOOL_KINDS,
    VALENCES,
)
from ..privacy import DATA_TYPES

EDIT_KINDS = frozenset({
    "inline_edit", "reassign", "remove", "merge", "annotate", "endorse", "reject", "lock", "unclear",
})


def _require(record: dict, key: str, kind: type, where: str) -> Any:
    if key not in record:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = record[key]
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{where}: field {key!r} must be an integer")
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _enum(record: dict, key: str, allowed: frozenset, where: str, nullable: bool = False) -> str:
    value = record.get(key)
    if value is None and nullable:
        return "none"
    if value == "null" and nullable:
        return "none"
    if not isinstance(value, str) or value not in allowed:
        raise SchemaError(f"{where}: field {key!r} must be one of {sorted(allowed)}, got {value!r}")
    return value


def _bounded_int(record: dict, key: str, where: str, low: int = 1, high: int = 10) -> int:
    value = _require(record, key, int, where)
    if not low <= value <= high:
        raise SchemaError(f"{where}: field {key!r} must be in [{low}, {high}], got {value}")
    return value


def _str_list(record: dict, key: str, where: str, default: list | None = None) -> list[str]:
    value = record.get(key, default if default is not None else [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{where}: field {key!r} must be a list of strings")
    return value


def _validate_transcribe(record: dict) -> dict:
    return {"transcription": _require(record, "transcription", str, "transcribe")}


def _validate_summarize(record: dict) -> dict:
    return {"summary": _require(record, "summary", str, "summarize")}


def _validate_extract_operations(record: dict) -> dict:
    raw = record.get("operations")
    if not isinstance(raw, list):
        raise SchemaError("extract_operations: 'operations' must be a list")
    operations = []
    for i, op in enumerate(raw):
        where = f"operation[{i}]"
        if not isinstance(op, dict):
            raise SchemaError(f"{where}: must be an object")
        operations.append({
            "text": _require(op, "text", str, where),
            "confidence": _bounded_int(op, "confidence", where),
            "decay": _bounded_int(op, "decay", where),
            "reasoning": op.get("reasoning", ""),
            "tool_kind": _enum(op, "tool_kind", TOOL_KINDS, where),
            "social_target": _enum(op, "social_target", SOCIAL_TARGETS, where, nullable=True),
            "rule_tags": _str_list(op, "rule_tags", where),
            "automaticity_hint": _enum(op, "automaticity_hint", AUTOMATICITY_HINTS, where),
            "affect_hint": _enum(op, "affect_hint", AFFECT_HINTS, where, nullable=True),
        })
    return {"operations": operations}


def _validate_segment_actions(record: dict) -> dict:
    raw = record.get("actions")
    if not isinstance(raw, list) or not raw:
        raise SchemaError("segment_actions: 'actions' must be a nonempty list")
    actions = []
    for i, seg in enumerate(raw):
        where = f"action[{i}]"
        if not isinstance(seg, dict):
            raise SchemaError(f"{where}: must be an object")
        start = _require(seg, "start", int, where)
        end = _require(seg, "end", int, where)
        if start < 1 or end < start:
            raise SchemaError(f"{where}: segment bounds [{start}, {end}] invalid")
        actions.append({
            "start": start,
            "end": end,
            "label": _require(seg, "label", str, where),
            "reasoning": seg.get("reasoning", ""),
            "confidence": _bounded_int(seg, "confidence", where),
            "object_label": seg.get("object_label", ""),
            "outcome_type": _enum(seg, "outcome_type", OUTCOME_TYPES, where),
            "domain": _enum(seg, "domain", DOMAINS, where),
            "community": _enum(seg, "community", COMMUNITIES, where, nullable=True),
            "engagement_state": _enum(seg, "engagement_state", ENGAGEMENT_STATES, where),
            "cognitive_mode": _enum(seg, "cognitive_mode", COGNITIVE_MODES, where),
            "initiation": _enum(seg, "initiation", INITIATIONS, where),
            "social_mode": _enum(seg, "social_mode", SOCIAL_MODES, where),
        })
    return {"actions": actions}


def _validate_propose_activities(record: dict) -> dict:
    raw = record.get("candidates")
    if not isinstance(raw, list):
        raise SchemaError("propose_activities: 'candidates' must be a list")
    candidates = []
    for i, cand in enumerate(raw):
        where = f"candidate[{i}]"
        if not isinstance(cand, dict):
            raise SchemaError(f"{where}: must be an object")
        action_ids = _str_list(cand, "action_ids", where)
        valences = _str_list(cand, "action_valences", where)
        if len(valences) != len(action_ids):
            raise SchemaError(f"{where}: action_valences length {len(valences)} != action_ids length {len(action_ids)}")
        for valence in valences:
            if valence not in VALENCES:
                raise SchemaError(f"{where}: valence {valence!r} not in {sorted(VALENCES)}")
        candidates.append({
            "description": _require(cand, "description", str, where),
            "purpose": cand.get("purpose", ""),
            "reasoning": cand.get("reasoning", ""),
            "people": _str_list(cand, "people", where),
            "resources": _str_list(cand, "resources", where),
            "temporal_pattern": cand.get("temporal_pattern", ""),
            "engagement_profile": _enum(cand, "engagement_profile", ENGAGEMENT_PROFILES, where),
            "initiation_profile": _enum(cand, "initiation_profile", INITIATION_PROFILES, where),
            "identity_context": _enum(cand, "identity_context", IDENTITY_CONTEXTS, where),
            "action_ids": action_ids,
            "action_valences": valences,
            "confidence": _bounded_int(cand, "confidence", where),
        })
    return {"candidates": candidates}


def _validate_reconcile(record: dict) -> dict:
    raw = record.get("decisions")
    if not isinstance(raw, list):
        raise SchemaError("reconcile_activities: 'decisions' must be a list")
    decisions = []
    for i, dec in enumerate(raw):
        where = f"decision[{i}]"
        if not isinstance(dec, dict):
            raise SchemaError(f"{where}: must be an object")
        kind = dec.get("decision")
        if kind not in ("match", "revise", "new", "merge"):
            raise SchemaError(f"{where}: decision must be match/revise/new/merge, got {kind!r}")
        targets = _str_list(dec, "targets", where)
        if kind == "match" and len(targets) != 1:
            raise SchemaError(f"{where}: match needs exactly one target")
        if kind == "revise" and (len(targets) != 1 or not dec.get("label")):
            raise SchemaError(f"{where}: revise needs one target and a label")
        if kind == "new" and targets:
            raise SchemaError(f"{where}: new must not name targets")
        if kind == "merge" and len(targets) < 2:
            raise SchemaError(f"{where}: merge needs at least two targets")
        decisions.append({
            "candidate_index": _require(dec, "candidate_index", int, where),
            "decision": kind,
            "targets": targets,
            "label": dec.get("label"),
            "reasoning": dec.get("reasoning", ""),
        })
    return {"decisions": decisions}


def _validate_synthesis(record: dict) -> dict:
    raw = record.get("strivings")
    if not isinstance(raw, list):
        raise SchemaError("synthesis: 'strivings' must be a list")
    strivings = []
    for i, rec in enumerate(raw):
        where = f"striving[{i}]"
        if not isinstance(rec, dict):
            raise SchemaError(f"{where}: must be an object")
        needs = _str_list(rec, "needs", where)
        for need in needs:
            if need not in NEEDS:
                raise SchemaError(f"{where}: need {need!r} not in {sorted(NEEDS)}")
        goal_id = rec.get("goal_id")
        if goal_id is not None and not isinstance(goal_id, str):
            raise SchemaError(f"{where}: goal_id must be a string or null")
        strivings.append({
            "goal_id": goal_id,
            "label": _require(rec, "label", str, where),
            "reasoning": rec.get("reasoning", ""),
            "needs": needs,
            "orientation": _enum(rec, "orientation", ORIENTATIONS, where),
            "aspiration_vs_obligation": _enum(rec, "aspiration_vs_obligation", ASPIRATION_KINDS, where),
            "autonomy": _enum(rec, "autonomy", AUTONOMY_KINDS, where),
            "identity_link": rec.get("identity_link", ""),
            "feared_self": rec.get("feared_self", ""),
            "activity_ids": _str_list(rec, "activity_ids", where),
            "confidence": _bounded_int(rec, "confidence", where),
        })
    dropped_raw = record.get("dropped_goals", [])
    if not isinstance(dropped_raw, list):
        raise SchemaError("synthesis: 'dropped_goals' must be a list")
    dropped = []
    for i, rec in enumerate(dropped_raw):
        where = f"dropped_goals[{i}]"
        if not isinstance(rec, dict):
            raise SchemaError(f"{where}: must be an object")
        reason = _require(rec, "reason", str, where)
        if not reason.strip():
            raise SchemaError(f"{where}: reason must be nonempty")
        dropped.append({"goal_id": _require(rec, "goal_id", str, where), "reason": reason})
    return {"strivings": strivings, "dropped_goals": dropped}


def _validate_audit(record: dict) -> dict:
    where = "audit"
    return {
        "is_new_information": _require(record, "is_new_information", bool, where),
        "data_type": _enum(record, "data_type", DATA_TYPES, where),
        "subject": record.get("subject", ""),
        "recipient": record.get("recipient", ""),
        "transmit_data": _require(record, "transmit_data", bool, where),
        "reasoning": record.get("reasoning", ""),
    }


def _validate_parse_edit(record: dict) -> dict:
    kind = record.get("kind")
    if kind not in EDIT_KINDS:
        raise SchemaError(f"parse_edit: kind must be one of {sorted(EDIT_KINDS)}, got {kind!r}")
    payload = record.get("payload", {})
    if not isinstance(payload, dict):
        raise SchemaError("parse_edit: payload must be an object")
    return {"kind": kind, "payload": payload, "clarification": record.get("clarification", "")}


VALIDATORS: dict[str, Callable[[dict], dict]] = {
    "transcribe": _validate_transcribe,
    "summarize": _validate_summarize,
    "extract_operations": _validate_extract_operations,
    "segment_actions": _validate_segment_actions,
    "propose_activities": _validate_propose_activities,
    "reconcile_activities": _validate_reconcile,
    "synthesize_strivings": _validate_synthesis,
    "refine_strivings": _validate_synthesis,
    "audit": _validate_audit,
    "parse_edit": _validate_parse_edit,
}


def validate_response(template_id: str, record: Any) -> dict:
    if not isinstance(record, dict):
        raise SchemaError(f"{template_id}: response must be a JSON object")
    validator = VALIDATORS.get(template_id)
    if validator is None:
        raise SchemaError(f"no schema registered for template {template_id!r}")
    return validator(record)
