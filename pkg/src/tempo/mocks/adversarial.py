"""A hostile provider for the guard suite.

Every cycle it attempts to relabel, merge, and delete whatever is flagged:
reconcile decisions merge groups that include protected activities, and the
synthesis output alternates between relabeling protected goals and listing
them in dropped_goals, while recreating every rejected label it can read out
of the constraint block. All of it passes structural validation, so the
writes reach the store and only the guard stands in the way.
"""

from __future__ import annotations

import hashlib
import json
import re
from typing import Mapping

from ..gateway.providers import register_rulebook
from .fixture import FixtureRulebook

_REJECTED_LINE = re.compile(r"- Goal ID:(\S+) \| (.*?) \| \[rejected\]")


def _fingerprint(*parts: str) -> int:
    digest = hashlib.sha256("||".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


@register_rulebook("adversarial")
def AdversarialRulebook(seed: int = 0):
    benign = FixtureRulebook()

    def _reconcile(inputs: Mapping[str, str]) -> dict:
        candidates = json.loads(str(inputs["candidates"]))
        existing_raw = str(inputs.get("existing_activities", "")).strip()
        existing = json.loads(existing_raw) if existing_raw else []
        flagged = [a for a in existing if a.get("flags")]
        decisions = []
        for candidate in candidates:
            if len(existing) >= 2:
                # merge everything, protected targets first so the guard must downgrade
                ordered = flagged + [a for a in existing if a not in flagged]
                decisions.append({
                    "candidate_index": candidate["index"],
                    "decision": "merge",
                    "targets": [a["id"] for a in ordered],
                    "label": f"CORRUPTED merge {seed}",
                    "reasoning": "hostile consolidation",
                })
            elif existing:
                target = (flagged or existing)[0]
                decisions.append({
                    "candidate_index": candidate["index"],
                    "decision": "revise",
                    "targets": [target["id"]],
                    "label": f"CORRUPTED revise {seed}",
                    "reasoning": "hostile relabel",
                })
            else:
                decisions.append({
                    "candidate_index": candidate["index"],
                    "decision": "new",
                    "targets": [],
                    "reasoning": "nothing to corrupt yet",
                })
        return {"decisions": decisions}

    def _synthesis(inputs: Mapping[str, str]) -> dict:
        existing_raw = str(inputs.get("existing_goals", "")).strip()
        existing = json.loads(existing_raw) if existing_raw else []
        activities_raw = str(inputs.get("activities", "")).strip()
        try:
            activities = json.loads(activities_raw) if activities_raw else []
        except json.JSONDecodeError:
            activities = []
        stable_ids = [a["id"] for a in activities if a.get("status") == "stable"]
        relabel_cycle = _fingerprint(existing_raw, activities_raw) % 2 == 0

        strivings = []
        dropped = []
        for goal in existing:
            protected = bool(set(goal.get("flags", [])) & {"locked", "user_edited"})
            if protected and not relabel_cycle:
                dropped.append({"goal_id": goal["id"], "reason": "hostile deletion attempt"})
            else:
                strivings.append({
                    "goal_id": goal["id"],
                    "label": f"CORRUPTED {goal['id']}",
                    "reasoning": "hostile relabel attempt",
                    "needs": ["status"],
                    "orientation": "avoidance",
                    "aspiration_vs_obligation": "ought",
                    "autonomy": "controlled",
                    "identity_link": "",
                    "feared_self": "",
                    # strip assignments so protected reassignment edges get attacked too
                    "activity_ids": [],
                    "confidence": 9,
                })
        # recreate every rejected label visible in the constraint block
        for match in _REJECTED_LINE.finditer(str(inputs.get("user_constraints", ""))):
            strivings.append({
                "goal_id": None,
                "label": match.group(2),
                "reasoning": "hostile resurrection of a rejected goal",
                "needs": ["status"],
                "orientation": "approach",
                "aspiration_vs_obligation": "ideal",
                "autonomy": "autonomous",
                "identity_link": "",
                "feared_self": "",
                "activity_ids": [],
                "confidence": 9,
            })
        # a catch-all keeps the output structurally valid (coverage rule)
        strivings.append({
            "goal_id": None,
            "label": f"CORRUPTED catch-all {_fingerprint(existing_raw) % 997}",
            "reasoning": "hostile catch-all",
            "needs": ["status"],
            "orientation": "approach",
            "aspiration_vs_obligation": "ought",
            "autonomy": "controlled",
            "identity_link": "",
            "feared_self": "",
            "activity_ids": stable_ids,
            "confidence": 9,
        })
        return {"strivings": strivings, "dropped_goals": dropped}

    def rulebook(template_id: str, inputs: Mapping[str, str]) -> dict:
        if template_id == "reconcile_activities":
            return _reconcile(inputs)
        if template_id in ("synthesize_strivings", "refine_strivings"):
            return _synthesis(inputs)
        return benign(template_id, inputs)

    return rulebook
