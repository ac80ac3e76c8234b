"""Deterministic keyword-driven mock provider behavior.

A tiny rule-based stand-in for the hosted model: every response is a pure
function of (template id, rendered inputs), built from a fixed theme
vocabulary. Observation text is themed by keyword scoring; segmentation
groups contiguous same-theme runs; activities cluster by theme; strivings
consolidate theme groups, merging more aggressively when the user context
mentions the connecting thread (which is what gives the full pipeline fewer,
broader goals than the ablated ones on the same stream).
"""

from __future__ import annotations

import json
import re
from typing import Mapping

from ..gateway.providers import register_rulebook

THEME_ORDER = ("heritage", "family", "research", "admin", "football")

THEME_KEYWORDS: dict[str, tuple[str, ...]] = {
    "heritage": ("homesick", "cultural identity", "home culture", "classical music", "momo",
                 "nepali", "kathmandu", "folk", "dumpling", "home-country"),
    "family": ("family health", "health monitor", "eldercare", "mom", "dad", "parents",
               "checkup", "blood pressure", "family wellbeing", "family connections"),
    "research": ("research", "protocol", "experiment", "notebook", "analysis", "related work",
                 "paper draft", "study design", "figure"),
    "admin": ("irb", "expense", "reimbursement", "calendar", "schedul", "administrat", "compliance"),
    "football": ("football", "gareth bale", "fixture", "la liga", "transfer rumor"),
}

ACTION_LABELS = {
    "heritage": "Reconnecting with home culture through music, food, and news",
    "family": "Checking in on family wellbeing and care options",
    "research": "Advancing the research project",
    "admin": "Working through lab administrative tasks",
    "football": "Keeping up with football news and conversations",
    "general": "Assorted computer use",
}

ACTIVITY_LABELS = {
    "heritage": "Managing homesickness and cultural identity through personal interests, food, news, music, and family messages",
    "family": "Researching family health monitoring services",
    "research": "Developing the screen-activity study: protocol, analysis, and paper drafting",
    "admin": "Handling lab administration: IRB, expenses, and scheduling",
    "football": "Following football and chatting with friends about matches",
    "general": "Assorted everyday computer use",
}

# Consolidated goals (emitted when the user context names the connecting thread)
MERGED_STRIVINGS = {
    ("heritage", "family"): (
        "Dedicated to preserving cultural identity and family connections while mitigating the isolation of life abroad",
        "homesick",
    ),
    ("research", "admin"): (
        "Establishing themselves as a rigorous, reliable researcher",
        "research",
    ),
}

# One goal per theme (emitted without consolidating context)
SPLIT_STRIVINGS = {
    "heritage": "Sustaining ties to home culture while living abroad",
    "family": "Caring for family wellbeing from a distance",
    "research": "Making steady progress on research projects",
    "admin": "Staying on top of administrative obligations",
    "football": "Keeping up friendships through shared sports fandom",
    "general": "Maintaining everyday digital routines",
}

# Surface-level goals for the flat sliding-window variant (one extra split)
WINDOW_STRIVINGS = {
    "heritage_music": ("Watching classical music performances from home", ("classical music", "folk")),
    "heritage_food": ("Ordering familiar foods and reading home-country news", ("momo", "dumpling", "nepali", "kathmandu", "home-country")),
    "family": ("Researching health monitoring devices for parents", THEME_KEYWORDS["family"]),
    "research": ("Writing and analyzing study documents", THEME_KEYWORDS["research"]),
    "admin": ("Completing administrative forms and scheduling", THEME_KEYWORDS["admin"]),
    "football": ("Reading about football players and matches", THEME_KEYWORDS["football"]),
}

ACTION_META = {
    "heritage": {"outcome_type": "learn_explore", "domain": "personal_life", "community": "none",
                 "engagement_state": "fragmented", "cognitive_mode": "knowledge_based",
                 "initiation": "self_initiated", "social_mode": "passive_consumption"},
    "family": {"outcome_type": "communicate", "domain": "health", "community": "family_friends",
               "engagement_state": "sustained_focus", "cognitive_mode": "knowledge_based",
               "initiation": "self_initiated", "social_mode": "async"},
    "research": {"outcome_type": "produce_artifact", "domain": "research", "community": "lab",
                 "engagement_state": "sustained_focus", "cognitive_mode": "knowledge_based",
                 "initiation": "self_initiated", "social_mode": "solo"},
    "admin": {"outcome_type": "plan_organize", "domain": "admin", "community": "lab",
              "engagement_state": "fragmented", "cognitive_mode": "rule_based",
              "initiation": "externally_triggered", "social_mode": "solo"},
    "football": {"outcome_type": "learn_explore", "domain": "personal_life", "community": "family_friends",
                 "engagement_state": "fragmented", "cognitive_mode": "knowledge_based",
                 "initiation": "externally_triggered", "social_mode": "async"},
    "general": {"outcome_type": "other", "domain": "other", "community": "none",
                "engagement_state": "fragmented", "cognitive_mode": "skill_based",
                "initiation": "self_initiated", "social_mode": "solo"},
}

IDENTITY_CONTEXT = {"heritage": "personal", "family": "health", "research": "work",
                    "admin": "work", "football": "social", "general": "personal"}

APP_TOOL_KINDS = (
    ("imessage", "messaging"), ("slack", "messaging"), ("mail", "messaging"),
    ("docs", "docs"), ("overleaf", "docs"), ("word", "docs"),
    ("calendar", "calendar"), ("jupyter", "data_analysis"), ("notebook", "data_analysis"),
    ("sheets", "data_analysis"), ("editor", "editor"), ("vscode", "editor"),
    ("youtube", "browser"), ("chrome", "browser"), ("wikipedia", "browser"),
    ("doordash", "browser"), ("google", "browser"), ("safari", "browser"),
)

SOCIAL_TARGET_HINTS = (
    ("advisor", "advisor"), ("lab", "lab"), ("collaborator", "collaborators"),
    ("mom", "family"), ("dad", "family"), ("family", "family"), ("friend", "friends"),
)


def theme_of(text: str) -> str:
    lowered = text.lower()
    best_theme, best_hits = "general", 0
    for theme in THEME_ORDER:
        hits = sum(1 for kw in THEME_KEYWORDS[theme] if kw in lowered)
        if hits > best_hits:
            best_theme, best_hits = theme, hits
    return best_theme


def _tool_kind(text: str) -> str:
    lowered = text.lower()
    for needle, kind in APP_TOOL_KINDS:
        if needle in lowered:
            return kind
    return "browser"


def _social_target(text: str) -> str:
    lowered = text.lower()
    for needle, target in SOCIAL_TARGET_HINTS:
        if needle in lowered:
            return target
    return "none"


def _bullets(text: str) -> list[str]:
    return [line[2:].strip() for line in text.splitlines() if line.strip().startswith("- ")]


@register_rulebook("fixture")
def FixtureRulebook(seed: int = 0, merge_threshold: int = 1):
    """Factory: returns the rulebook callable. ``seed`` is accepted for CLI parity."""
    del seed, merge_threshold

    def rulebook(template_id: str, inputs: Mapping[str, str]) -> dict:
        handler = _HANDLERS.get(template_id)
        if handler is None:
            raise LookupError(f"fixture rulebook has no rule for template {template_id!r}")
        return handler(inputs)

    return rulebook


def _transcribe(inputs: Mapping[str, str]) -> dict:
    lines = ["# Screen transcription"]
    for raw in str(inputs.get("screenshots", "")).splitlines():
        if ": " in raw:
            text = raw.split(": ", 1)[1].strip()
            if text:
                lines.append(f"- {text}")
    return {"transcription": "\n".join(lines)}


def _summarize(inputs: Mapping[str, str]) -> dict:
    count = sum(1 for line in str(inputs.get("screenshots", "")).splitlines() if line.strip())
    return {"summary": f"- user working across {count} captured frames"}


def _extract_operations(inputs: Mapping[str, str]) -> dict:
    operations = []
    for bullet in _bullets(str(inputs.get("observation_text", ""))):
        theme = theme_of(bullet)
        operations.append({
            "text": bullet,
            "confidence": 7,
            "decay": {"admin": 3, "football": 4}.get(theme, 6),
            "reasoning": f"visible on screen; themed {theme}",
            "tool_kind": _tool_kind(bullet),
            "social_target": _social_target(bullet),
            "rule_tags": ["deadline"] if "deadline" in bullet.lower() else [],
            "automaticity_hint": "unclear",
            "affect_hint": "none",
        })
    return {"operations": operations}


def _segment_actions(inputs: Mapping[str, str]) -> dict:
    operations = json.loads(str(inputs["operations"]))
    segments = []
    run_start, run_theme = 1, None
    for op in operations:
        theme = theme_of(op["text"])
        if run_theme is None:
            run_theme = theme
        elif theme != run_theme:
            segments.append((run_start, op["index"] - 1, run_theme))
            run_start, run_theme = op["index"], theme
    if run_theme is not None:
        segments.append((run_start, operations[-1]["index"], run_theme))
    actions = []
    for start, end, theme in segments:
        meta = ACTION_META[theme]
        actions.append({
            "start": start,
            "end": end,
            "label": ACTION_LABELS[theme],
            "reasoning": f"contiguous operations share the {theme} intent",
            "confidence": 8,
            "object_label": theme,
            **meta,
        })
    return {"actions": actions}


def _propose_activities(inputs: Mapping[str, str]) -> dict:
    actions = json.loads(str(inputs["actions"]))
    context_actions = []
    for key in ("prior_context", "concurrent_context"):
        block = str(inputs.get(key, "")).strip()
        if block:
            context_actions.extend(json.loads(block))
    by_theme: dict[str, list[str]] = {}
    for action in actions:
        by_theme.setdefault(theme_of(action["label"]), []).append(action["id"])
    for action in context_actions:
        theme = theme_of(action["label"])
        if theme in by_theme and action["id"] not in by_theme[theme]:
            by_theme[theme].append(action["id"])  # multi-membership re-clustering
    candidates = []
    for theme in sorted(by_theme, key=lambda t: (THEME_ORDER.index(t) if t in THEME_ORDER else 99)):
        action_ids = by_theme[theme]
        candidates.append({
            "description": ACTIVITY_LABELS[theme],
            "purpose": f"recurring {theme} pursuit",
            "reasoning": f"{len(action_ids)} actions share the {theme} working sphere",
            "people": ["mom", "dad"] if theme in ("heritage", "family") else [],
            "resources": [],
            "temporal_pattern": "recurs across sessions",
            "engagement_profile": "mixed",
            "initiation_profile": "mixed",
            "identity_context": IDENTITY_CONTEXT[theme],
            "action_ids": action_ids,
            "action_valences": ["supports"] * len(action_ids),
            "confidence": 8,
        })
    return {"candidates": candidates}


def _reconcile_activities(inputs: Mapping[str, str]) -> dict:
    candidates = json.loads(str(inputs["candidates"]))
    existing = json.loads(str(inputs["existing_activities"])) if str(inputs.get("existing_activities", "")).strip() else []
    by_label = {activity["label"]: activity for activity in existing}
    decisions = []
    for candidate in candidates:
        match = by_label.get(candidate["description"])
        if match is not None and candidate.get("action_ids") and \
                sorted(candidate["action_ids"]) == sorted(match.get("action_ids", [])):
            # the candidate IS this existing activity verbatim (an orphan re-offered):
            # fold it into a theme sibling when one exists
            theme = theme_of(candidate["description"])
            sibling = None
            for activity in existing:
                if activity["id"] == match["id"]:
                    continue
                if IDENTITY_CONTEXT.get(theme_of(activity["label"]), "work") == IDENTITY_CONTEXT.get(theme, "work"):
                    sibling = activity
                    break
            if sibling is not None:
                decisions.append({
                    "candidate_index": candidate["index"],
                    "decision": "match",
                    "targets": [sibling["id"]],
                    "reasoning": "orphaned sphere folds into its closest sibling",
                })
                continue
        if match is not None:
            decisions.append({
                "candidate_index": candidate["index"],
                "decision": "match",
                "targets": [match["id"]],
                "reasoning": "same working sphere",
            })
        else:
            decisions.append({
                "candidate_index": candidate["index"],
                "decision": "new",
                "targets": [],
                "reasoning": "no existing activity covers this sphere",
            })
    return {"decisions": decisions}


def _goal_groups(user_context: str) -> list[tuple[tuple[str, ...], str]]:
    """Theme groups and their labels, conditioned on the user context."""
    lowered = user_context.lower()
    groups: list[tuple[tuple[str, ...], str]] = []
    consumed: set[str] = set()
    for themes, (label, needed_kw) in MERGED_STRIVINGS.items():
        if needed_kw in lowered:
            groups.append((themes, label))
            consumed.update(themes)
    for theme in THEME_ORDER + ("general",):
        if theme not in consumed:
            groups.append(((theme,), SPLIT_STRIVINGS[theme]))
    return groups


def _synthesize(inputs: Mapping[str, str]) -> dict:
    activities_raw = str(inputs.get("activities", "")).strip()
    try:
        activities = json.loads(activities_raw) if activities_raw else []
        window_mode = False
    except json.JSONDecodeError:
        activities = []
        window_mode = True
    existing_raw = str(inputs.get("existing_goals", "")).strip()
    try:
        existing = json.loads(existing_raw) if existing_raw else []
    except json.JSONDecodeError:
        existing = [
            {"id": line.split(":", 1)[0][2:].strip(), "label": line.split(":", 1)[1].strip(), "flags": [], "activity_ids": []}
            for line in existing_raw.splitlines() if line.startswith("- ") and ":" in line
        ]

    strivings = []
    used_goal_ids: set[str] = set()
    by_label = {goal["label"]: goal for goal in existing}

    def emit(label: str, activity_ids: list[str], needs: list[str], feared: str) -> None:
        goal = by_label.get(label)
        goal_id = None
        if goal is not None and goal["id"] not in used_goal_ids:
            goal_id = goal["id"]
            used_goal_ids.add(goal_id)
        strivings.append({
            "goal_id": goal_id,
            "label": label,
            "reasoning": "recurring pattern across observed activities",
            "needs": needs,
            "orientation": "approach",
            "aspiration_vs_obligation": "mixed",
            "autonomy": "autonomous",
            "identity_link": "the person they are working to become",
            "feared_self": feared,
            "activity_ids": activity_ids,
            "confidence": 7,
        })

    if window_mode:
        lowered = activities_raw.lower()
        for key in WINDOW_STRIVINGS:
            label, keywords = WINDOW_STRIVINGS[key]
            if any(kw in lowered for kw in keywords):
                emit(label, [], ["stimulation"], "losing touch")
    else:
        by_theme: dict[str, list[str]] = {}
        for activity in activities:
            by_theme.setdefault(theme_of(activity["label"]), []).append(activity["id"])
        for themes, label in _goal_groups(str(inputs.get("user_context", ""))):
            activity_ids = [aid for theme in themes for aid in by_theme.get(theme, [])]
            if activity_ids:
                needs = {"heritage": ["relatedness", "self_coherence"], "family": ["nurturance", "safety"],
                         "research": ["competence", "purpose"], "admin": ["order"],
                         "football": ["relatedness", "stimulation"]}.get(themes[0], ["purpose"])
                emit(label, activity_ids, needs, "drifting from what matters")

    # keep user-constrained goals verbatim; account for everything else
    dropped = []
    for goal in existing:
        if goal["id"] in used_goal_ids:
            continue
        if set(goal.get("flags", [])) & {"locked", "user_edited", "endorsed", "user_reassigned"}:
            strivings.append({
                "goal_id": goal["id"],
                "label": goal["label"],
                "reasoning": "user-constrained goal carried forward",
                "needs": ["purpose"],
                "orientation": "approach",
                "aspiration_vs_obligation": "mixed",
                "autonomy": "autonomous",
                "identity_link": "",
                "feared_self": "",
                "activity_ids": goal.get("activity_ids", []),
                "confidence": 7,
            })
            used_goal_ids.add(goal["id"])
        else:
            dropped.append({"goal_id": goal["id"], "reason": "superseded by the current synthesis"})
    return {"strivings": strivings, "dropped_goals": dropped}


def _refine(inputs: Mapping[str, str]) -> dict:
    previous = json.loads(str(inputs["previous_output"]))
    activities_raw = str(inputs.get("activities", "")).strip()
    try:
        activities = json.loads(activities_raw) if activities_raw else []
    except json.JSONDecodeError:
        activities = []
    merged: dict[str, dict] = {}
    for striving in previous["strivings"]:
        if striving["label"] in merged:
            keeper = merged[striving["label"]]
            keeper["activity_ids"] = sorted(set(keeper["activity_ids"]) | set(striving["activity_ids"]))
            if striving.get("goal_id") and not keeper.get("goal_id"):
                keeper["goal_id"] = striving["goal_id"]
        else:
            merged[striving["label"]] = dict(striving)
    strivings = list(merged.values())
    covered = {aid for s in strivings for aid in s["activity_ids"]}
    uncovered = [a for a in activities if a["id"] not in covered and a.get("status") == "stable"]
    for activity in uncovered:
        theme = theme_of(activity["label"])
        target = None
        for striving in strivings:
            if theme_of(striving["label"]) == theme:
                target = striving
                break
        if target is None and strivings:
            target = strivings[-1]
        if target is None:
            strivings.append({
                "goal_id": None,
                "label": SPLIT_STRIVINGS.get(theme, SPLIT_STRIVINGS["general"]),
                "reasoning": "coverage: activity needed a pursuit",
                "needs": ["purpose"],
                "orientation": "approach",
                "aspiration_vs_obligation": "mixed",
                "autonomy": "autonomous",
                "identity_link": "",
                "feared_self": "",
                "activity_ids": [activity["id"]],
                "confidence": 6,
            })
        else:
            target["activity_ids"] = sorted(set(target["activity_ids"]) | {activity["id"]})
    return {"strivings": strivings, "dropped_goals": previous.get("dropped_goals", [])}


def _audit(inputs: Mapping[str, str]) -> dict:
    text = str(inputs.get("observation", "")).lower()
    if "bank" in text and ("login" in text or "password" in text or "account" in text):
        return {
            "is_new_information": True,
            "data_type": "banking_credentials",
            "subject": "user finances",
            "recipient": "goal model",
            "transmit_data": False,
            "reasoning": "no precedent of sharing financial information",
        }
    theme = theme_of(text)
    data_type = {"family": "personal_communications", "research": "work_activity",
                 "admin": "work_activity", "heritage": "browsing_activity",
                 "football": "browsing_activity"}.get(theme, "general_activity")
    return {
        "is_new_information": True,
        "data_type": data_type,
        "subject": "user activity",
        "recipient": "goal model",
        "transmit_data": True,
        "reasoning": "consistent with established disclosure patterns",
    }


def _parse_edit(inputs: Mapping[str, str]) -> dict:
    text = str(inputs.get("text", "")).strip()
    ids = re.findall(r"\b(?:striving|activity|action)-\d+\b", text)
    lowered = text.lower()
    if lowered.startswith(("rename ", "relabel ")) and " to " in lowered and ids:
        new_label = text.split(" to ", 1)[1].strip().strip('"')
        return {"kind": "inline_edit", "payload": {"node_id": ids[0], "new_label": new_label}}
    if lowered.startswith("move ") and len(ids) >= 2:
        return {"kind": "reassign", "payload": {"activity_id": ids[0], "new_striving_id": ids[1]}}
    if lowered.startswith(("remove ", "delete ")) and ids:
        disposition = "discard_evidence" if "discard" in lowered else "reassign_evidence"
        return {"kind": "remove", "payload": {"node_id": ids[0], "evidence_disposition": disposition}}
    if lowered.startswith("merge ") and len(ids) >= 2:
        return {"kind": "merge", "payload": {"node_ids": ids}}
    for verb in ("lock", "endorse", "reject"):
        if lowered.startswith(verb + " ") and ids:
            return {"kind": verb, "payload": {"node_id": ids[0]}}
    return {"kind": "unclear", "payload": {},
            "clarification": "Which node should be edited, and how? Name it by id."}


_HANDLERS = {
    "transcribe": _transcribe,
    "summarize": _summarize,
    "extract_operations": _extract_operations,
    "segment_actions": _segment_actions,
    "propose_activities": _propose_activities,
    "reconcile_activities": _reconcile_activities,
    "synthesize_strivings": _synthesize,
    "refine_strivings": _refine,
    "audit": _audit,
    "parse_edit": _parse_edit,
}
