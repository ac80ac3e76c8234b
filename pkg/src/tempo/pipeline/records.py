"""Pipeline flow records: candidates, decisions, synthesis results, user context."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..clock import to_iso
from ..errors import ValidationError


@dataclass
class ActivityCandidate:
    description: str
    purpose: str = ""
    reasoning: str = ""
    people: list[str] = field(default_factory=list)
    resources: list[str] = field(default_factory=list)
    temporal_pattern: str = ""
    engagement_profile: str = "mixed"
    initiation_profile: str = "mixed"
    identity_context: str = "work"
    action_ids: list[str] = field(default_factory=list)
    action_valences: list[str] = field(default_factory=list)
    confidence: int = 5

    @classmethod
    def from_record(cls, record: dict) -> "ActivityCandidate":
        return cls(**record)


@dataclass
class ReconcileDecision:
    candidate_index: int
    decision: str  # match | revise | new | merge
    targets: list[str] = field(default_factory=list)
    label: Optional[str] = None
    reasoning: str = ""

    @classmethod
    def from_record(cls, record: dict) -> "ReconcileDecision":
        return cls(**record)


@dataclass
class StrivingRecord:
    label: str
    goal_id: Optional[str] = None  # references an existing striving when set
    reasoning: str = ""
    needs: list[str] = field(default_factory=list)
    orientation: str = "mixed"
    aspiration_vs_obligation: str = "mixed"
    autonomy: str = "mixed"
    identity_link: str = ""
    feared_self: str = ""
    activity_ids: list[str] = field(default_factory=list)
    confidence: int = 5

    @classmethod
    def from_record(cls, record: dict) -> "StrivingRecord":
        return cls(**record)


@dataclass
class SynthesisResult:
    strivings: list[StrivingRecord]
    dropped_goals: list[tuple[str, str]]  # (goal id, nonempty reason)

    @classmethod
    def from_record(cls, record: dict) -> "SynthesisResult":
        return cls(
            strivings=[StrivingRecord.from_record(r) for r in record["strivings"]],
            dropped_goals=[(d["goal_id"], d["reason"]) for d in record["dropped_goals"]],
        )

    def accounted_ids(self) -> set[str]:
        ids = {s.goal_id for s in self.strivings if s.goal_id}
        ids.update(goal_id for goal_id, _ in self.dropped_goals)
        return ids


# ---------------------------------------------------------------------------
# User-provided context
# ---------------------------------------------------------------------------

ONBOARDING_QUESTIONS: tuple[tuple[str, str], ...] = (
    ("q1", "What are the main roles you play in your life right now?"),
    ("q2", "Walk me through what a typical weekday looks like for you."),
    ("q3", "What takes up most of your time and energy right now---whether by choice or obligation?"),
    ("q4", "What are the main sources of stress or pressure in your life right now?"),
    ("q5", "Has anything significant changed in your life recently, or is anything about to change?"),
    ("q6", "In terms of your work or career, what matters most to you or concerns you most?"),
    ("q7", "In terms of your relationships, what matters most to you or concerns you most?"),
    ("q8", "In terms of your personal growth, what matters most to you or concerns you most?"),
    ("q9", "In terms of your health, what matters most to you or concerns you most?"),
    ("q10", "In terms of your finances, what matters most to you or concerns you most?"),
    ("q11", "In terms of your education, what matters most to you or concerns you most?"),
    ("q12", "Is there anything else about your life or situation that would help us understand your computer use?"),
)

QUESTION_IDS = tuple(qid for qid, _ in ONBOARDING_QUESTIONS)


@dataclass
class UserContextDoc:
    answers: dict[str, str] = field(default_factory=lambda: {qid: "" for qid in QUESTION_IDS})
    last_edited: int = 0

    def validate(self) -> None:
        if set(self.answers) != set(QUESTION_IDS):
            raise ValidationError(
                f"user context must cover the twelve onboarding question slots {list(QUESTION_IDS)}"
            )

    def render(self) -> str:
        """Prompt block: answered questions only, in onboarding order."""
        lines = []
        for qid, question in ONBOARDING_QUESTIONS:
            answer = self.answers.get(qid, "").strip()
            if answer:
                lines.append(f"Q: {question}\nA: {answer}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"answers": dict(self.answers), "last_edited": to_iso(self.last_edited)}


# ---------------------------------------------------------------------------
# Scheduler state
# ---------------------------------------------------------------------------

@dataclass
class SchedulerState:
    op_buffer: list[str] = field(default_factory=list)  # operation node ids, arrival order
    last_op_at: int = 0
    batches_completed: int = 0
    last_synthesis_at: int = 0
    activities_dirty: bool = False
