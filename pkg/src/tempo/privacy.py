"""Two-stage privacy filter in front of the pipeline.

Stage one is a local pattern scan: any frame whose text matches a PII
pattern (and passes that pattern's checksum validator) is deleted before it
can be persisted anywhere. Stage two is a contextual-integrity audit that
asks the model whether the observation fits the user's disclosure norms;
the scan always runs first so raw PII never reaches a model call, and audit
failures fail closed into a local quarantine.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import NotFoundError, TempoError, ValidationError
from .evidence import ObservationStore
from .graph import Actor, GraphStore, MutationKind
from .graph.types import node_sort_key
from .ingest import Observation

logger = logging.getLogger(__name__)

DATA_TYPES = frozenset({
    "banking_credentials", "health_information", "personal_communications",
    "work_activity", "browsing_activity", "general_activity", "none",
})


# ---------------------------------------------------------------------------
# Pattern library
# ---------------------------------------------------------------------------

def luhn_valid(digits: str) -> bool:
    """Luhn checksum over a digit string (separators must be stripped first)."""
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = int(ch)
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def _luhn_validator(match_text: str) -> bool:
    digits = re.sub(r"[^0-9]", "", match_text)
    return 13 <= len(digits) <= 19 and luhn_valid(digits)


def _entropy_validator(match_text: str) -> bool:
    # Shannon entropy in bits/char; random key material sits well above prose.
    counts: dict[str, int] = {}
    for ch in match_text:
        counts[ch] = counts.get(ch, 0) + 1
    n = len(match_text)
    entropy = -sum((c / n) * math.log2(c / n) for c in counts.values())
    return entropy >= 3.0


VALIDATORS = {
    "luhn": _luhn_validator,
    "entropy": _entropy_validator,
}


@dataclass
class PiiPattern:
    name: str
    matcher: str
    validator: Optional[str] = None  # key into VALIDATORS

    def __post_init__(self):
        try:
            self._compiled = re.compile(self.matcher)
        except re.error as exc:
            raise ValidationError(f"pattern {self.name!r} does not compile: {exc}") from exc
        if self.validator is not None and self.validator not in VALIDATORS:
            raise ValidationError(f"pattern {self.name!r}: unknown validator {self.validator!r}")

    def matches(self, text: str) -> bool:
        for match in self._compiled.finditer(text):
            if self.validator is None or VALIDATORS[self.validator](match.group(0)):
                return True
        return False


def default_patterns() -> list[PiiPattern]:
    return [
        # 13-19 digit card numbers with optional space/dash separators, Luhn-checked
        PiiPattern("credit_card", r"\b\d(?:[ -]?\d){12,18}\b", "luhn"),
        # secret tokens: known vendor prefixes followed by long key material
        PiiPattern(
            "api_key",
            r"\b(?:sk|pk|rk)-[A-Za-z0-9_\-]{24,}\b"
            r"|\bAKIA[0-9A-Z]{16}\b"
            r"|\bgh[pousr]_[A-Za-z0-9]{30,}\b"
            r"|\bxox[baprs]-[A-Za-z0-9\-]{16,}\b",
            "entropy",
        ),
        # medical record numbers written with an explicit MRN marker
        PiiPattern("health_record_id", r"(?i)\bMRN[:#\s-]{0,3}\d{6,10}\b", None),
    ]


def load_patterns(path: str | Path) -> list[PiiPattern]:
    """Read user-extensible pattern config; entries extend the defaults."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read pattern config {path}: {exc}") from exc
    patterns = default_patterns() if raw.get("include_defaults", True) else []
    for entry in raw.get("patterns", []):
        patterns.append(PiiPattern(entry["name"], entry["pattern"], entry.get("validator")))
    return patterns


# ---------------------------------------------------------------------------
# Stage one: frame scan
# ---------------------------------------------------------------------------

@dataclass
class ScanResult:
    observation: Optional[Observation]  # None when every frame was deleted
    deleted: list[tuple[str, str]] = field(default_factory=list)  # (frame id, pattern name)


def scan_frames(observation: Observation, patterns: list[PiiPattern]) -> ScanResult:
    """Delete every frame whose text matches a pattern and passes its validator.

    Frames without text pass unscanned. Matching frames are removed from the
    observation and their image files (if any) deleted from disk; an
    observation with zero surviving frames is dropped entirely.
    """
    kept = []
    deleted: list[tuple[str, str]] = []
    for frame in observation.frames:
        hit = None
        if frame.ocr_text:
            for pattern in patterns:
                if pattern.matches(frame.ocr_text):
                    hit = pattern.name
                    break
        if hit is None:
            kept.append(frame)
        else:
            deleted.append((frame.id, hit))
            logger.info("privacy scan deleted frame %s (pattern %s)", frame.id, hit)
            if frame.image_ref:
                try:
                    Path(frame.image_ref).unlink(missing_ok=True)
                except OSError:
                    logger.warning("could not delete image file %s", frame.image_ref)
    if not kept:
        return ScanResult(observation=None, deleted=deleted)
    scanned = Observation(id=observation.id, frames=kept,
                          transcription=observation.transcription, summary=observation.summary)
    return ScanResult(observation=scanned, deleted=deleted)


# ---------------------------------------------------------------------------
# Stage two: contextual-integrity audit
# ---------------------------------------------------------------------------

@dataclass
class AuditDecision:
    observation_id: str
    is_new_information: bool
    data_type: str
    subject: str
    recipient: str
    transmit_data: bool
    reasoning: str
    at: int = 0
    deferred: bool = False  # audit itself failed; retry next cycle

    def __post_init__(self):
        if self.data_type not in DATA_TYPES:
            raise ValidationError(f"data_type {self.data_type!r} outside the audit enum")

    def to_dict(self) -> dict:
        return {
            "observation_id": self.observation_id,
            "is_new_information": self.is_new_information,
            "data_type": self.data_type,
            "subject": self.subject,
            "recipient": self.recipient,
            "transmit_data": self.transmit_data,
            "reasoning": self.reasoning,
            "at": self.at,
            "deferred": self.deferred,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditDecision":
        return cls(**data)


class AuditGuard:
    """Runs the audit prompt and owns the local quarantine directory.

    Quarantined observations are written under ``quarantine/<obs id>.json``
    next to their decision and never leave the device: they are not added to
    the observation store, not passed to induction, and not included in any
    later prompt context. Deferred entries (audit errored) are retried on
    the next cycle; denied entries are final.
    """

    def __init__(self, gateway, quarantine_dir: str | Path, decisions_path: str | Path | None = None,
                 context_k: int = 20):
        self._gateway = gateway
        self.quarantine_dir = Path(quarantine_dir)
        self.quarantine_dir.mkdir(parents=True, exist_ok=True)
        self._decisions_path = Path(decisions_path) if decisions_path else None
        self.context_k = context_k
        self.decisions: list[AuditDecision] = []
        if self._decisions_path is not None and self._decisions_path.exists():
            for line in self._decisions_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self.decisions.append(AuditDecision.from_dict(json.loads(line)))

    def _persist(self, decision: AuditDecision) -> None:
        self.decisions.append(decision)
        if self._decisions_path is not None:
            self._decisions_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self._decisions_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(decision.to_dict(), sort_keys=True) + "\n")

    def past_context(self, recent_action_labels: list[str]) -> str:
        """Recent audit decisions plus recent action labels, oldest first."""
        lines = []
        for decision in self.decisions[-self.context_k:]:
            lines.append(
                f"- observation {decision.observation_id}: data_type={decision.data_type}, "
                f"transmitted={str(decision.transmit_data).lower()}"
            )
        for label in recent_action_labels[-self.context_k:]:
            lines.append(f"- recent action: {label}")
        return "\n".join(lines)

    def audit(self, observation: Observation, recent_action_labels: list[str], ts: int) -> AuditDecision:
        text = observation.transcription or "\n".join(
            f.ocr_text or f"[frame from {f.source_app}]" for f in observation.frames
        )
        inputs = {
            "observation": text,
            "past_context": self.past_context(recent_action_labels),
        }
        try:
            record = self._gateway.complete("audit", inputs)
            decision = AuditDecision(
                observation_id=observation.id,
                is_new_information=record["is_new_information"],
                data_type=record["data_type"],
                subject=record["subject"],
                recipient=record["recipient"],
                transmit_data=record["transmit_data"],
                reasoning=record["reasoning"],
                at=ts,
            )
        except TempoError as exc:
            logger.warning("audit failed for %s (%s); failing closed", observation.id, exc)
            decision = AuditDecision(
                observation_id=observation.id,
                is_new_information=False,
                data_type="none",
                subject="",
                recipient="",
                transmit_data=False,
                reasoning=f"audit unavailable ({exc}); failing closed",
                at=ts,
                deferred=True,
            )
        self._persist(decision)
        if not decision.transmit_data:
            self.quarantine(observation, decision)
        return decision

    def quarantine(self, observation: Observation, decision: AuditDecision) -> None:
        path = self.quarantine_dir / f"{observation.id}.json"
        doc = {"observation": observation.to_dict(), "decision": decision.to_dict()}
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    def release(self, obs_id: str) -> None:
        (self.quarantine_dir / f"{obs_id}.json").unlink(missing_ok=True)

    def deferred_observations(self) -> list[Observation]:
        """Quarantined observations awaiting an audit retry, oldest id first."""
        out = []
        for path in sorted(self.quarantine_dir.glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            if doc["decision"].get("deferred"):
                out.append(Observation.from_dict(doc["observation"]))
        return out


# ---------------------------------------------------------------------------
# Evidence removal
# ---------------------------------------------------------------------------

def remove_evidence(store: GraphStore, obs_store: ObservationStore, ref_id: str,
                    cause: str = "", ts: int = 0) -> dict:
    """Detach a frame (or a whole observation) from every node and delete it.

    Nodes whose evidence set becomes empty are flagged for review so the next
    reconcile pass re-examines them. Returns an ack listing affected nodes.
    """
    if obs_store.has_frame(ref_id):
        refs = {ref_id}
        obs_store.remove_frame(ref_id)
    elif ref_id in obs_store.observations:
        refs = {f.id for f in obs_store.get(ref_id).frames} | {ref_id}
        obs_store.remove_observation(ref_id)
    else:
        raise NotFoundError(f"unknown evidence ref {ref_id!r}")

    touched: list[str] = []
    emptied: list[str] = []
    # removed nodes are scrubbed too: deleted evidence leaves no dangling refs
    all_nodes = sorted(store.nodes.values(), key=lambda n: node_sort_key(n.id))
    for node in all_nodes:
        if not any(ref in refs for ref in node.evidence):
            continue
        remaining = [ref for ref in node.evidence if ref not in refs]
        payload: dict = {"node_id": node.id, "evidence": remaining}
        if not remaining and not node.removed:
            payload["needs_review"] = True
            emptied.append(node.id)
        store.submit(MutationKind.SET_METADATA, payload, actor=Actor.USER, cause=cause, ts=ts)
        touched.append(node.id)
    touched.sort(key=node_sort_key)
    emptied.sort(key=node_sort_key)
    return {"removed": sorted(refs), "nodes_touched": touched, "nodes_flagged_empty": emptied}
