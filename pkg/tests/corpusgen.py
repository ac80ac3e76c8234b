"""Builders for the synthetic observation corpora used across the test suite.

Run as a script to regenerate the committed fixture file:

    python3 tests/corpusgen.py
"""

from __future__ import annotations

import random
from pathlib import Path

from tempo.clock import from_iso
from tempo.ingest import Frame, Observation, write_corpus
from tempo.pipeline.records import QUESTION_IDS, UserContextDoc

FIXTURE_PATH = Path(__file__).parent / "fixtures" / "corpus_40.jsonl"

MINUTE = 60_000
HOUR = 3_600_000

# Two themed bullets per observation; bullets carry the vocabulary the mock
# provider clusters on, plus app hints for tool-kind inference.
BULLETS = {
    "heritage": [
        "browsing YouTube search results for classical music from Kathmandu",
        "watching a Nepali folk concert video on YouTube",
        "reviewing a DoorDash order for momo dumplings",
        "reading home-country election coverage in Chrome",
        "scrolling a Kathmandu news site in Chrome",
        "queueing a Nepali folk playlist on YouTube",
    ],
    "family": [
        "messaging mom on iMessage about her clinic checkup",
        "searching Google for family health monitoring services",
        "comparing eldercare sensor reviews in Chrome",
        "reading about blood pressure monitors for parents",
        "taking notes in Docs about dad's medication plan",
        "messaging dad on iMessage about the family health monitor setup",
    ],
    "research": [
        "editing the study protocol draft in Google Docs",
        "reading related work on attention and multitasking",
        "running the analysis notebook in Jupyter",
        "revising the paper draft introduction in Overleaf",
        "messaging advisor on Slack about the experiment design",
        "plotting a results figure in the notebook",
    ],
    "admin": [
        "filling out the IRB amendment form in Chrome",
        "submitting an expense reimbursement for conference travel",
        "scheduling a lab meeting on Google Calendar",
        "completing the annual compliance training module",
    ],
    "football": [
        "messaging a friend about a football game on iMessage",
        "searching for Gareth Bale retirement on Google",
        "reading a biography of Gareth Bale on Wikipedia",
        "checking la liga transfer rumor threads in Chrome",
    ],
}

APP_HINTS = (
    ("imessage", "iMessage"), ("slack", "Slack"), ("calendar", "Calendar"),
    ("docs", "Google Docs"), ("overleaf", "Overleaf"), ("jupyter", "Jupyter"),
    ("notebook", "Jupyter"), ("youtube", "YouTube"), ("doordash", "Chrome"),
    ("wikipedia", "Chrome"), ("google", "Chrome"),
)


def _app_for(bullet: str) -> str:
    lowered = bullet.lower()
    for needle, app in APP_HINTS:
        if needle in lowered:
            return app
    return "Chrome"


class _Builder:
    def __init__(self):
        self.observations: list[Observation] = []
        self._cursors = {theme: 0 for theme in BULLETS}
        self._counter = 0

    def _next_bullets(self, theme: str, count: int = 2) -> list[str]:
        pool = BULLETS[theme]
        out = []
        for _ in range(count):
            out.append(pool[self._cursors[theme] % len(pool)])
            self._cursors[theme] += 1
        return out

    def themed(self, theme: str, start_ms: int) -> Observation:
        self._counter += 1
        bullets = self._next_bullets(theme)
        frames = [
            Frame(id=f"obs-{self._counter:03d}-f{j}", captured_at=start_ms + j * 7_000,
                  source_app=_app_for(bullet), ocr_text=bullet)
            for j, bullet in enumerate(bullets)
        ]
        transcription = "# Screen transcription\n" + "\n".join(f"- {b}" for b in bullets)
        return Observation(id=f"obs-{self._counter:03d}", frames=frames,
                           transcription=transcription,
                           summary="- themed activity on screen")

    def idle(self, start_ms: int) -> Observation:
        self._counter += 1
        frames = [Frame(id=f"obs-{self._counter:03d}-f0", captured_at=start_ms,
                        source_app="Finder", ocr_text="")]
        return Observation(id=f"obs-{self._counter:03d}", frames=frames,
                           transcription="# Screen transcription\n(screen dimmed, no activity)",
                           summary="- idle screen")

    def session(self, start_ms: int, themes: list[str], spacing_ms: int = 90_000) -> None:
        for i, theme in enumerate(themes):
            at = start_ms + i * spacing_ms
            self.observations.append(self.idle(at) if theme == "idle" else self.themed(theme, at))


def build_fixture_corpus() -> list[Observation]:
    """40 observations over two simulated days, themed in contiguous runs."""
    builder = _Builder()
    day1 = from_iso("2026-03-02T09:00:00Z")
    day2 = day1 + 24 * HOUR
    # session A: exactly one full batch (10 obs x 2 ops)
    builder.session(day1, ["heritage"] * 3 + ["family"] * 2 + ["research"] * 3 + ["admin", "football"])
    # session B: second full batch; activities recur and stabilize
    builder.session(day1 + 2 * HOUR, ["heritage"] * 2 + ["family"] * 2 + ["research"] * 4 + ["admin", "football"])
    # session C: partial batch drained by inactivity
    builder.session(day1 + 5 * HOUR, ["research"] * 4 + ["admin"] * 2 + ["heritage", "football"])
    # session D: short evening session
    builder.session(day1 + 11 * HOUR, ["heritage", "heritage", "family", "family"])
    # session E (next morning): includes an idle observation
    builder.session(day2, ["research"] * 3 + ["admin", "family", "idle"])
    # session F: trailing pair drained by the end-of-stream flush
    builder.session(day2 + 3 * HOUR, ["heritage", "idle"])
    assert len(builder.observations) == 40
    return builder.observations


def build_quiet_corpus() -> list[Observation]:
    """One morning batch, then 25 quiet hours: the ceiling must fire exactly once."""
    builder = _Builder()
    start = from_iso("2026-03-02T08:00:00Z")
    builder.session(start, ["research"] * 4 + ["admin"] * 2)
    builder.session(start + 25 * HOUR, ["idle"])
    return builder.observations


def luhn_checksum_digit(body: str) -> str:
    for check in "0123456789":
        digits = body + check
        total = 0
        for i, ch in enumerate(reversed(digits)):
            d = int(ch)
            if i % 2 == 1:
                d = d * 2 - 9 if d * 2 > 9 else d * 2
            total += d
        if total % 10 == 0:
            return check
    raise AssertionError("unreachable")


def build_privacy_corpus() -> tuple[list[Observation], set[str], set[str]]:
    """30 frames: 10 PII-bearing (cards, keys, MRNs), 20 clean.

    Returns (observations, pii_frame_ids, clean_frame_ids).
    """
    rng = random.Random(42)
    pii_texts = []
    for prefix in ("4539", "4916", "5273", "6011"):
        body = prefix + "".join(str(rng.randrange(10)) for _ in range(11))
        pii_texts.append(f"checkout page shows card {body + luhn_checksum_digit(body)}")
    for _ in range(3):
        token = "".join(rng.choice("abcdefghijklmnopqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ0123456789")
                        for _ in range(32))
        pii_texts.append(f"terminal shows export API_TOKEN=sk-{token}")
    for _ in range(3):
        pii_texts.append(f"patient portal shows MRN: {rng.randrange(10**7, 10**8)}")

    clean_texts = [
        "weekly standup notes in Docs",
        "reading related work on attention",
        "editing the study protocol draft",
        "messaging a friend about a football game on iMessage",
        "browsing YouTube search results for classical music",
        "scheduling a lab meeting on Google Calendar",
        "reviewing a DoorDash order for momo dumplings",
        "reading about blood pressure monitors for parents",
        "plotting a results figure in the notebook",
        "checking la liga transfer rumor threads in Chrome",
    ] * 2

    start = from_iso("2026-03-02T10:00:00Z")
    observations = []
    pii_ids, clean_ids = set(), set()
    for i in range(10):
        frames = []
        base = start + i * 2 * MINUTE
        pii_frame = Frame(id=f"pobs-{i}-pii", captured_at=base, source_app="Chrome",
                          ocr_text=pii_texts[i])
        frames.append(pii_frame)
        pii_ids.add(pii_frame.id)
        for j in range(2):
            frame = Frame(id=f"pobs-{i}-c{j}", captured_at=base + (j + 1) * 7_000,
                          source_app="Chrome", ocr_text=clean_texts[i * 2 + j])
            frames.append(frame)
            clean_ids.add(frame.id)
        observations.append(Observation(id=f"pobs-{i}", frames=frames))
    return observations, pii_ids, clean_ids


def fixture_context() -> UserContextDoc:
    answers = {qid: "" for qid in QUESTION_IDS}
    answers["q1"] = "PhD student living far from home; oldest sibling in the family"
    answers["q3"] = "my research project, plus looking after my parents from a distance"
    answers["q4"] = "feeling homesick, and paper deadlines piling up"
    answers["q7"] = "staying close to family despite the distance"
    return UserContextDoc(answers=answers)


if __name__ == "__main__":
    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(FIXTURE_PATH, build_fixture_corpus())
    print(f"wrote {FIXTURE_PATH}")
