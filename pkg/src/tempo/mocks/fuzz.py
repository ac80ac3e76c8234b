"""Segmentation fuzzer: emits structurally broken segmentations on purpose.

Choices are hash-derived from (seed, inputs) so the rulebook stays a pure
function. Roughly three of five responses violate the partition rules
(overlap, gap, or missing coverage); the rest are valid, including after a
repair re-ask, whose note changes the fingerprint and re-rolls the die.
"""

from __future__ import annotations

import hashlib
import json
from typing import Mapping

from ..gateway.providers import register_rulebook
from .fixture import FixtureRulebook


def _roll(seed: int, *parts: str) -> int:
    digest = hashlib.sha256(("||".join([str(seed), *parts])).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


@register_rulebook("fuzz_segmentation")
def FuzzSegmentationRulebook(seed: int = 0):
    benign = FixtureRulebook()

    def _segment(inputs: Mapping[str, str]) -> dict:
        operations = json.loads(str(inputs["operations"]))
        n = len(operations)
        roll = _roll(seed, str(inputs["operations"]), str(inputs.get("repair_note", ""))) % 5

        def seg(start: int, end: int) -> dict:
            return {
                "start": start, "end": end,
                "label": f"fuzz action {start}-{end}",
                "reasoning": "fuzzed",
                "confidence": 5,
                "object_label": "fuzz",
                "outcome_type": "other", "domain": "other", "community": "none",
                "engagement_state": "fragmented", "cognitive_mode": "skill_based",
                "initiation": "self_initiated", "social_mode": "solo",
            }

        if n >= 3 and roll == 1:      # overlapping
            mid = n // 2 + 1
            return {"actions": [seg(1, mid), seg(mid, n)]}
        if n >= 4 and roll == 2:      # gapped
            mid = n // 2
            return {"actions": [seg(1, mid - 1), seg(mid + 1, n)]}
        if n >= 2 and roll == 3:      # non-covering
            return {"actions": [seg(1, n - 1)]}
        if roll == 4:                 # valid two-way split
            if n >= 2:
                mid = n // 2
                return {"actions": [seg(1, mid), seg(mid + 1, n)]}
            return {"actions": [seg(1, n)]}
        return {"actions": [seg(1, n)]}  # valid single segment

    def rulebook(template_id: str, inputs: Mapping[str, str]) -> dict:
        if template_id == "segment_actions":
            return _segment(inputs)
        return benign(template_id, inputs)

    return rulebook
