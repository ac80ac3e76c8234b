"""Prompt template registry and deterministic renderer.

Template bodies live as editable text files next to this module (or in an
override directory). Placeholders are ``{name}`` tokens; only names declared
for the template are substituted, so literal braces elsewhere in a body
(enum lists, JSON shape hints) pass through untouched. Optional placeholders
render as the empty string when unsupplied or when blanked by an ablation,
leaving their section headers in place.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

from ..errors import ValidationError


@dataclass(frozen=True)
class TemplateSpec:
    id: str
    required: tuple[str, ...]
    optional: tuple[str, ...] = ()

    @property
    def placeholders(self) -> tuple[str, ...]:
        return self.required + self.optional


TEMPLATES: dict[str, TemplateSpec] = {
    spec.id: spec
    for spec in (
        TemplateSpec("transcribe", required=("screenshots",), optional=("user_context",)),
        TemplateSpec("summarize", required=("screenshots",)),
        TemplateSpec("extract_operations", required=("observation_text",), optional=("user_context",)),
        TemplateSpec(
            "segment_actions",
            required=("operations",),
            optional=("recent_actions", "current_goals", "user_feedback", "user_context"),
        ),
        TemplateSpec(
            "propose_activities",
            required=("actions",),
            optional=(
                "user_name", "temporal_context", "prior_context", "concurrent_context",
                "user_stated_goals", "system_goals", "user_constraints", "user_context",
            ),
        ),
        TemplateSpec(
            "reconcile_activities",
            required=("candidates",),
            optional=("existing_activities", "user_constraints", "user_context"),
        ),
        TemplateSpec(
            "synthesize_strivings",
            required=("activities",),
            optional=("existing_goals", "user_constraints", "user_review_edits", "user_context"),
        ),
        TemplateSpec(
            "refine_strivings",
            required=("previous_output", "activities"),
            optional=("user_constraints", "user_review_edits", "user_context"),
        ),
        TemplateSpec("audit", required=("observation",), optional=("past_context",)),
        TemplateSpec("parse_edit", required=("text",), optional=("hierarchy",)),
    )
}


def template_body(template_id: str, template_dir: Optional[str | Path] = None) -> str:
    if template_id not in TEMPLATES:
        raise ValidationError(f"unknown template id {template_id!r}")
    if template_dir is not None:
        override = Path(template_dir) / f"{template_id}.txt"
        if override.exists():
            return override.read_text(encoding="utf-8")
    return resources.files(__package__).joinpath(f"templates/{template_id}.txt").read_text(encoding="utf-8")


def render(template_id: str, inputs: Mapping[str, str],
           template_dir: Optional[str | Path] = None,
           blank: Iterable[str] = ()) -> str:
    """Substitute declared placeholders; deterministic for identical inputs."""
    spec = TEMPLATES.get(template_id)
    if spec is None:
        raise ValidationError(f"unknown template id {template_id!r}")
    blank = set(blank)
    values: dict[str, str] = {}
    for name in spec.required:
        if name in blank:
            values[name] = ""
            continue
        if name not in inputs:
            raise ValidationError(f"template {template_id!r}: missing required placeholder {name!r}")
        values[name] = str(inputs[name])
    for name in spec.optional:
        values[name] = "" if name in blank else str(inputs.get(name, ""))
    unknown = set(inputs) - set(spec.placeholders) - {"repair_note"}
    if unknown:
        raise ValidationError(f"template {template_id!r}: unknown placeholders {sorted(unknown)}")

    body = template_body(template_id, template_dir)
    pattern = re.compile("|".join(r"\{" + re.escape(name) + r"\}" for name in spec.placeholders))
    return pattern.sub(lambda m: values[m.group(0)[1:-1]], body)
