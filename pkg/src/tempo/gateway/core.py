"""The only boundary to language/vision models.

``complete`` renders a template, calls the bound provider, validates the
response against the template's schema, and re-asks with a repair note on
violations. Exhausted retries surface as a DeferralError so the pipeline
can requeue the inputs. Every request is recorded (template, inputs,
rendered prompt), which is how the prompt-payload hygiene properties are
checked.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from ..errors import DeferralError, SchemaError, TransportError
from .providers import ProviderBinding
from .schemas import validate_response
from .templates import render

logger = logging.getLogger(__name__)

REPAIR_SUFFIX = (
    "\n\nYour previous response failed validation: {error}\n"
    "Return only a valid JSON object matching the requested schema."
)


@dataclass
class GatewayRequest:
    template_id: str
    inputs: dict[str, str]
    rendered: str
    outcome: str = "ok"  # ok | schema_error | transport_error


class ModelGateway:
    def __init__(self, binding: ProviderBinding,
                 template_dir: Optional[str | Path] = None,
                 blank_placeholders: tuple[str, ...] = (),
                 max_retries: Optional[int] = None):
        self.binding = binding
        self._provider = binding.provider()
        self.template_dir = template_dir
        self.blank_placeholders = tuple(blank_placeholders)
        self.max_retries = binding.max_retries if max_retries is None else max_retries
        self.requests: list[GatewayRequest] = []

    def render(self, template_id: str, inputs: Mapping[str, str]) -> str:
        return render(template_id, inputs, template_dir=self.template_dir,
                      blank=self.blank_placeholders)

    def complete(self, template_id: str, inputs: Mapping[str, str],
                 extra_check: Optional[Callable[[dict], None]] = None) -> dict:
        """Render, ask, parse, validate; repair-retry on schema violations."""
        inputs = dict(inputs)
        repair_note = ""
        for attempt in range(self.max_retries + 1):
            rendered = self.render(template_id, {k: v for k, v in inputs.items() if k != "repair_note"})
            if repair_note:
                rendered += REPAIR_SUFFIX.format(error=repair_note)
            request = GatewayRequest(template_id=template_id, inputs=dict(inputs), rendered=rendered)
            self.requests.append(request)
            try:
                raw = self._provider.complete(template_id, inputs, rendered)
            except TransportError as exc:
                request.outcome = "transport_error"
                raise DeferralError(f"{template_id}: provider unavailable ({exc})", inputs=inputs) from exc
            try:
                record = self._parse(raw)
                validated = validate_response(template_id, record)
                if extra_check is not None:
                    extra_check(validated)
                return validated
            except SchemaError as exc:
                request.outcome = "schema_error"
                repair_note = str(exc)
                inputs["repair_note"] = repair_note
                logger.debug("%s attempt %d failed schema: %s", template_id, attempt + 1, exc)
        raise DeferralError(f"{template_id}: schema retries exhausted ({repair_note})", inputs=inputs)

    @staticmethod
    def _parse(raw: Any) -> dict:
        if isinstance(raw, dict):
            return raw
        if isinstance(raw, str):
            text = raw.strip()
            start = text.find("{")
            end = text.rfind("}")
            if start == -1 or end <= start:
                raise SchemaError("response contains no JSON object")
            try:
                return json.loads(text[start:end + 1])
            except json.JSONDecodeError as exc:
                raise SchemaError(f"response is not valid JSON: {exc}") from exc
        raise SchemaError(f"unexpected response type {type(raw).__name__}")
