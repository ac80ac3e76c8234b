"""Provider bindings: a remote HTTP bridge and the deterministic mock.

The mock rulebook is a pure function of (template id, rendered inputs), so
identical runs produce identical responses across process restarts. File
rulebooks map input fingerprints (substring matches on named placeholders)
to canned responses; programmatic rulebooks are registered by name and
selected the same way from the CLI.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from ..errors import TransportError, ValidationError

# Rulebook protocol: (template_id, inputs) -> response dict; raise LookupError when no rule fits.
Rulebook = Callable[[str, Mapping[str, str]], dict]

_BUILTIN_RULEBOOKS: dict[str, Callable[..., Rulebook]] = {}


def register_rulebook(name: str):
    def wrap(factory: Callable[..., Rulebook]):
        _BUILTIN_RULEBOOKS[name] = factory
        return factory
    return wrap


def builtin_rulebook(name: str, **kwargs) -> Rulebook:
    try:
        return _BUILTIN_RULEBOOKS[name](**kwargs)
    except KeyError:
        raise ValidationError(
            f"unknown mock rulebook {name!r}; available: {sorted(_BUILTIN_RULEBOOKS)}"
        ) from None


class FileRulebook:
    """Canned responses keyed by input fingerprints.

    File shape::

        {"version": 1,
         "rules": [{"template": "audit",
                    "match": {"observation": "bank"},
                    "response": {...}}],
         "fallback": "error" | "<builtin name>"}

    A rule fires when the template matches and every ``match`` entry is a
    substring of the corresponding input. First match wins.
    """

    def __init__(self, path: str | Path, seed: int = 0):
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read rulebook {path}: {exc}") from exc
        self.rules = doc.get("rules", [])
        fallback = doc.get("fallback", "error")
        self._fallback: Optional[Rulebook] = None
        if fallback != "error":
            self._fallback = builtin_rulebook(fallback, seed=seed)

    def __call__(self, template_id: str, inputs: Mapping[str, str]) -> dict:
        for rule in self.rules:
            if rule.get("template") not in (None, template_id):
                continue
            match = rule.get("match", {})
            if all(needle in str(inputs.get(key, "")) for key, needle in match.items()):
                return copy.deepcopy(rule["response"])
        if self._fallback is not None:
            return self._fallback(template_id, inputs)
        raise LookupError(f"no rule matches template {template_id!r}")


def resolve_rulebook(spec: str, seed: int = 0) -> Rulebook:
    """A path to a rulebook file, or the name of a registered builtin."""
    if Path(spec).exists():
        return FileRulebook(spec, seed=seed)
    return builtin_rulebook(spec, seed=seed)


@dataclass
class ProviderBinding:
    kind: str = "mock"  # "mock" | "remote"
    rulebook: Optional[Rulebook] = None
    endpoint: str = ""
    api_key_env: str = "TEMPO_API_KEY"
    model: str = ""
    timeout_s: float = 60.0
    max_retries: int = 2

    def provider(self) -> "Provider":
        if self.kind == "mock":
            if self.rulebook is None:
                raise ValidationError("mock binding needs a rulebook")
            return MockProvider(self.rulebook)
        if self.kind == "remote":
            return RemoteProvider(self.endpoint, self.api_key_env, self.model, self.timeout_s)
        raise ValidationError(f"unknown provider kind {self.kind!r}")


class Provider:
    def complete(self, template_id: str, inputs: Mapping[str, str], rendered_prompt: str) -> Any:
        raise NotImplementedError


class MockProvider(Provider):
    def __init__(self, rulebook: Rulebook):
        self._rulebook = rulebook

    def complete(self, template_id: str, inputs: Mapping[str, str], rendered_prompt: str) -> Any:
        try:
            return self._rulebook(template_id, inputs)
        except LookupError as exc:
            raise TransportError(str(exc)) from exc


class RemoteProvider(Provider):
    """Minimal JSON-over-HTTP bridge to a hosted model endpoint.

    Posts {"model", "template", "prompt"} and expects {"text": "..."} back;
    credentials come from the environment, never from config files.
    """

    def __init__(self, endpoint: str, api_key_env: str, model: str, timeout_s: float):
        if not endpoint:
            raise ValidationError("remote binding needs an endpoint URL")
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.model = model
        self.timeout_s = timeout_s

    def complete(self, template_id: str, inputs: Mapping[str, str], rendered_prompt: str) -> Any:
        import httpx

        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = httpx.post(
                self.endpoint,
                json={"model": self.model, "template": template_id, "prompt": rendered_prompt},
                headers=headers,
                timeout=self.timeout_s,
            )
            response.raise_for_status()
            return response.json()["text"]
        except Exception as exc:  # httpx errors, key errors, bad JSON
            raise TransportError(f"remote provider failed: {exc}") from exc
