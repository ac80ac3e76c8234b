from .core import ModelGateway
from .providers import (
    FileRulebook,
    MockProvider,
    ProviderBinding,
    RemoteProvider,
    builtin_rulebook,
    register_rulebook,
    resolve_rulebook,
)
from .schemas import validate_response
from .templates import TEMPLATES, render, template_body

__all__ = [
    "FileRulebook", "MockProvider", "ModelGateway", "ProviderBinding", "RemoteProvider",
    "TEMPLATES", "builtin_rulebook", "register_rulebook", "render", "resolve_rulebook",
    "template_body", "validate_response",
]
