"""Prompt template loading and rendering.

Templates live as text assets under ``templates/``. Each file is split into
``[system]`` / ``[user]`` sections and may contain ``{placeholder}`` tokens;
rendering is a single deterministic substitution pass and any token without
a binding is an error, never emitted literally.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

from .errors import PromptError
from .providers import ChatMessage

_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")
_SECTION = re.compile(r"^\[(system|user)\]\s*$", re.MULTILINE)


@lru_cache(maxsize=None)
def _load_template(template_id: str) -> list[tuple[str, str]]:
    ref = resources.files("agentkernel").joinpath(f"templates/{template_id}.txt")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise PromptError(f"unknown template: {template_id}") from None
    sections: list[tuple[str, str]] = []
    matches = list(_SECTION.finditer(text))
    if not matches:
        raise PromptError(f"template {template_id} has no [system]/[user] sections")
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        sections.append((m.group(1), text[m.end():end].strip()))
    return sections


def list_templates() -> list[str]:
    root = resources.files("agentkernel").joinpath("templates")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".txt"))


def render_prompt(template_id: str, bindings: dict[str, str]) -> list[ChatMessage]:
    """Render a template into chat messages, substituting every placeholder."""
    messages = []
    for role, body in _load_template(template_id):
        def substitute(match: re.Match) -> str:
            name = match.group(1)
            if name not in bindings:
                raise PromptError(f"unbound placeholder: {name}")
            return str(bindings[name])

        content = _PLACEHOLDER.sub(substitute, body)
        messages.append(ChatMessage(role=role, content=content))
    return messages
