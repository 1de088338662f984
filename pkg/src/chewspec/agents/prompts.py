"""Prompt templates shipped under ``chewspec/prompts``.

Placeholders are ``$name`` in string.Template syntax.
"""

import re
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Dict, List

PROMPT_VERSION = 1
PROMPT_PACKAGE = "chewspec.prompts"

# Each template opens with an HTML comment describing it; it is not sent.
_HEADER = re.compile(r"\A\s*<!--.*?-->\s*", re.DOTALL)


@lru_cache(maxsize=None)
def load_prompt(template: str) -> Template:
    path = resources.files(PROMPT_PACKAGE).joinpath(f"{template}.md")
    text = path.read_text(encoding="utf-8")
    return Template(_HEADER.sub("", text, count=1))


def render_prompt(template: str, /, **values: object) -> str:
    text = load_prompt(template).substitute({k: str(v) for k, v in values.items()})
    return text.rstrip() + "\n"


def prompt_names() -> List[str]:
    return sorted(
        entry.name[:-3]
        for entry in resources.files(PROMPT_PACKAGE).iterdir()
        if entry.name.endswith(".md")
    )


def format_sources(sources: Dict[str, str]) -> str:
    return "\n\n".join(
        f"--- file {path}\n{text.rstrip()}" for path, text in sorted(sources.items())
    )
