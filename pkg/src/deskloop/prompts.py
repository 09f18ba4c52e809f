"""Prompt profiles: editable template files with named placeholders."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

PROFILE_NAMES = ("prompted", "unprompted")

_PLACEHOLDER = re.compile(r"\{(instruction|scene_evidence|examples|failure_context|goal_state|step)\}")


@dataclass(frozen=True)
class PromptProfile:
    """Planner/converter/evaluator templates plus profile-specific examples.

    The prompted and unprompted profiles share the template bodies and
    differ only in the few-shot examples block.
    """

    name: str
    planner: str
    converter: str
    evaluator: str
    examples: str


def _read_packaged(relative: str) -> str:
    return (resources.files("deskloop") / "data" / "prompts" / relative).read_text()


def load_profile(name: str, root: str | Path | None = None) -> PromptProfile:
    if name not in PROFILE_NAMES:
        raise ValueError(f"unknown prompt profile {name!r}; expected one of {PROFILE_NAMES}")
    if root is None:
        read = _read_packaged
    else:
        base = Path(root)

        def read(relative: str) -> str:
            return (base / relative).read_text()

    return PromptProfile(
        name=name,
        planner=read("planner.txt"),
        converter=read("converter.txt"),
        evaluator=read("evaluator.txt"),
        examples=read(f"examples/{name}.txt").strip(),
    )


def render(template: str, **fields: str) -> str:
    """Fill placeholders; unknown placeholders become empty, blanks collapse."""

    def fill(match: re.Match) -> str:
        return fields.get(match.group(1), "")

    text = _PLACEHOLDER.sub(fill, template)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip() + "\n"
