"""Parser for the closed skill-call mini-language emitted by the converter.

Grammar (whitespace-tolerant between tokens):

    call   := "vlamove" "(" "pick" "=" STRING "," "place" "=" STRING ")"
            | "done" "(" ")"
    STRING := double-quoted, no embedded quotes

Anything else is a syntax error carrying the offending position.
"""

from __future__ import annotations

from dataclasses import dataclass

VLAMOVE = "vlamove"
DONE = "done"


class SkillCallParseError(Exception):
    def __init__(self, message: str, position: int):
        super().__init__(f"at position {position}: {message}")
        self.message = message
        self.position = position


@dataclass(frozen=True)
class SkillCall:
    skill: str
    pick: str = ""
    place: str = ""

    def __post_init__(self) -> None:
        if self.skill == VLAMOVE:
            if not self.pick or not self.place:
                raise ValueError("vlamove requires non-empty pick and place queries")
        elif self.skill == DONE:
            if self.pick or self.place:
                raise ValueError("done takes no queries")
        else:
            raise ValueError(f"unknown skill {self.skill!r}")

    @property
    def is_done(self) -> bool:
        return self.skill == DONE


def format_skill_call(call: SkillCall) -> str:
    if call.is_done:
        return "done()"
    return f'vlamove(pick="{call.pick}", place="{call.place}")'


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def literal(self, token: str) -> None:
        self.skip_ws()
        end = self.pos + len(token)
        if self.text[self.pos : end] != token:
            raise SkillCallParseError(f"expected {token!r}", self.pos)
        self.pos = end

    def try_literal(self, token: str) -> bool:
        self.skip_ws()
        if self.text[self.pos : self.pos + len(token)] == token:
            self.pos += len(token)
            return True
        return False

    def string(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != '"':
            raise SkillCallParseError('expected \'"\' to open a string', self.pos)
        start = self.pos + 1
        end = self.text.find('"', start)
        if end == -1:
            raise SkillCallParseError("unterminated string", self.pos)
        value = self.text[start:end]
        if not value.strip():
            raise SkillCallParseError("empty string argument", self.pos)
        self.pos = end + 1
        return value

    def end(self) -> None:
        self.skip_ws()
        if self.pos != len(self.text):
            raise SkillCallParseError("unexpected trailing input", self.pos)


def parse_skill_call(text: str | bytes) -> SkillCall:
    """Parse exactly one skill call; total over arbitrary input."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    scanner = _Scanner(text)
    scanner.skip_ws()
    if scanner.try_literal(VLAMOVE):
        scanner.literal("(")
        scanner.literal("pick")
        scanner.literal("=")
        pick = scanner.string()
        scanner.literal(",")
        scanner.literal("place")
        scanner.literal("=")
        place = scanner.string()
        scanner.literal(")")
        scanner.end()
        return SkillCall(skill=VLAMOVE, pick=pick, place=place)
    if scanner.try_literal(DONE):
        scanner.literal("(")
        scanner.literal(")")
        scanner.end()
        return SkillCall(skill=DONE)
    raise SkillCallParseError("expected 'vlamove' or 'done'", scanner.pos)
