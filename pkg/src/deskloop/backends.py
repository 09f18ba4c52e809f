"""Model backends: chat-completion HTTP client plus hermetic mocks."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from urllib.parse import urlparse

import httpx

from .dsl import SkillCall, format_skill_call
from .registry import Registry, default_registry
from .sim.goals import check_goal
from .sim.oracle import oracle_moves
from .sim.scene import scene_from_snapshot

CHAT_SCHEMA = "chat@1"


class BackendError(Exception):
    """Any backend failure surfaced to the agent loop."""


class CapabilityError(BackendError):
    """Vision payload sent to a text-only backend; raised before any I/O."""


class TransportError(BackendError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


@dataclass
class ChatMessage:
    role: str
    content: str
    attachments: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        payload: dict = {"role": self.role, "content": self.content}
        if self.attachments:
            payload["attachments"] = self.attachments
        return payload


def scene_attachment(snapshot: dict) -> dict:
    return {"kind": "scene_snapshot", "data": snapshot}


class ModelBackend:
    """Base backend: capability flags plus the pre-I/O vision gate."""

    capabilities: frozenset = frozenset({"text"})

    def _gate(self, messages: list[ChatMessage]) -> None:
        if any(m.attachments for m in messages) and "vision" not in self.capabilities:
            raise CapabilityError("backend does not accept image attachments")

    def complete(self, messages: list[ChatMessage]) -> str:
        raise NotImplementedError


class HttpBackend(ModelBackend):
    """Client for a chat-completion style JSON endpoint."""

    def __init__(
        self,
        url: str,
        model: str = "default",
        timeout: float = 30.0,
        vision: bool = True,
        api_key: str | None = None,
        client: httpx.Client | None = None,
    ):
        self.url = url
        self.model = model
        self.timeout = timeout
        self.api_key = api_key
        self.capabilities = frozenset({"text", "vision"} if vision else {"text"})
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, messages: list[ChatMessage]) -> str:
        self._gate(messages)
        body = {
            "schema": CHAT_SCHEMA,
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
        }
        headers = {"authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            response = self._client.post(self.url, json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"backend transport failure: {exc}") from exc
        if response.status_code == 503:
            retry_after = response.headers.get("retry-after")
            raise TransportError(
                "backend unavailable",
                retry_after=float(retry_after) if retry_after else None,
            )
        if response.status_code != 200:
            raise TransportError(f"backend returned HTTP {response.status_code}")
        data = response.json()
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat response: {data!r}") from exc


class ScriptedBackend(ModelBackend):
    """Replays canned replies in order; handy for exercising failure paths."""

    capabilities = frozenset({"text", "vision"})

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.calls: list[list[ChatMessage]] = []

    def complete(self, messages: list[ChatMessage]) -> str:
        self._gate(messages)
        self.calls.append(messages)
        if not self.replies:
            raise BackendError("scripted backend exhausted")
        return self.replies.pop(0)


_STEP_PATTERN = re.compile(
    r"^(?:\d+[.)]\s*)?(?:put|place|move|store|stack|pack)\s+(?:the\s+)?(?:all\s+(?:the\s+)?)?(.+?)"
    r"\s+(?:on|onto|in|into)\s+(?:the\s+)?(.+?)\s*$",
    re.IGNORECASE,
)
_DONE_PATTERN = re.compile(r"^(?:\d+[.)]\s*)?(?:task\s+complete|done)\s*\.?\s*$", re.IGNORECASE)


def rule_convert_step(step: str) -> SkillCall | None:
    """Template rule mapping a plan step to a skill call; None if no rule fits."""
    text = step.strip()
    if _DONE_PATTERN.match(text):
        return SkillCall(skill="done")
    match = _STEP_PATTERN.match(text)
    if not match:
        return None
    pick, place = match.group(1).strip(), match.group(2).strip().rstrip(".")
    if not pick or not place:
        return None
    return SkillCall(skill="vlamove", pick=pick, place=place)


def _field_line(content: str, name: str) -> str | None:
    # Few-shot examples may repeat a field; the live one comes last.
    for line in reversed(content.splitlines()):
        if line.startswith(f"{name}:"):
            return line[len(name) + 1 :].strip()
    return None


def _latest_snapshot(messages: list[ChatMessage]) -> dict | None:
    for message in reversed(messages):
        for attachment in reversed(message.attachments):
            if attachment.get("kind") == "scene_snapshot":
                return attachment["data"]
    return None


class RuleBackend(ModelBackend):
    """Deterministic rule-based stand-in for the planner/converter/evaluator.

    It reads the same rendered prompts a live model would receive, infers the
    stage from the prompt fields, and answers from the attached scene
    snapshot (its "vision"). Entirely a function of its inputs, so episodes
    built on it replay bit-identically.
    """

    capabilities = frozenset({"text", "vision"})

    def __init__(self, registry: Registry | None = None):
        self.registry = registry or default_registry()
        self.calls: list[str] = []  # stage trace, useful in tests

    # -- stage handlers --------------------------------------------------

    def _plan(self, instruction: str, snapshot: dict | None) -> str:
        moves: list[tuple[str, str]] = []
        task = self.registry.task_by_instruction(instruction)
        if task is not None and snapshot is not None:
            scene = scene_from_snapshot(snapshot)
            moves = oracle_moves(scene, task, self.registry)
        else:
            # No scene context (or unknown instruction): fall back to a
            # literal reading of the instruction text.
            call = rule_convert_step(instruction)
            if call is not None and not call.is_done:
                moves = [(call.pick, call.place)]
        lines = [
            f"{index}. put the {pick} on the {place}"
            for index, (pick, place) in enumerate(moves, start=1)
        ]
        lines.append(f"{len(moves) + 1}. task complete")
        return "\n".join(lines)

    def _convert(self, step: str) -> str:
        call = rule_convert_step(step)
        if call is None:
            return f"# cannot convert: {step}"
        return f"```\n{format_skill_call(call)}\n```"

    def _evaluate(self, goal_state: str, snapshot: dict | None) -> str:
        if snapshot is None:
            return "FAILURE"
        scene = scene_from_snapshot(snapshot)
        task = self.registry.task_by_goal_state(goal_state)
        if task is not None:
            verdict = check_goal(scene, task.task_id, self.registry)
            return "SUCCESS" if verdict.satisfied else "FAILURE"
        # Unregistered goal text (ad-hoc operator instruction): accept a
        # literal "X ends up on/in Y" reading.
        call = rule_convert_step(goal_state)
        if call is None or call.is_done:
            return "FAILURE"
        matches = [o for o in scene.objects.values() if o.label == call.pick]
        if not matches:
            return "FAILURE"
        for obj in matches:
            target_ok = False
            if obj.contained_in is not None:
                target_ok = scene.containers[obj.contained_in].label == call.place
            elif obj.supported_by is not None:
                target_ok = scene.objects[obj.supported_by].label == call.place
            if not target_ok:
                return "FAILURE"
        return "SUCCESS"

    def complete(self, messages: list[ChatMessage]) -> str:
        self._gate(messages)
        content = messages[-1].content
        snapshot = _latest_snapshot(messages)
        step = _field_line(content, "Step")
        if step is not None:
            self.calls.append("converter")
            return self._convert(step)
        goal_state = _field_line(content, "Goal state")
        if goal_state is not None:
            self.calls.append("evaluator")
            return self._evaluate(goal_state, snapshot)
        instruction = _field_line(content, "Instruction")
        if instruction is not None:
            self.calls.append("planner")
            return self._plan(instruction, snapshot)
        raise BackendError("rule backend cannot infer the stage from the prompt")


def backend_from_uri(uri: str, registry: Registry | None = None) -> ModelBackend:
    """Instantiate a backend from a config URI (mock:// or http(s)://)."""
    parsed = urlparse(uri)
    if parsed.scheme == "mock":
        kind = parsed.netloc or parsed.path.lstrip("/")
        if kind == "rule":
            return RuleBackend(registry)
        raise BackendError(f"unknown mock backend {kind!r}")
    if parsed.scheme in ("http", "https"):
        return HttpBackend(uri)
    raise BackendError(f"unsupported backend URI {uri!r}")
