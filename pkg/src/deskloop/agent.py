"""Planner, converter and evaluator stages plus the bounded closed loop."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .backends import BackendError, ChatMessage, ModelBackend, TransportError, scene_attachment
from .dsl import SkillCall, SkillCallParseError, format_skill_call, parse_skill_call
from .events import EventSink
from .prompts import PromptProfile, render
from .registry import Registry, TaskSpec, default_registry
from .sim.goals import GoalVerdict, check_goal
from .skills import SkillExecutor, SkillOutcome

_NUMBERED_STEP = re.compile(r"^\s*\d+[.)]\s+(.+?)\s*$")
_FENCED_BLOCK = re.compile(r"```[a-zA-Z0-9_-]*\n?(.*?)```", re.DOTALL)
_FAILURE_CONTEXT_EVENTS = 10


class StageError(Exception):
    """A model-backed stage failed after its retries."""

    def __init__(self, stage: str, message: str, raw: str = ""):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.raw = raw


@dataclass
class LoopConfig:
    max_attempts: int = 3
    stage_retries: int = 2
    evaluator_enabled: bool = True
    planner_vision_enabled: bool = True
    planner_enabled: bool = True

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.stage_retries < 0:
            raise ValueError("stage_retries must be >= 0")

    def to_dict(self) -> dict:
        return {
            "max_attempts": self.max_attempts,
            "stage_retries": self.stage_retries,
            "evaluator_enabled": self.evaluator_enabled,
            "planner_vision_enabled": self.planner_vision_enabled,
            "planner_enabled": self.planner_enabled,
        }


@dataclass
class Plan:
    instruction: str
    steps: list[str]
    raw: str


@dataclass
class Verdict:
    outcome: str  # success | failure
    reason: str = ""
    raw: str = ""

    @property
    def success(self) -> bool:
        return self.outcome == "success"


def extract_steps(text: str) -> list[str]:
    """Numbered lines become plan steps; everything else is commentary."""
    return [m.group(1) for line in text.splitlines() if (m := _NUMBERED_STEP.match(line))]


def extract_code_block(text: str) -> str:
    match = _FENCED_BLOCK.search(text)
    return match.group(1).strip() if match else text.strip()


def extract_verdict_token(text: str) -> str | None:
    """The unambiguous-token rule: exactly one of SUCCESS/FAILURE present."""
    has_success = re.search(r"\bSUCCESS\b", text) is not None
    has_failure = re.search(r"\bFAILURE\b", text) is not None
    if has_success == has_failure:
        return None
    return "success" if has_success else "failure"


def scene_evidence_text(snapshot: dict) -> str:
    objects = [data["label"] for _, data in sorted(snapshot["objects"].items())]
    containers = [data["label"] for _, data in sorted(snapshot["containers"].items())]
    lines = ["Objects on the table: " + (", ".join(objects) if objects else "none")]
    if containers:
        lines.append("Containers: " + ", ".join(containers))
    return "\n".join(lines)


def plan(
    backend: ModelBackend,
    instruction: str,
    profile: PromptProfile,
    snapshot: dict | None = None,
    failure_context: str = "",
    retries: int = 2,
) -> Plan:
    """Invoke the planner stage and extract numbered steps."""
    if not instruction.strip():
        raise StageError("planner", "empty instruction")
    evidence = scene_evidence_text(snapshot) if snapshot is not None else ""
    prompt = render(
        profile.planner,
        instruction=instruction,
        examples=profile.examples,
        scene_evidence=evidence,
        failure_context=failure_context,
    )
    attachments = [scene_attachment(snapshot)] if snapshot is not None else []
    last_raw = ""
    for _ in range(retries + 1):
        raw = backend.complete([ChatMessage("user", prompt, attachments)])
        last_raw = raw
        steps = extract_steps(raw)
        if steps:
            return Plan(instruction=instruction, steps=steps, raw=raw)
    raise StageError("planner", "no parseable steps in the reply", raw=last_raw)


def convert(
    backend: ModelBackend,
    step: str,
    profile: PromptProfile,
    retries: int = 2,
) -> SkillCall:
    """Invoke the converter stage on one step and parse the skill call."""
    if not step.strip():
        raise StageError("converter", "empty step")
    prompt = render(profile.converter, step=step)
    last_raw = ""
    for _ in range(retries + 1):
        raw = backend.complete([ChatMessage("user", prompt)])
        last_raw = raw
        try:
            return parse_skill_call(extract_code_block(raw))
        except (SkillCallParseError, ValueError):
            continue
    raise StageError("converter", f"no parseable skill call for step {step!r}", raw=last_raw)


def evaluate(
    backend: ModelBackend,
    goal_state: str,
    snapshot: dict,
    profile: PromptProfile,
    retries: int = 2,
) -> Verdict:
    """Invoke the evaluator stage on the post-execution scene."""
    prompt = render(
        profile.evaluator,
        goal_state=goal_state,
        scene_evidence=scene_evidence_text(snapshot),
    )
    attachments = [scene_attachment(snapshot)]
    last_raw = ""
    for _ in range(retries + 1):
        raw = backend.complete([ChatMessage("user", prompt, attachments)])
        last_raw = raw
        token = extract_verdict_token(raw)
        if token is not None:
            reason = "" if token == "success" else "the scene does not match the goal state"
            return Verdict(outcome=token, reason=reason, raw=raw)
    raise StageError("evaluator", "ambiguous verdict", raw=last_raw)


def naive_step_split(instruction: str) -> list[str]:
    """Planner-off fallback: split the raw instruction into step fragments."""
    parts = re.split(r"\s+and\s+|;", instruction)
    return [part.strip() for part in parts if part.strip()]


def adhoc_task(instruction: str, scene_key: str) -> TaskSpec:
    """Wrap a free-form operator instruction as an unregistered task."""
    return TaskSpec(
        task_id="adhoc",
        scene=scene_key,
        category="mixed",
        prompted=False,
        instruction=instruction,
        goal=(),
        goal_state=instruction,
    )


@dataclass
class Backends:
    """The three stage backends; one model may serve all stages."""

    planner: ModelBackend
    converter: ModelBackend
    evaluator: ModelBackend

    @classmethod
    def shared(cls, backend: ModelBackend) -> "Backends":
        return cls(planner=backend, converter=backend, evaluator=backend)


@dataclass
class EpisodeResult:
    task_id: str
    attempts: int
    verdict: Verdict
    ground_truth: GoalVerdict | None
    skills: list[SkillOutcome] = field(default_factory=list)
    plans: list[Plan] = field(default_factory=list)

    @property
    def ok_skill_count(self) -> int:
        return sum(1 for outcome in self.skills if outcome.ok and not outcome.call.is_done)


def _failure_context(verdict_reason: str, sink: EventSink) -> str:
    lines = ["Previous attempt failed." + (f" Evaluator: {verdict_reason}" if verdict_reason else "")]
    recent = sink.events[-_FAILURE_CONTEXT_EVENTS:]
    if recent:
        lines.append("Recent events:")
        for event in recent:
            summary = event.payload.get("step") or event.payload.get("status") or event.payload.get("outcome") or ""
            lines.append(f"- {event.kind} {summary}".rstrip())
    return "\n".join(lines)


def _speech_for(outcome: SkillOutcome) -> str:
    call = outcome.call
    if call.is_done:
        return "No further action needed."
    if outcome.ok:
        return f"I moved the {call.pick} to the {call.place}."
    return f"I could not move the {call.pick} to the {call.place}: {outcome.reason or outcome.status}."


def run_episode(
    backends: Backends,
    executor: SkillExecutor,
    task: TaskSpec,
    config: LoopConfig,
    profile: PromptProfile,
    sink: EventSink | None = None,
    registry: Registry | None = None,
) -> EpisodeResult:
    """Run the closed loop: plan, convert+execute each step, evaluate, re-plan.

    Re-planning happens on a failure verdict (or a stage failure) while
    attempts remain; the planner prompt then carries a failure-context
    block. The ground-truth goal check is recorded independently of the
    evaluator's opinion.
    """
    registry = registry or default_registry()
    sink = sink or EventSink()
    scene = executor.scene

    sink.emit("instruction", {"task_id": task.task_id, "text": task.instruction})

    verdict = Verdict(outcome="failure", reason="no attempt completed")
    plans: list[Plan] = []
    outcomes: list[SkillOutcome] = []
    failure_context = ""
    attempts = 0

    for attempt in range(1, config.max_attempts + 1):
        attempts = attempt
        aborted = False

        if config.planner_enabled:
            snapshot = scene.to_snapshot() if config.planner_vision_enabled else None
            try:
                current_plan = plan(
                    backends.planner,
                    task.instruction,
                    profile,
                    snapshot=snapshot,
                    failure_context=failure_context,
                    retries=config.stage_retries,
                )
            except TransportError:
                raise  # environment failure, not a model mistake: abort the episode
            except (StageError, BackendError) as exc:
                sink.emit("error", {"attempt": attempt, "stage": "planner", "message": str(exc)})
                verdict = Verdict(outcome="failure", reason=str(exc))
                failure_context = _failure_context(str(exc), sink)
                continue
        else:
            steps = naive_step_split(task.instruction) + ["task complete"]
            current_plan = Plan(instruction=task.instruction, steps=steps, raw="(planner disabled)")

        plans.append(current_plan)
        sink.emit("plan", {"attempt": attempt, "steps": current_plan.steps, "raw": current_plan.raw})

        for index, step in enumerate(current_plan.steps):
            sink.emit("step_started", {"attempt": attempt, "index": index, "step": step})
            try:
                call = convert(backends.converter, step, profile, retries=config.stage_retries)
            except TransportError:
                raise
            except (StageError, BackendError) as exc:
                sink.emit(
                    "error",
                    {"attempt": attempt, "stage": "converter", "index": index, "message": str(exc)},
                )
                aborted = True
                break
            sink.emit(
                "skill_call",
                {"attempt": attempt, "index": index, "call": format_skill_call(call)},
            )
            outcome = executor.execute(call)
            outcomes.append(outcome)
            for sim_event in outcome.events:
                sink.emit("sim_event", sim_event.to_dict())
            sink.emit(
                "step_result",
                {
                    "attempt": attempt,
                    "index": index,
                    "step": step,
                    "status": outcome.status,
                    "reason": outcome.reason,
                    "trajectories": outcome.trajectories,
                },
            )
            sink.emit("speech_out", {"attempt": attempt, "index": index, "text": _speech_for(outcome)})
            if call.is_done:
                break

        sink.emit("scene_snapshot", {"attempt": attempt, "snapshot": scene.to_snapshot()})

        if aborted:
            verdict = Verdict(outcome="failure", reason="a stage failed; attempt aborted")
            sink.emit(
                "verdict",
                {"attempt": attempt, "outcome": verdict.outcome, "reason": verdict.reason, "source": "stage_failure"},
            )
            failure_context = _failure_context(verdict.reason, sink)
            continue

        if not config.evaluator_enabled:
            verdict = Verdict(outcome="success", reason="evaluator disabled")
            sink.emit(
                "verdict",
                {"attempt": attempt, "outcome": verdict.outcome, "reason": verdict.reason, "source": "default"},
            )
            break

        try:
            verdict = evaluate(
                backends.evaluator,
                task.goal_state,
                scene.to_snapshot(),
                profile,
                retries=config.stage_retries,
            )
        except TransportError:
            raise
        except (StageError, BackendError) as exc:
            sink.emit("error", {"attempt": attempt, "stage": "evaluator", "message": str(exc)})
            verdict = Verdict(outcome="failure", reason=str(exc))
            failure_context = _failure_context(str(exc), sink)
            continue

        sink.emit(
            "verdict",
            {"attempt": attempt, "outcome": verdict.outcome, "reason": verdict.reason, "source": "evaluator"},
        )
        if verdict.success:
            break
        failure_context = _failure_context(verdict.reason, sink)

    ground_truth = None
    if task.task_id in registry.tasks:
        ground_truth = check_goal(scene, task.task_id, registry)
        discrepancy = ground_truth.satisfied != verdict.success
        if discrepancy:
            sink.emit(
                "error",
                {
                    "stage": "audit",
                    "message": "evaluator verdict disagrees with ground truth",
                    "verdict": verdict.outcome,
                    "ground_truth": ground_truth.satisfied,
                },
            )

    final_text = (
        "Task complete."
        if verdict.success
        else f"I could not complete the task: {verdict.reason or 'unknown failure'}"
    )
    sink.emit("speech_out", {"text": final_text, "final": True})

    return EpisodeResult(
        task_id=task.task_id,
        attempts=attempts,
        verdict=verdict,
        ground_truth=ground_truth,
        skills=outcomes,
        plans=plans,
    )
