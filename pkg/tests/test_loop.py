import pytest

from deskloop.agent import Backends, LoopConfig, run_episode
from deskloop.backends import RuleBackend, ScriptedBackend
from deskloop.events import EventSink
from deskloop.prompts import load_profile
from deskloop.sim import make_scene


def run_task(task_id, seed, make_executor, registry, config=None, backend=None, sink=None):
    task = registry.task(task_id)
    scene = make_scene(task.scene, seed, registry)
    executor = make_executor(scene)
    executor.fail_prob = getattr(config, "_fail_prob", 0.0) if config else 0.0
    profile = load_profile("prompted" if task.prompted else "unprompted")
    sink = sink or EventSink()
    result = run_episode(
        Backends.shared(backend or RuleBackend(registry)),
        executor,
        task,
        config or LoopConfig(),
        profile,
        sink=sink,
        registry=registry,
    )
    return result, sink, scene


def test_mock_episode_succeeds_first_attempt(make_executor, registry):
    result, _, _ = run_task("sim-07", 5, make_executor, registry)
    assert result.verdict.success
    assert result.ground_truth.satisfied
    assert result.attempts == 1


def test_forced_pick_failure_exhausts_attempts(make_executor, registry):
    task = registry.task("sim-07")
    scene = make_scene(task.scene, 5, registry)
    executor = make_executor(scene, fail_prob=1.0)
    result = run_episode(
        Backends.shared(RuleBackend(registry)),
        executor,
        task,
        LoopConfig(),
        load_profile("prompted"),
        registry=registry,
    )
    assert not result.verdict.success
    assert result.attempts == 3
    assert not result.ground_truth.satisfied


def test_evaluator_off_defaults_to_success_and_logs_discrepancy(make_executor, registry):
    task = registry.task("sim-07")
    scene = make_scene(task.scene, 5, registry)
    executor = make_executor(scene, fail_prob=1.0)
    backend = RuleBackend(registry)
    sink = EventSink()
    result = run_episode(
        Backends.shared(backend),
        executor,
        task,
        LoopConfig(evaluator_enabled=False),
        load_profile("prompted"),
        sink=sink,
        registry=registry,
    )
    assert result.verdict.success  # success-by-default
    assert not result.ground_truth.satisfied
    assert "evaluator" not in backend.calls  # configuration gate
    audits = [e for e in sink.events if e.kind == "error" and e.payload.get("stage") == "audit"]
    assert audits, "discrepancy between verdict and ground truth must be logged"
    assert result.attempts == 1


def test_steps_reach_executor_in_plan_order(make_executor, registry):
    task = registry.task("sim-05")
    scene = make_scene(task.scene, 5, registry)
    executor = make_executor(scene)
    seen = []
    original = executor.execute

    def recording(call):
        seen.append(call)
        return original(call)

    executor.execute = recording
    sink = EventSink()
    run_episode(
        Backends.shared(RuleBackend(registry)),
        executor,
        task,
        LoopConfig(),
        load_profile("prompted"),
        sink=sink,
        registry=registry,
    )
    plan_event = next(e for e in sink.events if e.kind == "plan")
    planned_steps = plan_event.payload["steps"]
    assert len(seen) == len(planned_steps)  # nothing skipped, done included
    for call, step in zip(seen, planned_steps):
        if call.is_done:
            assert step == "task complete"
        else:
            assert call.pick in step and call.place in step


def test_bounded_looping_with_pathological_backend(make_executor, registry):
    task = registry.task("sim-05")
    scene = make_scene(task.scene, 5, registry)
    executor = make_executor(scene)
    # Never produces a parseable plan: every attempt burns its retries.
    backend = ScriptedBackend(["nonsense"] * 50)
    result = run_episode(
        Backends.shared(backend),
        executor,
        task,
        LoopConfig(max_attempts=3, stage_retries=2),
        load_profile("prompted"),
        registry=registry,
    )
    assert result.attempts == 3
    assert len(backend.calls) == 9  # 3 attempts x (1 try + 2 retries), planner only
    assert not result.verdict.success


def test_failure_context_reaches_the_replanning_prompt(make_executor, registry):
    task = registry.task("sim-07")
    scene = make_scene(task.scene, 5, registry)
    executor = make_executor(scene)
    plan_text = "1. put the screwdriver on the box\n2. task complete"
    backend = ScriptedBackend(
        [plan_text, '```\nvlamove(pick="screwdriver", place="box")\n```', "```\ndone()\n```",
         "FAILURE",
         plan_text, '```\nvlamove(pick="screwdriver", place="box")\n```', "```\ndone()\n```",
         "SUCCESS"]
    )
    result = run_episode(
        Backends.shared(backend),
        executor,
        task,
        LoopConfig(),
        load_profile("prompted"),
        registry=registry,
    )
    assert result.attempts == 2
    replan_prompt = backend.calls[4][0].content
    assert "Previous attempt failed" in replan_prompt
    first_prompt = backend.calls[0][0].content
    assert "Previous attempt failed" not in first_prompt


def test_planner_disabled_splits_instruction(make_executor, registry):
    task = registry.task("real-02")  # "Put the stapler in the box"
    scene = make_scene(task.scene, 5, registry)
    executor = make_executor(scene)
    backend = RuleBackend(registry)
    result = run_episode(
        Backends.shared(backend),
        executor,
        task,
        LoopConfig(planner_enabled=False),
        load_profile("unprompted"),
        registry=registry,
    )
    assert "planner" not in backend.calls
    assert result.ground_truth.satisfied  # single-object task survives the split


def test_hermetic_episodes_replay_bit_identically(make_executor, registry):
    def transcript():
        result, sink, _ = run_task("sim-10", 77, make_executor, registry)
        return [(e.seq, e.kind, e.payload) for e in sink.events], result.verdict.outcome

    first, verdict_a = transcript()
    second, verdict_b = transcript()
    assert first == second and verdict_a == verdict_b


def test_empty_loop_config_bounds_rejected():
    with pytest.raises(ValueError):
        LoopConfig(max_attempts=0)
    with pytest.raises(ValueError):
        LoopConfig(stage_retries=-1)
