"""Trial runner, metrics and baseline/ablation configurations."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agent import Backends, LoopConfig, Plan, run_episode
from .backends import ModelBackend, TransportError, backend_from_uri, rule_convert_step
from .events import EventLog, EventSink, LogicalClock
from .kinematics import default_arm
from .perception import DetectorDegradation, OracleDetector, overhead_camera
from .prompts import load_profile
from .registry import Registry, TaskSpec, default_registry
from .sim.goals import check_goal
from .sim.scenarios import make_scene
from .skills import SkillExecutor

CONFIG_NAMES = ("full", "baseline", "no_planner", "no_evaluator")


@dataclass
class BenchConfig:
    """Resolved benchmark configuration; ablations differ only in loop flags."""

    config_id: str = "full"
    backend_uri: str = "mock://rule"
    loop: LoopConfig = field(default_factory=LoopConfig)
    fail_prob: float = 0.0
    degradation: DetectorDegradation = field(default_factory=DetectorDegradation)
    trials_per_task: int = 20
    seed_base: int = 0
    log_dir: str | Path | None = None

    def to_dict(self) -> dict:
        return {
            "config_id": self.config_id,
            "backend_uri": self.backend_uri,
            "loop": self.loop.to_dict(),
            "fail_prob": self.fail_prob,
            "degradation": {
                "miss_prob": self.degradation.miss_prob,
                "occlusion_mislabel_prob": self.degradation.occlusion_mislabel_prob,
                "box_jitter_px": self.degradation.box_jitter_px,
            },
            "trials_per_task": self.trials_per_task,
            "seed_base": self.seed_base,
        }


def named_config(name: str, **overrides) -> BenchConfig:
    """The full pipeline, the LLM+grounding baseline, and the two ablations."""
    loops = {
        "full": LoopConfig(),
        "baseline": LoopConfig(evaluator_enabled=False, planner_vision_enabled=False),
        "no_planner": LoopConfig(planner_enabled=False),
        "no_evaluator": LoopConfig(evaluator_enabled=False),
    }
    if name not in loops:
        raise ValueError(f"unknown config {name!r}; expected one of {CONFIG_NAMES}")
    return BenchConfig(config_id=name, loop=loops[name], **overrides)


@dataclass
class TrialRecord:
    task_id: str
    seed: int
    config_id: str
    attempts: int
    evaluator_success: bool
    ground_truth_success: bool
    partial_score: float
    planning_success: bool
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "seed": self.seed,
            "config_id": self.config_id,
            "attempts": self.attempts,
            "evaluator_success": self.evaluator_success,
            "ground_truth_success": self.ground_truth_success,
            "partial_score": self.partial_score,
            "planning_success": self.planning_success,
        }


def score_partial(ok_skill_count: int, ground_truth_satisfied: bool) -> float:
    """Ablation credit: 1 for goal reached, 0.25 for any executed action, else 0."""
    if ground_truth_satisfied:
        return 1.0
    if ok_skill_count >= 1:
        return 0.25
    return 0.0


def planning_success(
    plan: Plan, task: TaskSpec, scene, registry: Registry | None = None
) -> bool:
    """Judge a plan by executing it perfectly on a scene copy.

    Steps run through the rule converter and a zero-noise executor, so the
    measure isolates plan validity from actuation and grounding noise.
    """
    registry = registry or default_registry()
    if not plan.steps:
        return False
    sandbox = scene.clone()
    executor = SkillExecutor(
        sandbox,
        detector=OracleDetector(overhead_camera(registry)),
        camera=overhead_camera(registry),
        arm=default_arm(registry),
        fail_prob=0.0,
        registry=registry,
    )
    for step in plan.steps:
        call = rule_convert_step(step)
        if call is None:
            return False
        if call.is_done:
            break
        executor.execute(call)
    return check_goal(sandbox, task.task_id, registry).satisfied


def build_backend(config: BenchConfig, registry: Registry) -> ModelBackend:
    return backend_from_uri(config.backend_uri, registry)


def run_trial(
    task: TaskSpec,
    seed: int,
    config: BenchConfig,
    registry: Registry | None = None,
    backend: ModelBackend | None = None,
    sink: EventSink | None = None,
) -> TrialRecord:
    """One seeded episode; deterministic for mock backends."""
    registry = registry or default_registry()
    backend = backend or build_backend(config, registry)
    scene = make_scene(task.scene, seed, registry)

    degradation = replace(config.degradation, seed=seed)
    camera = overhead_camera(registry)
    executor = SkillExecutor(
        scene,
        detector=OracleDetector(camera, degradation),
        camera=camera,
        arm=default_arm(registry),
        fail_prob=config.fail_prob,
        registry=registry,
    )
    profile = load_profile("prompted" if task.prompted else "unprompted")

    if sink is None:
        log_path = None
        if config.log_dir is not None:
            log_path = Path(config.log_dir) / f"{config.config_id}-{task.task_id}-{seed}.jsonl"
        sink = EventSink(EventLog(path=log_path, clock=LogicalClock()))

    started = time.perf_counter()
    result = run_episode(
        Backends.shared(backend),
        executor,
        task,
        config.loop,
        profile,
        sink=sink,
        registry=registry,
    )
    elapsed = time.perf_counter() - started
    sink.log.close()

    ground_truth = bool(result.ground_truth and result.ground_truth.satisfied)
    plan_ok = False
    if result.plans:
        plan_ok = planning_success(
            result.plans[0], task, make_scene(task.scene, seed, registry), registry
        )
    return TrialRecord(
        task_id=task.task_id,
        seed=seed,
        config_id=config.config_id,
        attempts=result.attempts,
        evaluator_success=result.verdict.success,
        ground_truth_success=ground_truth,
        partial_score=score_partial(result.ok_skill_count, ground_truth),
        planning_success=plan_ok,
        wall_time_s=elapsed,
    )


def _rate(values: list[bool]) -> float:
    return sum(values) / len(values) if values else 0.0


@dataclass
class TaskResult:
    task: TaskSpec
    trials: list[TrialRecord]

    @property
    def success_rate(self) -> float:
        return _rate([t.ground_truth_success for t in self.trials])

    @property
    def evaluator_rate(self) -> float:
        return _rate([t.evaluator_success for t in self.trials])

    @property
    def planning_rate(self) -> float:
        return _rate([t.planning_success for t in self.trials])

    @property
    def partial_mean(self) -> float:
        scores = [t.partial_score for t in self.trials]
        return sum(scores) / len(scores) if scores else 0.0


@dataclass
class BenchmarkReport:
    """Per-task metrics for one or more configs over a shared task list."""

    task_ids: list[str]
    configs: list[str]
    config_meta: dict[str, dict]
    results: dict[str, dict[str, TaskResult]]  # config_id -> task_id -> result
    incomplete: bool = False

    def task_result(self, config_id: str, task_id: str) -> TaskResult:
        return self.results[config_id][task_id]

    def aggregate(self, config_id: str, prompted: bool, metric: str) -> float:
        """Arithmetic mean of the per-task rates in one split."""
        rates = [
            getattr(result, metric)
            for result in self.results[config_id].values()
            if result.task.prompted == prompted
        ]
        return sum(rates) / len(rates) if rates else 0.0

    def to_dict(self) -> dict:
        payload: dict = {
            "schema": "benchmark-report@1",
            "config_order": list(self.configs),
            "configs": {cid: self.config_meta[cid] for cid in self.configs},
            "incomplete": self.incomplete,
            "tasks": [],
            "aggregates": {},
        }
        for task_id in self.task_ids:
            any_result = self.results[self.configs[0]][task_id]
            row: dict = {
                "task_id": task_id,
                "scene": any_result.task.scene,
                "category": any_result.task.category,
                "prompted": any_result.task.prompted,
                "instruction": any_result.task.instruction,
                "metrics": {},
            }
            for config_id in self.configs:
                result = self.results[config_id][task_id]
                row["metrics"][config_id] = {
                    "planning_rate": round(result.planning_rate, 6),
                    "success_rate": round(result.success_rate, 6),
                    "evaluator_rate": round(result.evaluator_rate, 6),
                    "partial_mean": round(result.partial_mean, 6),
                    "trials": len(result.trials),
                }
            payload["tasks"].append(row)
        for config_id in self.configs:
            payload["aggregates"][config_id] = {
                split: {
                    metric: round(self.aggregate(config_id, split == "prompted", metric), 6)
                    for metric in ("planning_rate", "success_rate", "partial_mean")
                }
                for split in ("prompted", "unprompted")
            }
        return payload

    def records(self) -> list[TrialRecord]:
        out: list[TrialRecord] = []
        for config_id in self.configs:
            for task_id in self.task_ids:
                out.extend(self.results[config_id][task_id].trials)
        return out


def run_suite(
    config: BenchConfig,
    registry: Registry | None = None,
    tasks: list[str] | None = None,
) -> BenchmarkReport:
    """Run trials x tasks episodes and fold them into a report."""
    registry = registry or default_registry()
    task_ids = tasks or [t.task_id for t in registry.sim_tasks()]
    backend = build_backend(config, registry)

    results: dict[str, TaskResult] = {}
    incomplete = False
    for task_id in task_ids:
        task = registry.task(task_id)
        trials: list[TrialRecord] = []
        try:
            for index in range(config.trials_per_task):
                trials.append(
                    run_trial(task, config.seed_base + index, config, registry, backend)
                )
        except TransportError:
            incomplete = True
            results[task_id] = TaskResult(task=task, trials=trials)
            break
        results[task_id] = TaskResult(task=task, trials=trials)

    covered = [tid for tid in task_ids if tid in results]
    return BenchmarkReport(
        task_ids=covered,
        configs=[config.config_id],
        config_meta={config.config_id: config.to_dict()},
        results={config.config_id: results},
        incomplete=incomplete,
    )


def merge_reports(reports: list[BenchmarkReport]) -> BenchmarkReport:
    """Combine single-config reports over the same task list."""
    if not reports:
        raise ValueError("nothing to merge")
    base = reports[0]
    for other in reports[1:]:
        if other.task_ids != base.task_ids:
            raise ValueError("reports cover different task lists")
    configs: list[str] = []
    meta: dict[str, dict] = {}
    results: dict[str, dict[str, TaskResult]] = {}
    for report in reports:
        for config_id in report.configs:
            if config_id in results:
                raise ValueError(f"duplicate config {config_id!r}")
            configs.append(config_id)
            meta[config_id] = report.config_meta[config_id]
            results[config_id] = report.results[config_id]
    return BenchmarkReport(
        task_ids=list(base.task_ids),
        configs=configs,
        config_meta=meta,
        results=results,
        incomplete=any(r.incomplete for r in reports),
    )
