"""Loader for the scenario/task registry config file."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

TASK_CATEGORIES = frozenset(
    {"stacking", "blocks_bowls", "fruit_placement", "snack_daily", "tool_packing", "mixed"}
)

GOAL_KINDS = frozenset(
    {"contains_all", "color_match", "color_mismatch", "split_between",
     "stack_order", "stack_in_container"}
)


class RegistryError(Exception):
    """Malformed registry config."""


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    scene: str
    category: str
    prompted: bool
    instruction: str
    goal: tuple[dict, ...]
    goal_state: str


@dataclass
class Registry:
    workspace: dict[str, float]
    constants: dict[str, float]
    camera: dict[str, float]
    arm: dict
    letters: dict[str, dict]
    synonyms: dict[str, str]
    object_catalog: dict[str, dict]
    container_catalog: dict[str, dict]
    scenarios: dict[str, dict]
    tasks: dict[str, TaskSpec]
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        w = self.workspace
        return (w["x_min"], w["x_max"], w["y_min"], w["y_max"])

    def task(self, task_id: str) -> TaskSpec:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise RegistryError(f"unknown task id {task_id!r}") from None

    def task_by_instruction(self, instruction: str) -> TaskSpec | None:
        for task in self.tasks.values():
            if task.instruction == instruction:
                return task
        return None

    def task_by_goal_state(self, goal_state: str) -> TaskSpec | None:
        for task in self.tasks.values():
            if task.goal_state == goal_state:
                return task
        return None

    def sim_tasks(self) -> list[TaskSpec]:
        return [t for t in self.tasks.values() if t.task_id.startswith("sim-")]


def _validate(registry: Registry) -> None:
    for key in ("x_min", "x_max", "y_min", "y_max"):
        if key not in registry.workspace:
            raise RegistryError(f"workspace missing {key}")
    for name, roster in registry.scenarios.items():
        for label in roster.get("objects", []):
            if label not in registry.object_catalog:
                raise RegistryError(f"scenario {name}: unknown object {label!r}")
        for label in roster.get("containers", []):
            if label not in registry.container_catalog:
                raise RegistryError(f"scenario {name}: unknown container {label!r}")
    prompted = unprompted = 0
    for task in registry.tasks.values():
        if task.scene not in registry.scenarios:
            raise RegistryError(f"task {task.task_id}: unknown scene {task.scene!r}")
        if task.category not in TASK_CATEGORIES:
            raise RegistryError(f"task {task.task_id}: bad category {task.category!r}")
        if not task.goal:
            raise RegistryError(f"task {task.task_id}: no goal predicates")
        for predicate in task.goal:
            if predicate.get("kind") not in GOAL_KINDS:
                raise RegistryError(
                    f"task {task.task_id}: bad goal kind {predicate.get('kind')!r}"
                )
        if task.task_id.startswith("sim-"):
            prompted += task.prompted
            unprompted += not task.prompted
    if (prompted, unprompted) != (10, 10):
        raise RegistryError(
            f"sim tasks must split 10 prompted / 10 unprompted, got {prompted}/{unprompted}"
        )


def load_registry(path: str | Path | None = None) -> Registry:
    """Load and validate the registry; defaults to the packaged config."""
    if path is None:
        text = (resources.files("deskloop") / "data" / "registry.yaml").read_text()
        source = "packaged"
    else:
        text = Path(path).read_text()
        source = str(path)
    raw = yaml.safe_load(text)

    tasks: dict[str, TaskSpec] = {}
    for task_id, entry in raw["tasks"].items():
        tasks[task_id] = TaskSpec(
            task_id=task_id,
            scene=str(entry["scene"]),
            category=entry["category"],
            prompted=bool(entry["prompted"]),
            instruction=entry["instruction"],
            goal=tuple(entry["goal"]),
            goal_state=entry["goal_state"],
        )

    registry = Registry(
        workspace=raw["workspace"],
        constants=raw["constants"],
        camera=raw["camera"],
        arm=raw["arm"],
        letters=raw["letters"],
        synonyms=raw.get("synonyms", {}),
        object_catalog=raw["catalog"]["objects"],
        container_catalog=raw["catalog"]["containers"],
        scenarios={str(k): v for k, v in raw["scenarios"].items()},
        tasks=tasks,
        source=source,
        raw=raw,
    )
    _validate(registry)
    return registry


_default: Registry | None = None


def default_registry() -> Registry:
    """Cached packaged registry (read-only by convention)."""
    global _default
    if _default is None:
        _default = load_registry()
    return _default
