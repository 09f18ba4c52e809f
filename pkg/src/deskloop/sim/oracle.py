"""Rule-based move planner: emits the pick/place moves that satisfy a task.

Given the current scene it produces one (pick label, place label) pair per
required move, ordered so every pick is graspable when its turn comes.
This is the hermetic stand-in for a model planner and the oracle behind
planning-success scoring.
"""

from __future__ import annotations

from ..registry import Registry, TaskSpec, default_registry
from .goals import (
    check_goal,
    container_by_label,
    containers_of_kind,
    required_stack_order,
    select_objects,
)
from .scene import Scene

TABLE = "table"

Move = tuple[str, str]  # (pick label, place label)


class _Mover:
    """Orders relocations so stacked blockers move out of the way first."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self.supported_by = {o.id: o.supported_by for o in scene.objects.values()}
        self.moves: list[Move] = []

    def _riders(self, object_id: str) -> list[str]:
        return sorted(r for r, s in self.supported_by.items() if s == object_id)

    def relocate(self, object_id: str, destination: str, pending: dict[str, str]) -> None:
        for rider in self._riders(object_id):
            rider_dest = pending.pop(rider, TABLE)
            self.relocate(rider, rider_dest, pending)
        self.supported_by[object_id] = None
        self.moves.append((self.scene.objects[object_id].label, destination))

    def run(self, assignments: dict[str, str]) -> list[Move]:
        pending = dict(assignments)
        while pending:
            object_id = min(pending)
            self.relocate(object_id, pending.pop(object_id), pending)
        return self.moves


def _container_moves(scene: Scene, predicate: dict) -> list[Move]:
    box = container_by_label(scene, predicate["container"])
    if box is None:
        return []
    excluded = set(predicate.get("exclude_labels", []))
    wanted = [o for o in select_objects(scene, predicate.get("select", {}))
              if o.label not in excluded]
    wanted_ids = {o.id for o in wanted}
    assignments: dict[str, str] = {}
    for obj in wanted:
        if obj.contained_in != box.id:
            assignments[obj.id] = box.label
    for oid in list(box.contents):
        obj = scene.objects[oid]
        evict = obj.label in excluded or (predicate.get("only") and oid not in wanted_ids)
        if evict:
            assignments[oid] = TABLE
    return _Mover(scene).run(assignments)


def _color_moves(scene: Scene, predicate: dict, mismatch: bool) -> list[Move]:
    bowls = containers_of_kind(scene, predicate["container_kind"])
    assignments: dict[str, str] = {}
    selected = select_objects(scene, predicate.get("select", {}))
    for index, obj in enumerate(selected):
        if mismatch:
            candidates = [b for b in bowls if b.color != obj.color]
            if not candidates:
                continue
            target = candidates[index % len(candidates)]
            already_ok = obj.contained_in in {b.id for b in candidates}
        else:
            target = next((b for b in bowls if b.color == obj.color), None)
            if target is None:
                continue
            already_ok = obj.contained_in == target.id
        if not already_ok:
            assignments[obj.id] = target.label
    return _Mover(scene).run(assignments)


def _split_moves(scene: Scene, predicate: dict) -> list[Move]:
    boxes = [container_by_label(scene, label) for label in predicate["containers"]]
    if any(b is None for b in boxes):
        return []
    allowed = {b.id for b in boxes}
    assignments: dict[str, str] = {}
    for index, obj in enumerate(select_objects(scene, predicate.get("select", {}))):
        if obj.contained_in not in allowed:
            assignments[obj.id] = boxes[index % len(boxes)].label
    return _Mover(scene).run(assignments)


def _stack_moves(scene: Scene, predicate: dict) -> list[Move]:
    required = required_stack_order(
        scene, predicate.get("select", {}), predicate["order_by"], predicate["direction"]
    )
    if not required:
        return []
    # Longest already-correct prefix, rooted on the table.
    prefix = 0
    if required[0].supported_by is None and required[0].contained_in is None:
        prefix = 1
        while (
            prefix < len(required)
            and required[prefix].supported_by == required[prefix - 1].id
        ):
            prefix += 1
    keep = {o.id for o in required[:prefix]}

    mover = _Mover(scene)
    assignments: dict[str, str] = {}
    for obj in required[prefix:]:
        in_relation = obj.supported_by is not None or obj.contained_in is not None
        if in_relation or mover._riders(obj.id):
            assignments[obj.id] = TABLE
    if prefix:
        for rider in scene.stack_above(required[prefix - 1].id):
            if rider not in keep:
                assignments.setdefault(rider, TABLE)
    dismantle = mover.run(assignments)

    build: list[Move] = []
    start = max(prefix, 1)
    for index in range(start, len(required)):
        build.append((required[index].label, required[index - 1].label))
    return dismantle + build


def _stack_in_container_moves(scene: Scene, predicate: dict) -> list[Move]:
    box = container_by_label(scene, predicate["container"])
    if box is None:
        return []
    selected = select_objects(scene, predicate.get("select", {}))
    if not selected:
        return []
    ids = {o.id for o in selected}

    # Reuse a valid partial stack rooted in the container, if any.
    bases = [o for o in selected if o.contained_in == box.id]
    chain: list[str] = []
    if len(bases) == 1:
        chain = [bases[0].id]
        while True:
            riders = [o for o in selected if o.supported_by == chain[-1]]
            if len(riders) != 1:
                if riders:
                    chain = []
                break
            chain.append(riders[0].id)

    mover = _Mover(scene)
    assignments: dict[str, str] = {}
    for obj in selected:
        if obj.id in chain:
            continue
        if obj.supported_by is not None or obj.contained_in is not None or mover._riders(obj.id):
            assignments[obj.id] = TABLE
    dismantle = mover.run(assignments)

    remaining = sorted(oid for oid in ids if oid not in chain)
    build: list[Move] = []
    top = chain[-1] if chain else None
    for oid in remaining:
        label = scene.objects[oid].label
        if top is None:
            build.append((label, box.label))
        else:
            build.append((label, scene.objects[top].label))
        top = oid
    return dismantle + build


def oracle_moves(scene: Scene, task: TaskSpec, registry: Registry | None = None) -> list[Move]:
    """Moves that satisfy the task from the current scene, in executable order."""
    registry = registry or default_registry()
    if check_goal(scene, task.task_id, registry).satisfied:
        return []
    moves: list[Move] = []
    for predicate in task.goal:
        kind = predicate["kind"]
        if kind == "contains_all":
            moves.extend(_container_moves(scene, predicate))
        elif kind == "color_match":
            moves.extend(_color_moves(scene, predicate, mismatch=False))
        elif kind == "color_mismatch":
            moves.extend(_color_moves(scene, predicate, mismatch=True))
        elif kind == "split_between":
            moves.extend(_split_moves(scene, predicate))
        elif kind == "stack_order":
            moves.extend(_stack_moves(scene, predicate))
        elif kind == "stack_in_container":
            moves.extend(_stack_in_container_moves(scene, predicate))
    return moves
