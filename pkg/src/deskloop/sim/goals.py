"""Machine-checkable goal predicates for the task registry."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..registry import Registry, default_registry
from .objects import Container, ObjectInstance
from .scene import Scene


@dataclass
class GoalVerdict:
    satisfied: bool
    unmet: list[str] = field(default_factory=list)


def select_objects(scene: Scene, select: dict) -> list[ObjectInstance]:
    """Objects matched by a goal selector; empty selector matches everything."""
    matched = sorted(scene.objects.values(), key=lambda o: o.id)
    if "labels" in select:
        wanted = set(select["labels"])
        matched = [o for o in matched if o.label in wanted]
    if "category" in select:
        matched = [o for o in matched if o.category == select["category"]]
    if "symmetric" in select:
        matched = [o for o in matched if o.symmetric == bool(select["symmetric"])]
    if "argmax" in select and matched:
        attribute = select["argmax"]
        best = max(getattr(o, attribute) for o in matched)
        matched = [o for o in matched if getattr(o, attribute) == best]
    return matched


def container_by_label(scene: Scene, label: str) -> Container | None:
    for box in scene.containers.values():
        if box.label == label:
            return box
    return None


def containers_of_kind(scene: Scene, kind: str) -> list[Container]:
    return sorted(
        (c for c in scene.containers.values() if kind in c.label.split()),
        key=lambda c: c.id,
    )


def _order_key(obj: ObjectInstance, attribute: str):
    if attribute == "letter":
        return obj.letter or ""
    return getattr(obj, attribute)


def required_stack_order(
    scene: Scene, select: dict, order_by: str, direction: str
) -> list[ObjectInstance]:
    objs = select_objects(scene, select)
    reverse = direction == "descending"
    return sorted(objs, key=lambda o: (_order_key(o, order_by), o.id), reverse=reverse)


def _check_contains_all(scene: Scene, predicate: dict) -> list[str]:
    unmet: list[str] = []
    box = container_by_label(scene, predicate["container"])
    if box is None:
        return [f"container {predicate['container']!r} is not present"]
    excluded = set(predicate.get("exclude_labels", []))
    wanted = [o for o in select_objects(scene, predicate.get("select", {}))
              if o.label not in excluded]
    for obj in wanted:
        if obj.contained_in != box.id:
            unmet.append(f"{obj.label} is not in the {box.label}")
    for obj in sorted(scene.objects.values(), key=lambda o: o.id):
        if obj.label in excluded and obj.contained_in == box.id:
            unmet.append(f"{obj.label} must not be in the {box.label}")
    if predicate.get("only"):
        wanted_ids = {o.id for o in wanted}
        for oid in box.contents:
            if oid not in wanted_ids:
                unmet.append(
                    f"{scene.objects[oid].label} does not belong in the {box.label}"
                )
    return unmet


def _check_color_match(scene: Scene, predicate: dict, mismatch: bool) -> list[str]:
    unmet: list[str] = []
    bowls = containers_of_kind(scene, predicate["container_kind"])
    if not bowls:
        return [f"no {predicate['container_kind']} present"]
    for obj in select_objects(scene, predicate.get("select", {})):
        home = next((b for b in bowls if b.id == obj.contained_in), None)
        if home is None:
            unmet.append(f"{obj.label} is not in any {predicate['container_kind']}")
        elif mismatch and home.color == obj.color:
            unmet.append(f"{obj.label} is in a color-matching {home.label}")
        elif not mismatch and home.color != obj.color:
            unmet.append(f"{obj.label} is not in the {obj.color} {predicate['container_kind']}")
    return unmet


def _check_split_between(scene: Scene, predicate: dict) -> list[str]:
    unmet: list[str] = []
    boxes = [container_by_label(scene, label) for label in predicate["containers"]]
    if any(b is None for b in boxes):
        return ["a required container is not present"]
    allowed = {b.id for b in boxes}
    selected = select_objects(scene, predicate.get("select", {}))
    for obj in selected:
        if obj.contained_in not in allowed:
            unmet.append(f"{obj.label} is not in any of the designated containers")
    selected_ids = {o.id for o in selected}
    for box in boxes:
        if not any(oid in selected_ids for oid in box.contents):
            unmet.append(f"the {box.label} holds none of the items")
    return unmet


def _check_stack_order(scene: Scene, predicate: dict) -> list[str]:
    required = required_stack_order(
        scene,
        predicate.get("select", {}),
        predicate["order_by"],
        predicate["direction"],
    )
    if not required:
        return ["no objects match the selection"]
    unmet: list[str] = []
    base = required[0]
    if base.supported_by is not None or base.contained_in is not None:
        unmet.append(f"{base.label} must sit at the bottom, on the table")
    for lower, upper in zip(required, required[1:]):
        if upper.supported_by != lower.id:
            unmet.append(f"{upper.label} must rest on {lower.label}")
    return unmet


def _check_stack_in_container(scene: Scene, predicate: dict) -> list[str]:
    box = container_by_label(scene, predicate["container"])
    if box is None:
        return [f"container {predicate['container']!r} is not present"]
    selected = select_objects(scene, predicate.get("select", {}))
    if not selected:
        return ["no objects match the selection"]
    ids = {o.id for o in selected}
    bases = [o for o in selected if o.contained_in == box.id]
    if len(bases) != 1:
        return [f"exactly one stack base must stand in the {box.label}"]
    unmet: list[str] = []
    chain = {bases[0].id}
    current = bases[0].id
    while True:
        riders = [o for o in selected if o.supported_by == current]
        if not riders:
            break
        if len(riders) > 1:
            unmet.append("the stack splits into branches")
            break
        current = riders[0].id
        chain.add(current)
    for obj in selected:
        if obj.id not in chain:
            unmet.append(f"{obj.label} is not part of the stack")
    return unmet


_CHECKS = {
    "contains_all": _check_contains_all,
    "split_between": _check_split_between,
    "stack_order": _check_stack_order,
    "stack_in_container": _check_stack_in_container,
}


def check_goal(scene: Scene, task_id: str, registry: Registry | None = None) -> GoalVerdict:
    """Evaluate a task's goal conjunction over ground truth; pure in the scene."""
    registry = registry or default_registry()
    task = registry.task(task_id)
    unmet: list[str] = []
    for predicate in task.goal:
        kind = predicate["kind"]
        if kind == "color_match":
            unmet.extend(_check_color_match(scene, predicate, mismatch=False))
        elif kind == "color_mismatch":
            unmet.extend(_check_color_match(scene, predicate, mismatch=True))
        else:
            unmet.extend(_CHECKS[kind](scene, predicate))
    if scene.held is not None:
        unmet.append(f"{scene.objects[scene.held].label} is still in the gripper")
    return GoalVerdict(satisfied=not unmet, unmet=unmet)
