"""Pick and place dynamics with stacking, containment and displacement rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .objects import SceneError, SimEvent
from .scene import Scene

DEFAULT_SUPPORT_RATIO = 0.8
DEFAULT_GRASP_JITTER_M = 0.02

PoseTarget = tuple[float, float]


@dataclass
class PickResult:
    status: str  # picked | rejected | grasp_failed
    events: list[SimEvent] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "picked"


@dataclass
class PlaceResult:
    status: str  # contained | stacked | on_table
    events: list[SimEvent] = field(default_factory=list)


def _relocate(scene: Scene, object_id: str, x: float, y: float) -> None:
    """Move an object and everything stacked on it to a new planar pose."""
    obj = scene.object(object_id)
    obj.x, obj.y = x, y
    for above in scene.stack_above(object_id):
        rider = scene.object(above)
        rider.x, rider.y = x, y


def step_pick(
    scene: Scene,
    object_id: str,
    fail_prob: float = 0.0,
    jitter_m: float = DEFAULT_GRASP_JITTER_M,
) -> PickResult:
    """Attempt to grasp an object.

    Non-graspable targets are rejected without touching the scene. A failed
    grasp (probability ``fail_prob``, drawn from the scene RNG) leaves the
    gripper empty and nudges the object by at most ``jitter_m``.
    """
    obj = scene.object(object_id)
    if scene.held is not None:
        raise SceneError(f"cannot pick {object_id!r}: {scene.held!r} already held")
    if not scene.is_graspable(object_id):
        event = scene.emit("rejected", object_id, "not graspable")
        return PickResult(status="rejected", events=[event])

    if fail_prob > 0 and scene.rng.random() < fail_prob:
        angle = scene.rng.uniform(0.0, 2.0 * math.pi)
        dist = scene.rng.uniform(0.0, jitter_m)
        x, y = scene.clamp(obj.x + dist * math.cos(angle), obj.y + dist * math.sin(angle))
        _relocate(scene, object_id, x, y)
        event = scene.emit("grasp_failed", object_id, "slipped")
        return PickResult(status="grasp_failed", events=[event])

    if obj.contained_in is not None:
        scene.container(obj.contained_in).contents.remove(object_id)
    obj.supported_by = None
    obj.contained_in = None
    obj.z = 0
    scene.held = object_id
    event = scene.emit("picked", object_id, object_id)
    return PickResult(status="picked", events=[event])


def _place_on_table(scene: Scene, obj_id: str, x: float, y: float) -> SimEvent:
    obj = scene.object(obj_id)
    obj.supported_by = None
    obj.contained_in = None
    obj.z = 0
    obj.x, obj.y = x, y
    return scene.emit("placed", obj_id, "table")


def _place_into(scene: Scene, obj_id: str, container_id: str) -> list[SimEvent]:
    """Insert into a container, displacing smallest occupants if it is full."""
    events: list[SimEvent] = []
    obj = scene.object(obj_id)
    box = scene.container(container_id)
    while (
        scene.remaining_capacity(container_id) < obj.footprint_area and box.contents
    ):
        occupant_id = min(
            box.contents,
            key=lambda oid: (scene.objects[oid].footprint_area, oid),
        )
        occupant = scene.object(occupant_id)
        box.contents.remove(occupant_id)
        occupant.contained_in = None
        x, y = scene.find_free_pose(occupant.footprint_radius)
        _relocate(scene, occupant_id, x, y)
        events.append(scene.emit("displaced", occupant_id, "table"))
    if scene.remaining_capacity(container_id) < obj.footprint_area:
        # Object alone exceeds capacity: it ends up beside the container.
        x, y = scene.find_free_pose(obj.footprint_radius)
        events.append(_place_on_table(scene, obj_id, x, y))
        return events
    obj.contained_in = container_id
    obj.supported_by = None
    obj.z = 0
    obj.x, obj.y = box.x, box.y
    box.contents.append(obj_id)
    events.append(scene.emit("placed", obj_id, container_id))
    return events


def _place_onto(
    scene: Scene, obj_id: str, target_id: str, support_ratio: float
) -> list[SimEvent]:
    """Stack onto an object (or the top of its stack), ratio permitting."""
    obj = scene.object(obj_id)
    above = scene.stack_above(target_id)
    top = scene.object(above[-1]) if above else scene.object(target_id)
    if top.footprint_radius < obj.footprint_radius * support_ratio:
        x, y = scene.find_free_pose(obj.footprint_radius)
        return [_place_on_table(scene, obj_id, x, y)]
    obj.supported_by = top.id
    obj.contained_in = None
    obj.z = top.z + 1
    obj.x, obj.y = top.x, top.y
    return [scene.emit("placed", obj_id, top.id)]


def step_place(
    scene: Scene,
    target: str | PoseTarget,
    support_ratio: float = DEFAULT_SUPPORT_RATIO,
) -> PlaceResult:
    """Release the held object at a container, object, or planar pose."""
    if scene.held is None:
        raise SceneError("no object held")
    held_id = scene.held

    if isinstance(target, tuple):
        x, y = scene.clamp(*target)
        events = [_place_on_table(scene, held_id, x, y)]
        status = "on_table"
    elif target in scene.containers:
        events = _place_into(scene, held_id, target)
        status = "contained" if events[-1].target == target else "on_table"
    elif target in scene.objects:
        if target == held_id:
            raise SceneError("cannot place an object onto itself")
        events = _place_onto(scene, held_id, target, support_ratio)
        status = "stacked" if events[-1].target != "table" else "on_table"
    else:
        raise SceneError(f"unknown place target {target!r}")

    scene.held = None
    return PlaceResult(status=status, events=events)
