"""Scene state: object/container maps, relations, events, canonical JSON."""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field

from .objects import Container, ObjectInstance, SceneError, SimEvent

# Snapshot floats are quantized to micrometers so equal states serialize
# to equal bytes.
FLOAT_PRECISION = 6
SNAPSHOT_SCHEMA = "scene@1"


def _q(value: float) -> float:
    return round(float(value), FLOAT_PRECISION)


@dataclass
class Scene:
    """Ground-truth world state, exclusively owned by one session."""

    objects: dict[str, ObjectInstance]
    containers: dict[str, Container]
    bounds: tuple[float, float, float, float]  # x_min, x_max, y_min, y_max
    rng_seed: int
    scenario: str = ""
    rng: random.Random = field(repr=False, default=None)  # type: ignore[assignment]
    event_log: list[SimEvent] = field(default_factory=list)
    held: str | None = None
    tick: int = 0

    def __post_init__(self) -> None:
        if self.rng is None:
            self.rng = random.Random(f"scene:{self.scenario}:{self.rng_seed}")

    # -- queries ---------------------------------------------------------

    def object(self, object_id: str) -> ObjectInstance:
        try:
            return self.objects[object_id]
        except KeyError:
            raise SceneError(f"unknown object id {object_id!r}") from None

    def container(self, container_id: str) -> Container:
        try:
            return self.containers[container_id]
        except KeyError:
            raise SceneError(f"unknown container id {container_id!r}") from None

    def supporters_of(self, object_id: str) -> list[str]:
        """Ids of objects directly resting on ``object_id``."""
        return [o.id for o in self.objects.values() if o.supported_by == object_id]

    def is_graspable(self, object_id: str) -> bool:
        """True iff nothing rests on the object (containers are never objects)."""
        obj = self.object(object_id)
        if self.held == obj.id:
            return False
        return not self.supporters_of(object_id)

    def stack_above(self, object_id: str) -> list[str]:
        """Ids stacked on top of ``object_id``, bottom-to-top."""
        chain: list[str] = []
        frontier = self.supporters_of(object_id)
        while frontier:
            if len(frontier) > 1:  # should not happen; audit catches it
                frontier.sort()
            top = frontier[0]
            chain.append(top)
            frontier = self.supporters_of(top)
        return chain

    def stack_level(self, object_id: str) -> int:
        level = 0
        seen = {object_id}
        current = self.object(object_id)
        while current.supported_by is not None:
            if current.supported_by in seen:
                raise SceneError("support cycle detected")
            seen.add(current.supported_by)
            level += 1
            current = self.object(current.supported_by)
        return level

    def world_height(self, object_id: str) -> float:
        """Height of the object's centroid above the table plane."""
        obj = self.object(object_id)
        base = 0.0
        current = obj
        while current.supported_by is not None:
            current = self.object(current.supported_by)
            base += current.height
        return base + obj.height / 2.0

    def remaining_capacity(self, container_id: str) -> float:
        box = self.container(container_id)
        used = sum(self.objects[oid].footprint_area for oid in box.contents)
        return box.capacity - used

    def find_free_pose(self, radius: float, margin: float = 0.01) -> tuple[float, float]:
        """Deterministic table pose clear of every object and container."""
        x_min, x_max, y_min, y_max = self.bounds
        lo_x, hi_x = x_min + radius, x_max - radius
        lo_y, hi_y = y_min + radius, y_max - radius

        def clear(x: float, y: float) -> bool:
            for obj in self.objects.values():
                if obj.id == self.held or obj.contained_in is not None:
                    continue
                need = radius + obj.footprint_radius + margin
                if (obj.x - x) ** 2 + (obj.y - y) ** 2 < need**2:
                    return False
            for box in self.containers.values():
                need = radius + box.radius + margin
                if (box.x - x) ** 2 + (box.y - y) ** 2 < need**2:
                    return False
            return True

        for _ in range(200):
            x = self.rng.uniform(lo_x, hi_x)
            y = self.rng.uniform(lo_y, hi_y)
            if clear(x, y):
                return x, y
        # Dense fallback sweep; keeps the operation total on crowded tables.
        steps = 40
        for i in range(steps + 1):
            for j in range(steps + 1):
                x = lo_x + (hi_x - lo_x) * i / steps
                y = lo_y + (hi_y - lo_y) * j / steps
                if clear(x, y):
                    return x, y
        raise SceneError("no free table pose available")

    # -- mutation helpers --------------------------------------------------

    def emit(self, kind: str, subject: str, target: str) -> SimEvent:
        self.tick += 1
        event = SimEvent(kind=kind, subject=subject, target=target, tick=self.tick)
        self.event_log.append(event)
        return event

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        x_min, x_max, y_min, y_max = self.bounds
        return min(max(x, x_min), x_max), min(max(y, y_min), y_max)

    def clone(self) -> "Scene":
        """Deep copy including the RNG stream (for what-if simulation)."""
        return copy.deepcopy(self)

    # -- invariants --------------------------------------------------------

    def audit(self) -> list[str]:
        """Recompute every structural invariant; returns violations."""
        problems: list[str] = []
        x_min, x_max, y_min, y_max = self.bounds
        for obj in self.objects.values():
            if not (x_min <= obj.x <= x_max and y_min <= obj.y <= y_max):
                problems.append(f"{obj.id}: pose outside workspace")
            if obj.supported_by is not None and obj.contained_in is not None:
                problems.append(f"{obj.id}: both relations set")
            if obj.supported_by is not None and obj.supported_by not in self.objects:
                problems.append(f"{obj.id}: dangling supporter")
            if obj.contained_in is not None and obj.contained_in not in self.containers:
                problems.append(f"{obj.id}: dangling container")
            try:
                level = self.stack_level(obj.id)
            except SceneError:
                problems.append(f"{obj.id}: support cycle")
                continue
            if obj.z != level:
                problems.append(f"{obj.id}: z={obj.z} but stack level {level}")
        for box in self.containers.values():
            for oid in box.contents:
                if oid not in self.objects:
                    problems.append(f"{box.id}: dangling content {oid}")
                elif self.objects[oid].contained_in != box.id:
                    problems.append(f"{box.id}: content {oid} does not point back")
            if self.remaining_capacity(box.id) < -1e-12:
                problems.append(f"{box.id}: over capacity")
        for obj in self.objects.values():
            if obj.contained_in is not None:
                box = self.containers.get(obj.contained_in)
                if box is not None and obj.id not in box.contents:
                    problems.append(f"{obj.id}: missing from container contents")
        if self.held is not None and self.held not in self.objects:
            problems.append("held id unknown")
        return problems

    # -- serialization -----------------------------------------------------

    def to_snapshot(self, include_events: bool = False) -> dict:
        objects = {}
        for obj in sorted(self.objects.values(), key=lambda o: o.id):
            objects[obj.id] = {
                "label": obj.label,
                "category": obj.category,
                "color": obj.color,
                "shape": obj.shape,
                "corner_count": obj.corner_count,
                "side_count": obj.side_count,
                "letter": obj.letter,
                "symmetric": obj.symmetric,
                "footprint_radius": _q(obj.footprint_radius),
                "height": _q(obj.height),
                "x": _q(obj.x),
                "y": _q(obj.y),
                "z": obj.z,
                "supported_by": obj.supported_by,
                "contained_in": obj.contained_in,
                "graspable": self.is_graspable(obj.id),
            }
        containers = {}
        for box in sorted(self.containers.values(), key=lambda c: c.id):
            containers[box.id] = {
                "label": box.label,
                "color": box.color,
                "capacity": _q(box.capacity),
                "radius": _q(box.radius),
                "x": _q(box.x),
                "y": _q(box.y),
                "contents": list(box.contents),
            }
        snapshot = {
            "schema": SNAPSHOT_SCHEMA,
            "scenario": self.scenario,
            "rng_seed": self.rng_seed,
            "bounds": [_q(v) for v in self.bounds],
            "held": self.held,
            "tick": self.tick,
            "objects": objects,
            "containers": containers,
        }
        if include_events:
            snapshot["events"] = [e.to_dict() for e in self.event_log]
        return snapshot

    def to_canonical_json(self, include_events: bool = False) -> str:
        return json.dumps(
            self.to_snapshot(include_events=include_events),
            sort_keys=True,
            separators=(",", ":"),
        )


def scene_from_snapshot(snapshot: dict) -> Scene:
    """Rebuild scene state from a snapshot (RNG restarts from the seed)."""
    if snapshot.get("schema") != SNAPSHOT_SCHEMA:
        raise SceneError(f"unsupported snapshot schema {snapshot.get('schema')!r}")
    objects = {}
    for oid, data in snapshot["objects"].items():
        objects[oid] = ObjectInstance(
            id=oid,
            label=data["label"],
            category=data["category"],
            color=data["color"],
            shape=data["shape"],
            corner_count=data["corner_count"],
            side_count=data["side_count"],
            letter=data["letter"],
            symmetric=data["symmetric"],
            footprint_radius=data["footprint_radius"],
            height=data["height"],
            x=data["x"],
            y=data["y"],
            z=data["z"],
            supported_by=data["supported_by"],
            contained_in=data["contained_in"],
        )
    containers = {}
    for cid, data in snapshot["containers"].items():
        containers[cid] = Container(
            id=cid,
            label=data["label"],
            color=data["color"],
            capacity=data["capacity"],
            radius=data["radius"],
            x=data["x"],
            y=data["y"],
            contents=list(data["contents"]),
        )
    scene = Scene(
        objects=objects,
        containers=containers,
        bounds=tuple(snapshot["bounds"]),
        rng_seed=snapshot["rng_seed"],
        scenario=snapshot.get("scenario", ""),
        held=snapshot.get("held"),
        tick=snapshot.get("tick", 0),
    )
    for entry in snapshot.get("events", []):
        scene.event_log.append(SimEvent(**entry))
    return scene
