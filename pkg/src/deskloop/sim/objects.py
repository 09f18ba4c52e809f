"""Object, container and event types for the tabletop world model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CATEGORIES = frozenset(
    {"fruit", "snack", "daily_item", "tool", "block", "letter", "container"}
)
SHAPES = frozenset(
    {"cube", "triangle", "square", "pentagon", "hexagon", "letter", "irregular"}
)
COLORS = frozenset(
    {
        "red", "green", "blue", "yellow", "orange", "white", "black",
        "gray", "brown", "pink", "purple",
    }
)

# Corner/side counts implied by the regular polygon shapes.
POLYGON_COUNTS = {"triangle": 3, "square": 4, "pentagon": 5, "hexagon": 6}

EVENT_KINDS = frozenset(
    {"picked", "placed", "grasp_failed", "displaced", "rejected", "warning"}
)


class SceneError(Exception):
    """Invalid scene operation (unknown ids, violated preconditions)."""


@dataclass
class ObjectInstance:
    """A manipulable object on the table.

    Pose is planar; ``z`` is the integer stacking level (0 = table or
    container base). ``supported_by`` and ``contained_in`` are mutually
    exclusive relation slots.
    """

    id: str
    label: str
    category: str
    color: str
    shape: str
    footprint_radius: float
    height: float
    x: float
    y: float
    z: int = 0
    corner_count: int = 0
    side_count: int = 0
    letter: str | None = None
    symmetric: bool = False
    supported_by: str | None = None
    contained_in: str | None = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise SceneError(f"unknown category {self.category!r}")
        if self.shape not in SHAPES:
            raise SceneError(f"unknown shape {self.shape!r}")
        if self.color not in COLORS:
            raise SceneError(f"unknown color {self.color!r}")
        if self.footprint_radius <= 0 or self.height <= 0:
            raise SceneError(f"{self.id}: non-positive extent")
        if self.corner_count < 0 or self.side_count < 0:
            raise SceneError(f"{self.id}: negative corner/side count")
        expected = POLYGON_COUNTS.get(self.shape)
        if expected is not None and (
            self.corner_count != expected or self.side_count != expected
        ):
            raise SceneError(
                f"{self.id}: shape {self.shape} requires {expected} corners/sides"
            )
        if self.supported_by is not None and self.contained_in is not None:
            raise SceneError(f"{self.id}: supported_by and contained_in both set")

    @property
    def footprint_area(self) -> float:
        return math.pi * self.footprint_radius**2


@dataclass
class Container:
    """A receptacle; capacity bounds the summed footprint area of contents."""

    id: str
    label: str
    color: str
    capacity: float
    radius: float
    x: float
    y: float
    contents: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.color not in COLORS:
            raise SceneError(f"unknown color {self.color!r}")
        if self.capacity <= 0 or self.radius <= 0:
            raise SceneError(f"{self.id}: non-positive capacity or radius")


@dataclass(frozen=True)
class SimEvent:
    """One entry of the append-only simulation event log."""

    kind: str
    subject: str
    target: str
    tick: int

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise SceneError(f"unknown event kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "subject": self.subject,
            "target": self.target,
            "tick": self.tick,
        }
