"""Scripted scenario builders: ten tabletop setups plus the real-task analog."""

from __future__ import annotations

from ..registry import Registry, default_registry
from .objects import POLYGON_COUNTS, Container, ObjectInstance, SceneError
from .scene import Scene

# Deterministic base layout: objects fill a grid at the near edge,
# containers line up along the far edge. Poses get a +-1 cm seed jitter.
_OBJECT_ROWS = (0.08, 0.19, 0.30)
_OBJECT_COLS = (0.08, 0.20, 0.32, 0.44, 0.56, 0.68)
_CONTAINER_Y = 0.48
_CONTAINER_XS = (0.14, 0.40, 0.66)
_JITTER_M = 0.01


def _instantiate(label: str, spec: dict, registry: Registry, object_id: str) -> ObjectInstance:
    letter = spec.get("letter")
    corner = side = 0
    symmetric = False
    shape = spec["shape"]
    if shape in POLYGON_COUNTS:
        corner = side = POLYGON_COUNTS[shape]
    elif shape == "cube":
        corner, side = 8, 6
    if letter is not None:
        glyph = registry.letters.get(letter, {})
        corner = side = int(glyph.get("corners", 0))
        symmetric = bool(glyph.get("symmetric", False))
    return ObjectInstance(
        id=object_id,
        label=label,
        category=spec["category"],
        color=spec["color"],
        shape=shape,
        letter=letter,
        symmetric=symmetric,
        corner_count=corner,
        side_count=side,
        footprint_radius=spec["radius"],
        height=spec["height"],
        x=0.0,
        y=0.0,
    )


def make_scene(scene_key: str, seed: int, registry: Registry | None = None) -> Scene:
    """Build any registry-defined scene (including the real-task analog)."""
    registry = registry or default_registry()
    roster = registry.scenarios.get(str(scene_key))
    if roster is None:
        raise SceneError(f"unknown scene {scene_key!r}")

    scene = Scene(
        objects={},
        containers={},
        bounds=registry.bounds,
        rng_seed=seed,
        scenario=str(scene_key),
    )

    labels_seen: dict[str, int] = {}
    for index, label in enumerate(roster.get("objects", [])):
        count = labels_seen.get(label, 0)
        labels_seen[label] = count + 1
        object_id = label if count == 0 else f"{label} #{count + 1}"
        obj = _instantiate(label, registry.object_catalog[label], registry, object_id)
        row, col = divmod(index, len(_OBJECT_COLS))
        base_x = _OBJECT_COLS[col]
        base_y = _OBJECT_ROWS[row % len(_OBJECT_ROWS)]
        jx = scene.rng.uniform(-_JITTER_M, _JITTER_M)
        jy = scene.rng.uniform(-_JITTER_M, _JITTER_M)
        obj.x, obj.y = scene.clamp(base_x + jx, base_y + jy)
        scene.objects[object_id] = obj

    for index, label in enumerate(roster.get("containers", [])):
        spec = registry.container_catalog[label]
        jx = scene.rng.uniform(-_JITTER_M, _JITTER_M)
        jy = scene.rng.uniform(-_JITTER_M, _JITTER_M)
        x, y = scene.clamp(_CONTAINER_XS[index % len(_CONTAINER_XS)] + jx, _CONTAINER_Y + jy)
        scene.containers[label] = Container(
            id=label,
            label=label,
            color=spec["color"],
            capacity=spec["capacity"],
            radius=spec["radius"],
            x=x,
            y=y,
        )

    return scene


def make_scenario(scenario_id: int, seed: int, registry: Registry | None = None) -> Scene:
    """Build one of the ten scripted tabletop scenarios, jittered by seed."""
    if not isinstance(scenario_id, int) or not 1 <= scenario_id <= 10:
        raise SceneError(f"scenario_id must be in 1..10, got {scenario_id!r}")
    return make_scene(str(scenario_id), seed, registry)
