"""Deterministic 2.5D tabletop world model."""

from .actions import PickResult, PlaceResult, step_pick, step_place
from .goals import GoalVerdict, check_goal
from .objects import Container, ObjectInstance, SceneError, SimEvent
from .oracle import oracle_moves
from .scene import Scene, scene_from_snapshot
from .scenarios import make_scenario, make_scene

__all__ = [
    "Container",
    "GoalVerdict",
    "ObjectInstance",
    "PickResult",
    "PlaceResult",
    "Scene",
    "SceneError",
    "SimEvent",
    "check_goal",
    "make_scenario",
    "make_scene",
    "oracle_moves",
    "scene_from_snapshot",
    "step_pick",
    "step_place",
]
