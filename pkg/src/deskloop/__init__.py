"""deskloop: closed-loop tabletop manipulation agent with a deterministic simulator."""

__version__ = "0.1.0"

from .agent import Backends, EpisodeResult, LoopConfig, run_episode
from .registry import Registry, TaskSpec, default_registry, load_registry
from .sim import Scene, check_goal, make_scenario, make_scene

__all__ = [
    "Backends",
    "EpisodeResult",
    "LoopConfig",
    "Registry",
    "Scene",
    "TaskSpec",
    "check_goal",
    "default_registry",
    "load_registry",
    "make_scenario",
    "make_scene",
    "run_episode",
    "__version__",
]
