"""mexgen: deterministic simulator and session service for the magical
forest experience (treadmill recentering, walk-in-place locomotion,
ash throwing, tree blooming, 10 Hz experience database, replay)."""

from .types import (
    InputFrame,
    SimError,
    Vec3,
    WorldConfig,
)
from .world import ScenarioSpec, SimConfig, World, load_scenario, parse_scenario, world_init

__all__ = [
    "InputFrame",
    "ScenarioSpec",
    "SimConfig",
    "SimError",
    "Vec3",
    "World",
    "WorldConfig",
    "load_scenario",
    "parse_scenario",
    "world_init",
]

__version__ = "0.1.0"
