"""Core domain types shared across the simulator.

Axis convention: right-handed, z-up. x/y span the walking plane, z is height
above the forest floor. All units SI (meters, seconds, radians).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class SimError(Exception):
    """Base class for simulator errors."""


class ScenarioError(SimError):
    """Invalid scenario document (duplicate ids, bad values, unknown keys)."""


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def dist(self, other: "Vec3") -> float:
        return (self - other).norm()

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.fmod(yaw, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


@dataclass
class Tree:
    id: int
    position: Vec3            # trunk base, z = 0
    canopy_center: Vec3
    bloom_stage: float = 0.0  # 0 withered .. 1 full bloom, non-decreasing
    bloom_started_at: Optional[float] = None


class ProjectileState(Enum):
    IN_FLIGHT = "InFlight"
    DESPAWNED = "Despawned"


class DespawnCause(Enum):
    GROUND = "Ground"
    TREE = "Tree"
    TIMEOUT = "Timeout"


@dataclass
class Projectile:
    id: int
    position: Vec3
    velocity: Vec3
    spawned_at: float
    state: ProjectileState = ProjectileState.IN_FLIGHT
    despawned_at: Optional[float] = None
    despawn_cause: Optional[DespawnCause] = None
    hit_tree_id: Optional[int] = None


@dataclass
class ParticipantState:
    virtual_position: Vec3 = Vec3()          # forest frame, z = 0
    heading_yaw: float = 0.0                 # normalized to (-pi, pi]
    real_displacement: tuple[float, float] = (0.0, 0.0)  # offset from platform center


@dataclass
class ControllerState:
    position: Vec3 = Vec3()
    trigger_pressed: bool = False


class EventKind(Enum):
    GRAB = "Grab"
    THROW = "Throw"
    HIT = "Hit"
    BLOOM_STARTED = "BloomStarted"
    BLOOM_COMPLETED = "BloomCompleted"
    DESPAWN = "Despawn"
    # diagnostics beyond the core interaction lifecycle
    EDGE_CONTACT = "EdgeContact"
    INPUT_REJECTED = "InputRejected"
    STAGE_CLAMPED = "StageClamped"


@dataclass(frozen=True)
class SimEvent:
    time_s: float
    kind: EventKind
    object_id: Optional[int] = None
    tree_id: Optional[int] = None


@dataclass(frozen=True)
class WorldConfig:
    dt: float = 1.0 / 60.0
    gravity: float = 9.81            # m/s^2 along -z
    bloom_duration: float = 5.0      # seconds from contact to full bloom
    tree_contact_radius: float = 1.0
    scatter_radius: float = 2.0
    stage_count: int = 4
    projectile_timeout: float = 10.0

    def validate(self) -> None:
        if not (self.dt > 0):
            raise SimError("dt must be > 0")
        if self.gravity < 0:
            raise SimError("gravity must be >= 0")
        if not (self.bloom_duration > 0):
            raise SimError("bloom_duration must be > 0")
        if self.stage_count < 2:
            raise SimError("stage_count must be >= 2")


@dataclass
class WorldState:
    tick: int
    participant: ParticipantState
    controller: ControllerState
    trees: list[Tree]
    projectiles: list[Projectile]
    next_object_id: int = 0

    # integer tick is the clock's source of truth; time_s is derived
    def time_s(self, dt: float) -> float:
        return self.tick * dt


@dataclass(frozen=True)
class InputFrame:
    """One tick's worth of operator input (sample-and-hold upstream)."""
    mode: str = "direct"             # "direct" | "trackers"
    move_x: float = 0.0              # direct-mode locomotion, m/s
    move_y: float = 0.0
    yaw: float = 0.0                 # facing direction
    left_h: float = 0.0              # tracker foot heights, m
    right_h: float = 0.0
    ctrl: Vec3 = Vec3()              # controller position, forest frame
    trigger: bool = False

    def is_finite(self) -> bool:
        return (
            math.isfinite(self.move_x)
            and math.isfinite(self.move_y)
            and math.isfinite(self.yaw)
            and math.isfinite(self.left_h)
            and math.isfinite(self.right_h)
            and self.ctrl.is_finite()
        )


IDLE_INPUT = InputFrame()
