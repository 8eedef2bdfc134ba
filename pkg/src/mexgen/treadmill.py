"""Recentering controller and plant model for the torus treadmill.

The surface velocity command opposes the walker's displacement from the
platform center: proportional with a dead zone, saturated at the device's
0.6 m/s walking-speed limit, and acceleration-limited between ticks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .types import ParticipantState, SimError


@dataclass(frozen=True)
class TreadmillConfig:
    belt_count: int = 12
    v_max: float = 0.6               # device maximum surface speed, m/s
    surface_extent_x: float = 2.0
    surface_extent_y: float = 2.0
    dead_zone: float = 0.10
    gain: float = 3.0                # 1/s
    a_max: float = 2.0               # m/s^2 command slew limit

    def validate(self) -> None:
        if self.belt_count < 1:
            raise SimError("belt_count must be >= 1")
        if not (0 < self.dead_zone < min(self.surface_extent_x, self.surface_extent_y) / 2):
            raise SimError("dead_zone must lie inside the half-extent")
        if self.v_max <= 0 or self.gain <= 0 or self.a_max <= 0:
            raise SimError("v_max, gain and a_max must be > 0")


@dataclass(frozen=True)
class TreadmillCommand:
    vx: float = 0.0
    vy: float = 0.0

    def norm(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass
class PlatformState:
    displacement: tuple[float, float] = (0.0, 0.0)
    last_command: TreadmillCommand = TreadmillCommand()


def _clamp_norm(vx: float, vy: float, limit: float) -> tuple[float, float]:
    n = math.hypot(vx, vy)
    if n > limit and n > 0.0:
        k = limit / n
        return vx * k, vy * k
    return vx, vy


def compute_command(
    displacement: tuple[float, float],
    prev: TreadmillCommand,
    dt: float,
    config: TreadmillConfig,
) -> tuple[TreadmillCommand, bool]:
    """Next surface-velocity command from the walker's displacement.

    Returns (command, fault). fault is set when the displacement is
    non-finite; the command is then (0, 0).
    """
    dx, dy = displacement
    if not (math.isfinite(dx) and math.isfinite(dy)):
        return TreadmillCommand(0.0, 0.0), True

    d = math.hypot(dx, dy)
    if d > config.dead_zone:
        mag = config.gain * (d - config.dead_zone)
        ux, uy = dx / d, dy / d
        wx, wy = _clamp_norm(-mag * ux, -mag * uy, config.v_max)
    else:
        wx, wy = 0.0, 0.0

    # slew toward the desired command, at most a_max*dt per tick
    step_x, step_y = wx - prev.vx, wy - prev.vy
    step_x, step_y = _clamp_norm(step_x, step_y, config.a_max * dt)
    vx, vy = _clamp_norm(prev.vx + step_x, prev.vy + step_y, config.v_max)
    return TreadmillCommand(vx, vy), False


def plant_step(
    platform: PlatformState,
    loco_vel: tuple[float, float],
    cmd: TreadmillCommand,
    dt: float,
    config: TreadmillConfig,
) -> tuple[PlatformState, bool]:
    """Kinematic plant: real walker velocity is locomotor plus surface velocity.

    Returns (new platform state, edge_contact). Displacement is clamped to
    the physical surface extent; clamping flags edge contact.
    """
    dx = platform.displacement[0] + (loco_vel[0] + cmd.vx) * dt
    dy = platform.displacement[1] + (loco_vel[1] + cmd.vy) * dt
    half_x = config.surface_extent_x / 2.0
    half_y = config.surface_extent_y / 2.0
    edge = abs(dx) > half_x or abs(dy) > half_y
    dx = min(max(dx, -half_x), half_x)
    dy = min(max(dy, -half_y), half_y)
    return PlatformState(displacement=(dx, dy), last_command=cmd), edge


def virtual_integrate(
    participant: ParticipantState, loco_vel: tuple[float, float], dt: float
) -> ParticipantState:
    """Advance the virtual position by the locomotor velocity only.

    Virtual motion is the walker's speed relative to the belt, so the
    recentering command never leaks into the virtual trajectory.
    """
    p = participant.virtual_position
    participant.virtual_position = type(p)(
        p.x + loco_vel[0] * dt, p.y + loco_vel[1] * dt, p.z
    )
    return participant


def belt_index(displacement: tuple[float, float], config: TreadmillConfig) -> int:
    """Which of the side-by-side belts is under the walker (diagnostic)."""
    frac = (displacement[1] + config.surface_extent_y / 2.0) / config.surface_extent_y
    idx = math.floor(frac * config.belt_count)
    return min(max(idx, 0), config.belt_count - 1)
