"""Walk-in-place detector: foot-height streams to locomotion speed.

A step fires on the rising edge of a foot crossing the lift threshold.
Cadence is EMA-smoothed and mapped linearly to speed via step length,
capped at the treadmill's speed limit so both locomotion modes share it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .types import SimError


@dataclass(frozen=True)
class GaitConfig:
    lift_threshold: float = 0.05   # m above floor
    step_length: float = 0.5       # m per step
    ema_alpha: float = 0.3
    step_timeout: float = 1.0      # s of silence before speed resets
    v_cap: float = 0.6             # m/s

    def validate(self) -> None:
        if self.lift_threshold <= 0:
            raise SimError("lift_threshold must be > 0")
        if self.v_cap <= 0:
            raise SimError("v_cap must be > 0")
        if not (0 < self.ema_alpha <= 1):
            raise SimError("ema_alpha must be in (0, 1]")


@dataclass(frozen=True)
class FootFrame:
    t: float
    left_h: float
    right_h: float
    yaw: float = 0.0


@dataclass
class GaitState:
    left_up: bool = False
    right_up: bool = False
    last_step_t: Optional[float] = None
    cadence_ema: float = 0.0       # steps/s
    speed: float = 0.0             # m/s, in [0, v_cap]


def gait_update(state: GaitState, frame: FootFrame, config: GaitConfig) -> GaitState:
    """Consume one tracker frame; frames must arrive in non-decreasing t."""
    if not (
        math.isfinite(frame.left_h)
        and math.isfinite(frame.right_h)
        and math.isfinite(frame.t)
    ):
        return state  # drop the frame

    steps = 0
    left_up = frame.left_h > config.lift_threshold
    right_up = frame.right_h > config.lift_threshold
    if left_up and not state.left_up:
        steps += 1
    if right_up and not state.right_up:
        steps += 1
    state.left_up = left_up
    state.right_up = right_up

    for _ in range(steps):
        if state.last_step_t is not None:
            dt_step = frame.t - state.last_step_t
            if dt_step > 0:
                cadence = 1.0 / dt_step
                if state.cadence_ema == 0.0:
                    # seed with the first measured interval; blending from
                    # zero would take several steps to reach walking speed
                    state.cadence_ema = cadence
                else:
                    state.cadence_ema = (
                        config.ema_alpha * cadence
                        + (1.0 - config.ema_alpha) * state.cadence_ema
                    )
        state.last_step_t = frame.t

    if state.last_step_t is not None and frame.t - state.last_step_t > config.step_timeout:
        state.cadence_ema = 0.0
        state.speed = 0.0
    else:
        state.speed = min(config.v_cap, config.step_length * state.cadence_ema)
    return state


def locomotion_vector(speed: float, yaw: float) -> tuple[float, float]:
    """Speed along the facing direction; norm equals speed exactly."""
    return (speed * math.cos(yaw), speed * math.sin(yaw))
