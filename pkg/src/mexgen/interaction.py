"""Grab/throw state machine and ballistic flight of thrown ash.

Pulling the trigger grabs ash; releasing it throws. Release velocity is
estimated from recent controller motion, and the projectile follows an
exact constant-gravity parabola until it hits a tree, the ground, or
times out. Impacts start blooming on every tree within scatter radius.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .types import (
    DespawnCause,
    EventKind,
    Projectile,
    ProjectileState,
    SimEvent,
    Tree,
    Vec3,
    WorldConfig,
)


@dataclass(frozen=True)
class BallisticsConfig:
    velocity_window: float = 0.1   # s of controller history used for the fit
    min_window_samples: int = 3


@dataclass
class HandState:
    holding: bool = False
    held_since: Optional[float] = None


@dataclass(frozen=True)
class ThrowEvent:
    release_t: float
    release_position: Vec3
    release_velocity: Vec3


class ControllerHistory:
    """Ring buffer of (t, position) samples with strictly increasing t."""

    def __init__(self, capacity: int = 64):
        self._buf: deque[tuple[float, Vec3]] = deque(maxlen=capacity)

    def push(self, t: float, position: Vec3) -> None:
        if self._buf and t <= self._buf[-1][0]:
            raise ValueError("controller samples must have strictly increasing t")
        self._buf.append((t, position))

    def samples(self) -> list[tuple[float, Vec3]]:
        return list(self._buf)

    def __len__(self) -> int:
        return len(self._buf)


def estimate_release_velocity(
    history: ControllerHistory, window: float, min_samples: int
) -> Vec3:
    """Per-axis least-squares slope of position vs time over the window.

    Falls back to a two-point finite difference below min_samples, and to
    zero for a single sample.
    """
    samples = history.samples()
    if not samples:
        return Vec3()
    newest_t = samples[-1][0]
    recent = [(t, p) for t, p in samples if newest_t - t <= window]
    if len(recent) == 1 or all(p == recent[0][1] for _, p in recent):
        return Vec3()
    if len(recent) < min_samples:
        (t0, p0), (t1, p1) = recent[-2], recent[-1]
        inv = 1.0 / (t1 - t0)
        return (p1 - p0).scale(inv)

    # slope = cov(t, p) / var(t), centered for conditioning
    n = len(recent)
    t_mean = sum(t for t, _ in recent) / n
    var = sum((t - t_mean) ** 2 for t, _ in recent)
    if var == 0.0:
        return Vec3()
    sx = sum((t - t_mean) * p.x for t, p in recent)
    sy = sum((t - t_mean) * p.y for t, p in recent)
    sz = sum((t - t_mean) * p.z for t, p in recent)
    return Vec3(sx / var, sy / var, sz / var)


def hand_update(
    hand: HandState,
    trigger_now: bool,
    trigger_prev: bool,
    controller_pos: Vec3,
    history: ControllerHistory,
    t: float,
    config: BallisticsConfig,
) -> tuple[HandState, Optional[ThrowEvent], Optional[SimEvent]]:
    """Edge-triggered grab/release. Returns (hand, throw, grab_event)."""
    if trigger_now and not trigger_prev:
        if not hand.holding:
            hand.holding = True
            hand.held_since = t
            return hand, None, SimEvent(time_s=t, kind=EventKind.GRAB)
        return hand, None, None
    if trigger_prev and not trigger_now and hand.holding:
        velocity = estimate_release_velocity(
            history, config.velocity_window, config.min_window_samples
        )
        hand.holding = False
        hand.held_since = None
        return hand, ThrowEvent(t, controller_pos, velocity), None
    return hand, None, None


def ballistic_step(p: Projectile, dt: float, g: float) -> Projectile:
    """Exact constant-gravity update; the discrete path lies on the parabola."""
    pos, vel = p.position, p.velocity
    p.position = Vec3(
        pos.x + vel.x * dt,
        pos.y + vel.y * dt,
        pos.z + vel.z * dt - 0.5 * g * dt * dt,
    )
    p.velocity = Vec3(vel.x, vel.y, vel.z - g * dt)
    return p


def impact_resolve(
    p: Projectile, trees: list[Tree], now: float, config: WorldConfig
) -> tuple[Projectile, list[SimEvent], list[int]]:
    """Despawn on tree contact, ground contact, or timeout.

    On any hit, every tree whose canopy center lies within scatter radius
    of the impact point (and has not started blooming) starts; the list of
    their ids is returned. Tie-break on simultaneous tree contact: nearest,
    then lowest id.
    """
    events: list[SimEvent] = []
    bloom_started: list[int] = []

    hit_tree: Optional[Tree] = None
    best: Optional[tuple[float, int]] = None
    for tree in trees:
        d = p.position.dist(tree.canopy_center)
        if d <= config.tree_contact_radius:
            key = (d, tree.id)
            if best is None or key < best:
                best = key
                hit_tree = tree

    impact = False
    if hit_tree is not None:
        impact = True
        p.despawn_cause = DespawnCause.TREE
        p.hit_tree_id = hit_tree.id
        events.append(
            SimEvent(time_s=now, kind=EventKind.HIT, object_id=p.id, tree_id=hit_tree.id)
        )
    elif p.position.z <= 0.0:
        impact = True
        p.despawn_cause = DespawnCause.GROUND
        events.append(SimEvent(time_s=now, kind=EventKind.HIT, object_id=p.id))
    elif now - p.spawned_at > config.projectile_timeout:
        p.despawn_cause = DespawnCause.TIMEOUT

    if p.despawn_cause is not None:
        p.state = ProjectileState.DESPAWNED
        p.despawned_at = now
        if impact:
            for tree in trees:
                if (
                    tree.bloom_started_at is None
                    and p.position.dist(tree.canopy_center) <= config.scatter_radius
                ):
                    tree.bloom_started_at = now
                    bloom_started.append(tree.id)
                    events.append(
                        SimEvent(
                            time_s=now,
                            kind=EventKind.BLOOM_STARTED,
                            object_id=p.id,
                            tree_id=tree.id,
                        )
                    )
        events.append(SimEvent(time_s=now, kind=EventKind.DESPAWN, object_id=p.id))
    return p, events, bloom_started
