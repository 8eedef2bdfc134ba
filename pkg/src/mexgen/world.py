"""Fixed-timestep world: orchestrates gait, treadmill, interaction and bloom.

The step is deterministic: identical (state, input, dt) always produces an
identical successor state, so a recorded input stream can be replayed
bit-for-bit. The integer tick is the clock's source of truth.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

from .gait import FootFrame, GaitConfig, GaitState, gait_update, locomotion_vector
from .interaction import (
    BallisticsConfig,
    ControllerHistory,
    HandState,
    ThrowEvent,
    ballistic_step,
    hand_update,
    impact_resolve,
)
from .treadmill import (
    PlatformState,
    TreadmillCommand,
    TreadmillConfig,
    compute_command,
    plant_step,
)
from .types import (
    ControllerState,
    EventKind,
    IDLE_INPUT,
    InputFrame,
    ParticipantState,
    Projectile,
    ProjectileState,
    ScenarioError,
    SimEvent,
    Tree,
    Vec3,
    WorldConfig,
    WorldState,
    normalize_yaw,
)


@dataclass(frozen=True)
class ScenarioTree:
    id: int
    x: float
    y: float
    canopy_z: float


@dataclass(frozen=True)
class ScenarioSpec:
    trees: tuple[ScenarioTree, ...] = ()
    start_x: float = 0.0
    start_y: float = 0.0
    start_yaw: float = 0.0

    def to_json_obj(self) -> dict:
        return {
            "trees": [
                {"id": t.id, "x": t.x, "y": t.y, "canopy_z": t.canopy_z}
                for t in self.trees
            ],
            "start": {"x": self.start_x, "y": self.start_y, "yaw": self.start_yaw},
        }


def parse_scenario(doc: dict) -> ScenarioSpec:
    """Parse and validate a scenario document; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(doc) - {"trees", "start"}
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    trees = []
    seen: set[int] = set()
    for i, entry in enumerate(doc.get("trees", [])):
        extra = set(entry) - {"id", "x", "y", "canopy_z"}
        if extra:
            raise ScenarioError(f"unknown tree keys at index {i}: {sorted(extra)}")
        try:
            tid = int(entry["id"])
            x, y = float(entry["x"]), float(entry["y"])
            canopy_z = float(entry["canopy_z"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad tree entry at index {i}: {exc}") from exc
        if tid in seen:
            raise ScenarioError(f"DuplicateId({tid})")
        if not all(math.isfinite(v) for v in (x, y, canopy_z)):
            raise ScenarioError(f"non-finite tree position for id {tid}")
        seen.add(tid)
        trees.append(ScenarioTree(tid, x, y, canopy_z))
    start = doc.get("start", {})
    extra = set(start) - {"x", "y", "yaw"}
    if extra:
        raise ScenarioError(f"unknown start keys: {sorted(extra)}")
    sx = float(start.get("x", 0.0))
    sy = float(start.get("y", 0.0))
    syaw = float(start.get("yaw", 0.0))
    if not all(math.isfinite(v) for v in (sx, sy, syaw)):
        raise ScenarioError("non-finite start pose")
    return ScenarioSpec(trees=tuple(trees), start_x=sx, start_y=sy, start_yaw=syaw)


def load_scenario(path: str) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(json.load(fh))


def bloom_update(tree: Tree, now: float, config: WorldConfig) -> tuple[Tree, bool]:
    """Advance a tree's bloom; returns (tree, completed_this_call)."""
    if tree.bloom_started_at is None:
        return tree, False
    prev = tree.bloom_stage
    stage = (now - tree.bloom_started_at) / config.bloom_duration
    tree.bloom_stage = min(max(stage, 0.0), 1.0)
    return tree, prev < 1.0 and tree.bloom_stage >= 1.0


def discrete_stage(stage: float, n_stages: int) -> tuple[int, bool]:
    """Map a continuous bloom stage to the nearest visual stage index.

    Returns (index, clamped); out-of-range input is clamped with a flag.
    """
    clamped = stage < 0.0 or stage > 1.0
    s = min(max(stage, 0.0), 1.0)
    return int(math.floor(s * (n_stages - 1) + 0.5)), clamped


@dataclass(frozen=True)
class SimConfig:
    """Full simulation parameter set (everything the step function reads)."""
    world: WorldConfig = WorldConfig()
    treadmill: TreadmillConfig = TreadmillConfig()
    gait: GaitConfig = GaitConfig()
    ballistics: BallisticsConfig = BallisticsConfig()

    def validate(self) -> None:
        self.world.validate()
        self.treadmill.validate()
        self.gait.validate()


class World:
    """Authoritative simulation: state plus the pure step over input frames."""

    def __init__(self, config: SimConfig, scenario: ScenarioSpec):
        config.validate()
        self.config = config
        self.scenario = scenario
        trees = [
            Tree(
                id=t.id,
                position=Vec3(t.x, t.y, 0.0),
                canopy_center=Vec3(t.x, t.y, t.canopy_z),
            )
            for t in scenario.trees
        ]
        self.state = WorldState(
            tick=0,
            participant=ParticipantState(
                virtual_position=Vec3(scenario.start_x, scenario.start_y, 0.0),
                heading_yaw=normalize_yaw(scenario.start_yaw),
            ),
            controller=ControllerState(),
            trees=trees,
            projectiles=[],
            next_object_id=0,
        )
        self.platform = PlatformState()
        self.gait_state = GaitState()
        self.hand = HandState()
        self.history = ControllerHistory()
        self.prev_input: InputFrame = IDLE_INPUT
        self.throws: list[ThrowEvent] = []

    @property
    def time_s(self) -> float:
        return self.state.tick * self.config.world.dt

    def step(self, frame: InputFrame) -> list[SimEvent]:
        """Advance one tick. Sub-step order is fixed for determinism."""
        cfg = self.config
        dt = cfg.world.dt
        state = self.state
        new_tick = state.tick + 1
        t = new_tick * dt
        events: list[SimEvent] = []

        if not frame.is_finite():
            events.append(SimEvent(time_s=t, kind=EventKind.INPUT_REJECTED))
            frame = self.prev_input
        else:
            self.prev_input = frame

        # 1. locomotion velocity from gait or direct steering
        if frame.mode == "trackers":
            self.gait_state = gait_update(
                self.gait_state,
                FootFrame(t=t, left_h=frame.left_h, right_h=frame.right_h, yaw=frame.yaw),
                cfg.gait,
            )
            loco = locomotion_vector(self.gait_state.speed, frame.yaw)
        else:
            loco = (frame.move_x, frame.move_y)
            n = math.hypot(*loco)
            if n > cfg.treadmill.v_max:
                k = cfg.treadmill.v_max / n
                loco = (loco[0] * k, loco[1] * k)

        # 2. treadmill recentering command and plant update
        cmd, _ = compute_command(
            self.platform.displacement, self.platform.last_command, dt, cfg.treadmill
        )
        self.platform, edge = plant_step(self.platform, loco, cmd, dt, cfg.treadmill)
        if edge:
            events.append(SimEvent(time_s=t, kind=EventKind.EDGE_CONTACT))

        # 3. virtual position integration (locomotor velocity only)
        p = state.participant
        pos = p.virtual_position
        p.virtual_position = Vec3(pos.x + loco[0] * dt, pos.y + loco[1] * dt, 0.0)
        p.heading_yaw = normalize_yaw(frame.yaw)
        p.real_displacement = self.platform.displacement

        # 4. hand state machine (grab / throw)
        self.history.push(t, frame.ctrl)
        trigger_prev = state.controller.trigger_pressed
        self.hand, throw, grab_ev = hand_update(
            self.hand, frame.trigger, trigger_prev, frame.ctrl, self.history, t,
            cfg.ballistics,
        )
        state.controller = ControllerState(position=frame.ctrl, trigger_pressed=frame.trigger)
        if grab_ev is not None:
            events.append(grab_ev)
        if throw is not None:
            proj = Projectile(
                id=state.next_object_id,
                position=throw.release_position,
                velocity=throw.release_velocity,
                spawned_at=t,
            )
            state.next_object_id += 1
            state.projectiles.append(proj)
            self.throws.append(throw)
            events.append(SimEvent(time_s=t, kind=EventKind.THROW, object_id=proj.id))

        # 5. projectile integration and impacts
        for proj in state.projectiles:
            if proj.state is not ProjectileState.IN_FLIGHT:
                continue
            if proj.spawned_at < t:
                ballistic_step(proj, dt, cfg.world.gravity)
            _, impact_events, _ = impact_resolve(proj, state.trees, t, cfg.world)
            events.extend(impact_events)

        # 6. bloom progression
        for tree in state.trees:
            _, completed = bloom_update(tree, t, cfg.world)
            if completed:
                events.append(
                    SimEvent(time_s=t, kind=EventKind.BLOOM_COMPLETED, tree_id=tree.id)
                )

        state.tick = new_tick
        return events

    def state_hash(self) -> str:
        """Stable digest of every dynamics-relevant field."""
        h = hashlib.sha256()

        def f(*values: float) -> None:
            h.update(struct.pack("<%dd" % len(values), *values))

        def i(*values: int) -> None:
            h.update(struct.pack("<%dq" % len(values), *values))

        st = self.state
        i(st.tick, st.next_object_id)
        p = st.participant
        f(p.virtual_position.x, p.virtual_position.y, p.heading_yaw)
        f(*p.real_displacement)
        c = st.controller
        f(c.position.x, c.position.y, c.position.z)
        i(1 if c.trigger_pressed else 0)
        f(*self.platform.displacement)
        f(self.platform.last_command.vx, self.platform.last_command.vy)
        g = self.gait_state
        i(1 if g.left_up else 0, 1 if g.right_up else 0)
        f(g.last_step_t if g.last_step_t is not None else -1.0, g.cadence_ema, g.speed)
        i(1 if self.hand.holding else 0)
        for tree in st.trees:
            i(tree.id)
            f(
                tree.bloom_stage,
                tree.bloom_started_at if tree.bloom_started_at is not None else -1.0,
            )
        for proj in st.projectiles:
            i(proj.id, 1 if proj.state is ProjectileState.IN_FLIGHT else 0)
            f(
                proj.position.x, proj.position.y, proj.position.z,
                proj.velocity.x, proj.velocity.y, proj.velocity.z,
                proj.spawned_at,
                proj.despawned_at if proj.despawned_at is not None else -1.0,
            )
        return h.hexdigest()


def world_init(config: SimConfig, scenario: ScenarioSpec) -> World:
    return World(config, scenario)
