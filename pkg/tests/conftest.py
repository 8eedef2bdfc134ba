import math

import pytest

from mexgen.cli import run_scripted
from mexgen.recorder import InputRecord, SessionArchive, quantize_input
from mexgen.types import InputFrame, Vec3
from mexgen.world import ScenarioSpec, ScenarioTree, SimConfig, World


@pytest.fixture
def config() -> SimConfig:
    return SimConfig()


@pytest.fixture
def three_trees() -> ScenarioSpec:
    return ScenarioSpec(
        trees=(
            ScenarioTree(1, 4.0, 0.0, 2.0),
            ScenarioTree(2, 8.0, 3.0, 2.0),
            ScenarioTree(3, -5.0, -5.0, 2.5),
        )
    )


def dense_records(n_ticks: int, frame_fn) -> list[InputRecord]:
    """One InputRecord per tick from a tick -> InputFrame function."""
    return [
        InputRecord(tick=i, frame=quantize_input(frame_fn(i))) for i in range(n_ticks)
    ]


def run_session(config: SimConfig, scenario: ScenarioSpec,
                records: list[InputRecord],
                session_id: str = "test") -> tuple[World, SessionArchive]:
    world, recorder = run_scripted(config, scenario, records, session_id,
                                   "2026-01-01T00:00:00Z")
    return world, recorder.finalize()


def throw_frames(config: SimConfig, *, press_tick: int, release_tick: int,
                 ctrl_v: Vec3 = Vec3(2.0, 0.0, 3.0),
                 ctrl_start: Vec3 = Vec3(0.0, 0.0, 1.2)):
    """Frame function for a single grab-and-throw with linear controller motion."""
    dt = config.world.dt

    def fn(tick: int) -> InputFrame:
        t = (tick + 1) * dt  # input applies to the tick it produces
        ctrl = Vec3(
            ctrl_start.x + ctrl_v.x * t,
            ctrl_start.y + ctrl_v.y * t,
            ctrl_start.z + ctrl_v.z * t,
        )
        return InputFrame(
            mode="direct",
            ctrl=ctrl,
            trigger=press_tick <= tick < release_tick,
        )

    return fn
