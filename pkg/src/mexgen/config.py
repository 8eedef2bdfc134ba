"""Run-config serialization and digesting.

One JSON shape everywhere: {"world", "treadmill", "gait", "ballistics",
"scenario"}. The digest is a sha256 over the canonical (sorted, compact)
serialization, so identical configs hash identically on any platform.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json

from .gait import GaitConfig
from .interaction import BallisticsConfig
from .treadmill import TreadmillConfig
from .types import SimError, WorldConfig
from .world import ScenarioSpec, SimConfig, parse_scenario


def config_to_obj(config: SimConfig, scenario: ScenarioSpec) -> dict:
    return {
        "world": dataclasses.asdict(config.world),
        "treadmill": dataclasses.asdict(config.treadmill),
        "gait": dataclasses.asdict(config.gait),
        "ballistics": dataclasses.asdict(config.ballistics),
        "scenario": scenario.to_json_obj(),
        "axis_convention": "z-up",
    }


def _build(cls, obj: dict, section: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - fields
    if unknown:
        raise SimError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**obj)


def config_from_obj(obj: dict) -> tuple[SimConfig, ScenarioSpec]:
    if not isinstance(obj, dict):
        raise SimError("run config must be a JSON object")
    known = {"world", "treadmill", "gait", "ballistics", "scenario", "axis_convention"}
    unknown = set(obj) - known
    if unknown:
        raise SimError(f"unknown config keys: {sorted(unknown)}")
    config = SimConfig(
        world=_build(WorldConfig, obj.get("world", {}), "world"),
        treadmill=_build(TreadmillConfig, obj.get("treadmill", {}), "treadmill"),
        gait=_build(GaitConfig, obj.get("gait", {}), "gait"),
        ballistics=_build(BallisticsConfig, obj.get("ballistics", {}), "ballistics"),
    )
    config.validate()
    scenario = parse_scenario(obj.get("scenario", {"trees": [], "start": {}}))
    return config, scenario


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config: SimConfig, scenario: ScenarioSpec) -> str:
    payload = canonical_json(config_to_obj(config, scenario))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_run_config(path: str) -> tuple[SimConfig, ScenarioSpec]:
    with open(path, encoding="utf-8") as fh:
        return config_from_obj(json.load(fh))
