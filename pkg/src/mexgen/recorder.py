"""Experience database: 10 Hz CSV logs, session archives, and replay.

The simulation ticks faster than the log rate; records are decimated onto
exact 0.1 s boundaries and stamped with exact multiples so the time column
never drifts. The full tick-rate input log is archived alongside, which
makes every session deterministically replayable.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Optional

from .config import canonical_json, config_digest, config_to_obj
from .types import (
    EventKind,
    InputFrame,
    ProjectileState,
    SimError,
    SimEvent,
    Vec3,
)
from .world import ScenarioSpec, SimConfig, World

FRAMES_HEADER = (
    "time_s,participant_x,participant_y,participant_z,"
    "controller_x,controller_y,controller_z,trigger_pressed"
)
OBJECTS_HEADER = "object_id,time_s,x,y,z,event"
INPUTS_HEADER = "tick,mode,move_x,move_y,yaw,left_h,right_h,ctrl_x,ctrl_y,ctrl_z,trigger"

FRAME_INTERVAL = 0.1


class ValidationError(SimError):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class ReplayDivergence(SimError):
    def __init__(self, tick: int, detail: str):
        super().__init__(f"replay diverged at tick {tick}: {detail}")
        self.tick = tick
        self.detail = detail


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int           # time_s = frame_index * 0.1
    participant: Vec3
    controller: Vec3
    trigger_pressed: int

    @property
    def time_s(self) -> float:
        return self.frame_index / 10.0


@dataclass(frozen=True)
class ObjectRecord:
    object_id: int
    time_s: float
    position: Vec3
    event: str                 # spawn | fly | hit | despawn


@dataclass(frozen=True)
class InputRecord:
    tick: int
    frame: InputFrame


@dataclass
class SessionArchive:
    session_id: str
    started_at: str            # RFC3339 wall clock
    config: SimConfig
    scenario: ScenarioSpec
    frames: list[FrameRecord] = field(default_factory=list)
    objects: list[ObjectRecord] = field(default_factory=list)
    inputs: list[InputRecord] = field(default_factory=list)
    tick_count: int = 0

    @property
    def digest(self) -> str:
        return config_digest(self.config, self.scenario)


def quantize_input(frame: InputFrame) -> InputFrame:
    """Round input floats to log precision so archived inputs replay exactly."""
    return replace(
        frame,
        move_x=round(frame.move_x, 6),
        move_y=round(frame.move_y, 6),
        yaw=round(frame.yaw, 6),
        left_h=round(frame.left_h, 6),
        right_h=round(frame.right_h, 6),
        ctrl=Vec3(round(frame.ctrl.x, 6), round(frame.ctrl.y, 6), round(frame.ctrl.z, 6)),
    )


def frame_index_for_tick(tick: int, dt: float) -> int:
    tpf = FRAME_INTERVAL / dt
    if abs(tpf - round(tpf)) < 1e-6:
        return tick // int(round(tpf))
    return int(tick * dt / FRAME_INTERVAL + 1e-9)


def _r6(v: float) -> float:
    return round(v, 6)


class Recorder:
    """Samples a world into frame and object records, tick by tick."""

    def __init__(self, config: SimConfig, scenario: ScenarioSpec,
                 session_id: str, started_at: str):
        self.config = config
        self.scenario = scenario
        self.session_id = session_id
        self.started_at = started_at
        self.frames: list[FrameRecord] = []
        self.objects: list[ObjectRecord] = []
        self.inputs: list[InputRecord] = []
        self._last_tick: Optional[int] = None
        self._last_frame_index: Optional[int] = None
        self.corrupt = False

    def start(self, world: World) -> None:
        """Record the initial (tick 0) state."""
        self._sample(world, [])

    def on_tick(self, world: World, frame: InputFrame, events: list[SimEvent]) -> None:
        """Record one stepped tick; must follow tick order."""
        self.inputs.append(InputRecord(tick=world.state.tick - 1, frame=frame))
        self._sample(world, events)

    def _sample(self, world: World, events: list[SimEvent]) -> None:
        tick = world.state.tick
        if self._last_tick is not None and tick != self._last_tick + 1:
            self.corrupt = True
            raise SimError(f"recorder called out of order (tick {tick} after {self._last_tick})")
        self._last_tick = tick

        dt = world.config.world.dt
        t = _r6(tick * dt)
        by_id = {p.id: p for p in world.state.projectiles}
        eventful: set[int] = set()

        spawn_ids = sorted(
            e.object_id for e in events if e.kind is EventKind.THROW and e.object_id is not None
        )
        hit_ids = sorted(
            e.object_id for e in events if e.kind is EventKind.HIT and e.object_id is not None
        )
        despawn_ids = sorted(
            e.object_id for e in events if e.kind is EventKind.DESPAWN and e.object_id is not None
        )
        eventful.update(spawn_ids, hit_ids, despawn_ids)

        for oid in spawn_ids:
            self._object_row(by_id[oid], t, "spawn")

        fi = frame_index_for_tick(tick, dt)
        if self._last_frame_index is None or fi > self._last_frame_index:
            self._last_frame_index = fi
            st = world.state
            self.frames.append(
                FrameRecord(
                    frame_index=fi,
                    participant=Vec3(
                        _r6(st.participant.virtual_position.x),
                        _r6(st.participant.virtual_position.y),
                        _r6(st.participant.virtual_position.z),
                    ),
                    controller=Vec3(
                        _r6(st.controller.position.x),
                        _r6(st.controller.position.y),
                        _r6(st.controller.position.z),
                    ),
                    trigger_pressed=1 if st.controller.trigger_pressed else 0,
                )
            )
            for p in sorted(world.state.projectiles, key=lambda p: p.id):
                if p.state is ProjectileState.IN_FLIGHT and p.id not in eventful:
                    self._object_row(p, t, "fly")

        for oid in hit_ids:
            self._object_row(by_id[oid], t, "hit")
        for oid in despawn_ids:
            self._object_row(by_id[oid], t, "despawn")

    def _object_row(self, proj, t: float, event: str) -> None:
        self.objects.append(
            ObjectRecord(
                object_id=proj.id,
                time_s=t,
                position=Vec3(_r6(proj.position.x), _r6(proj.position.y), _r6(proj.position.z)),
                event=event,
            )
        )

    def finalize(self) -> SessionArchive:
        if self.corrupt:
            raise SimError("session marked corrupt; refusing to finalize")
        return SessionArchive(
            session_id=self.session_id,
            started_at=self.started_at,
            config=self.config,
            scenario=self.scenario,
            frames=list(self.frames),
            objects=list(self.objects),
            inputs=list(self.inputs),
            tick_count=self._last_tick or 0,
        )


# ---------------------------------------------------------------------------
# rendering (LF line endings, UTF-8, exactly one final LF)

def render_frames_csv(frames: list[FrameRecord]) -> str:
    lines = [FRAMES_HEADER]
    for f in frames:
        lines.append(
            f"{f.frame_index / 10.0:.1f},"
            f"{f.participant.x:.6f},{f.participant.y:.6f},{f.participant.z:.6f},"
            f"{f.controller.x:.6f},{f.controller.y:.6f},{f.controller.z:.6f},"
            f"{f.trigger_pressed}"
        )
    return "\n".join(lines) + "\n"


def render_objects_csv(objects: list[ObjectRecord]) -> str:
    lines = [OBJECTS_HEADER]
    for o in objects:
        lines.append(
            f"{o.object_id},{o.time_s:.6f},"
            f"{o.position.x:.6f},{o.position.y:.6f},{o.position.z:.6f},{o.event}"
        )
    return "\n".join(lines) + "\n"


def render_inputs_csv(inputs: list[InputRecord]) -> str:
    lines = [INPUTS_HEADER]
    for r in inputs:
        f = r.frame
        lines.append(
            f"{r.tick},{f.mode},{f.move_x:.6f},{f.move_y:.6f},{f.yaw:.6f},"
            f"{f.left_h:.6f},{f.right_h:.6f},"
            f"{f.ctrl.x:.6f},{f.ctrl.y:.6f},{f.ctrl.z:.6f},{int(f.trigger)}"
        )
    return "\n".join(lines) + "\n"


def render_meta_json(archive: SessionArchive) -> str:
    return canonical_json(
        {
            "session_id": archive.session_id,
            "started_at": archive.started_at,
            "config_digest": archive.digest,
            "frame_count": len(archive.frames),
            "tick_count": archive.tick_count,
            "axis_convention": "z-up",
        }
    ) + "\n"


def render_config_json(archive: SessionArchive) -> str:
    return canonical_json(config_to_obj(archive.config, archive.scenario)) + "\n"


def write_session(archive: SessionArchive, directory: str) -> list[str]:
    """Write frames.csv, objects.csv, inputs.csv, meta.json and config.json.

    Atomic per directory: files land in a temp dir first, then move into
    place, so a failed write leaves nothing partial behind.
    """
    contents = {
        "frames.csv": render_frames_csv(archive.frames),
        "objects.csv": render_objects_csv(archive.objects),
        "inputs.csv": render_inputs_csv(archive.inputs),
        "meta.json": render_meta_json(archive),
        "config.json": render_config_json(archive),
    }
    os.makedirs(directory, exist_ok=True)
    tmp = tempfile.mkdtemp(dir=directory, prefix=".write-")
    try:
        for name, text in contents.items():
            with open(os.path.join(tmp, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for name in contents:
            os.replace(os.path.join(tmp, name), os.path.join(directory, name))
    finally:
        for name in contents:
            leftover = os.path.join(tmp, name)
            if os.path.exists(leftover):
                os.remove(leftover)
        os.rmdir(tmp)
    return sorted(contents)


# ---------------------------------------------------------------------------
# parsing and validation

def _read_csv(path: str, header: str, name: str) -> list[list[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ValidationError("MissingFile", name)
    lines = text.split("\n")
    if not lines or lines[0] != header:
        raise ValidationError("MissingColumn", f"{name}: bad header")
    if lines[-1] != "":
        raise ValidationError("BadValue", f"{name}: missing final newline")
    return [line.split(",") for line in lines[1:-1]]


def read_session(directory: str) -> SessionArchive:
    """Parse and validate an archived session directory."""
    from .config import config_from_obj

    meta_path = os.path.join(directory, "meta.json")
    try:
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise ValidationError("MissingFile", "meta.json")
    except json.JSONDecodeError as exc:
        raise ValidationError("BadValue", f"meta.json: {exc}")

    try:
        with open(os.path.join(directory, "config.json"), encoding="utf-8") as fh:
            config_obj = json.load(fh)
    except FileNotFoundError:
        raise ValidationError("MissingFile", "config.json")
    except json.JSONDecodeError as exc:
        raise ValidationError("BadValue", f"config.json: {exc}")
    try:
        config, scenario = config_from_obj(config_obj)
    except SimError as exc:
        raise ValidationError("BadValue", f"config.json: {exc}")

    digest = hashlib.sha256(canonical_json(config_obj).encode("utf-8")).hexdigest()
    if meta.get("config_digest") != digest:
        raise ValidationError("BadDigest", "meta.json digest does not match config.json")

    frames: list[FrameRecord] = []
    for row_no, row in enumerate(_read_csv(os.path.join(directory, "frames.csv"),
                                           FRAMES_HEADER, "frames.csv"), start=2):
        if len(row) != 8:
            raise ValidationError("MissingColumn", f"frames.csv row {row_no}")
        expected = f"{(row_no - 2) / 10.0:.1f}"
        if row[0] != expected:
            raise ValidationError(
                "CadenceViolation", f"frames.csv row {row_no}: got {row[0]}, want {expected}"
            )
        if row[7] not in ("0", "1"):
            raise ValidationError("BadValue", f"frames.csv row {row_no}: trigger {row[7]!r}")
        try:
            vals = [float(v) for v in row[1:7]]
        except ValueError:
            raise ValidationError("BadValue", f"frames.csv row {row_no}")
        frames.append(
            FrameRecord(
                frame_index=row_no - 2,
                participant=Vec3(*vals[0:3]),
                controller=Vec3(*vals[3:6]),
                trigger_pressed=int(row[7]),
            )
        )

    objects: list[ObjectRecord] = []
    for row_no, row in enumerate(_read_csv(os.path.join(directory, "objects.csv"),
                                           OBJECTS_HEADER, "objects.csv"), start=2):
        if len(row) != 6:
            raise ValidationError("MissingColumn", f"objects.csv row {row_no}")
        if row[5] not in ("spawn", "fly", "hit", "despawn"):
            raise ValidationError("BadValue", f"objects.csv row {row_no}: event {row[5]!r}")
        try:
            objects.append(
                ObjectRecord(
                    object_id=int(row[0]),
                    time_s=float(row[1]),
                    position=Vec3(float(row[2]), float(row[3]), float(row[4])),
                    event=row[5],
                )
            )
        except ValueError:
            raise ValidationError("BadValue", f"objects.csv row {row_no}")
    _validate_lifecycles(objects)

    inputs: list[InputRecord] = []
    for row_no, row in enumerate(_read_csv(os.path.join(directory, "inputs.csv"),
                                           INPUTS_HEADER, "inputs.csv"), start=2):
        if len(row) != 11:
            raise ValidationError("MissingColumn", f"inputs.csv row {row_no}")
        if row[1] not in ("direct", "trackers"):
            raise ValidationError("BadValue", f"inputs.csv row {row_no}: mode {row[1]!r}")
        if row[10] not in ("0", "1"):
            raise ValidationError("BadValue", f"inputs.csv row {row_no}: trigger {row[10]!r}")
        try:
            tick = int(row[0])
            nums = [float(v) for v in row[2:10]]
        except ValueError:
            raise ValidationError("BadValue", f"inputs.csv row {row_no}")
        if tick != row_no - 2:
            raise ValidationError("BadValue", f"inputs.csv row {row_no}: tick {tick} out of order")
        inputs.append(
            InputRecord(
                tick=tick,
                frame=InputFrame(
                    mode=row[1],
                    move_x=nums[0], move_y=nums[1], yaw=nums[2],
                    left_h=nums[3], right_h=nums[4],
                    ctrl=Vec3(nums[5], nums[6], nums[7]),
                    trigger=row[10] == "1",
                ),
            )
        )

    if meta.get("frame_count") != len(frames):
        raise ValidationError("BadValue", "meta.json frame_count mismatch")
    if meta.get("tick_count") != len(inputs):
        raise ValidationError("BadValue", "meta.json tick_count mismatch")

    return SessionArchive(
        session_id=str(meta.get("session_id", "")),
        started_at=str(meta.get("started_at", "")),
        config=config,
        scenario=scenario,
        frames=frames,
        objects=objects,
        inputs=inputs,
        tick_count=len(inputs),
    )


def _validate_lifecycles(objects: list[ObjectRecord]) -> None:
    per_object: dict[int, list[ObjectRecord]] = {}
    for rec in objects:
        per_object.setdefault(rec.object_id, []).append(rec)
    for oid, recs in per_object.items():
        events = [r.event for r in recs]
        if events.count("spawn") != 1 or events[0] != "spawn":
            raise ValidationError("LifecycleOrder", f"object {oid}: spawn must be first and unique")
        # a session may end with an object still in flight; despawn is
        # optional, but when present it must terminate the track
        if "despawn" in events and (events.count("despawn") != 1 or events[-1] != "despawn"):
            raise ValidationError("LifecycleOrder", f"object {oid}: despawn must be last and unique")
        times = [r.time_s for r in recs]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("LifecycleOrder", f"object {oid}: times not non-decreasing")


# ---------------------------------------------------------------------------
# replay

@dataclass
class ReplayResult:
    world: World
    hashes: list[str]
    archive: SessionArchive    # regenerated from the input log


def replay(archive: SessionArchive) -> ReplayResult:
    """Re-run the world over the archived input stream."""
    world = World(archive.config, archive.scenario)
    recorder = Recorder(archive.config, archive.scenario,
                        archive.session_id, archive.started_at)
    if archive.frames or archive.inputs:
        recorder.start(world)
    hashes = [world.state_hash()]
    for rec in archive.inputs:
        events = world.step(rec.frame)
        recorder.on_tick(world, rec.frame, events)
        hashes.append(world.state_hash())
    return ReplayResult(world=world, hashes=hashes, archive=recorder.finalize())


def verify_replay(directory: str) -> None:
    """Byte-compare regenerated frames/objects CSVs against the archived ones.

    Raises ReplayDivergence with the first divergent tick on mismatch.
    """
    archive = read_session(directory)
    result = replay(archive)
    dt = archive.config.world.dt
    for name, render, records in (
        ("frames.csv", render_frames_csv, result.archive.frames),
        ("objects.csv", render_objects_csv, result.archive.objects),
    ):
        with open(os.path.join(directory, name), encoding="utf-8", newline="") as fh:
            archived = fh.read()
        regenerated = render(records)
        if archived != regenerated:
            a_lines, r_lines = archived.split("\n"), regenerated.split("\n")
            for i, (a, r) in enumerate(zip(a_lines, r_lines)):
                if a != r:
                    tick = _line_tick(name, a, r, dt)
                    raise ReplayDivergence(tick, f"{name} line {i + 1}")
            tick = len(min(a_lines, r_lines, key=len)) - 1
            raise ReplayDivergence(max(tick, 0), f"{name}: length mismatch")


def _line_tick(name: str, archived_line: str, regen_line: str, dt: float) -> int:
    line = regen_line or archived_line
    try:
        t = float(line.split(",")[0 if name == "frames.csv" else 1])
        return int(round(t / dt))
    except (ValueError, IndexError):
        return 0
