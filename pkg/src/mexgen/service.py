"""Live session server: one steering client over a WebSocket.

The simulation advances only in the authoritative tick loop; client
messages are queued and applied sample-and-hold at tick boundaries. State
snapshots are broadcast at a fraction of the tick rate (latest-wins under
backpressure); events are sent immediately and never dropped while the
client is connected.
"""
from __future__ import annotations

import asyncio
import datetime
import json
import logging
import math
import uuid
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import config_digest, config_to_obj
from .recorder import Recorder, quantize_input, write_session
from .types import InputFrame, SimEvent, Vec3
from .world import ScenarioSpec, SimConfig, World, discrete_stage

log = logging.getLogger("mexgen.service")

BROADCAST_RATE = 20.0            # state snapshots per second
OUTBOUND_LIMIT = 64              # queued messages before states are shed


def _now_rfc3339() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_client_input(msg: dict, v_max: float) -> Optional[InputFrame]:
    """Build an InputFrame from a client input message; None if malformed."""
    try:
        mode = msg.get("mode", "direct")
        trigger = bool(msg.get("trigger", False))
        ctrl = msg.get("ctrl") or {}
        cx, cy, cz = float(ctrl.get("x", 0.0)), float(ctrl.get("y", 0.0)), float(ctrl.get("z", 0.0))
        if mode == "direct":
            d = msg.get("direct") or {}
            mx, my = float(d.get("move_x", 0.0)), float(d.get("move_y", 0.0))
            yaw = float(d.get("yaw", 0.0))
            n = math.hypot(mx, my)
            if n > v_max:
                mx, my = mx * v_max / n, my * v_max / n
            frame = InputFrame(mode="direct", move_x=mx, move_y=my, yaw=yaw,
                               ctrl=Vec3(cx, cy, cz), trigger=trigger)
        elif mode == "trackers":
            t = msg.get("trackers") or {}
            frame = InputFrame(
                mode="trackers",
                yaw=float(t.get("yaw", 0.0)),
                left_h=float(t.get("left_h", 0.0)),
                right_h=float(t.get("right_h", 0.0)),
                ctrl=Vec3(float(t.get("ctrl_x", cx)), float(t.get("ctrl_y", cy)),
                          float(t.get("ctrl_z", cz))),
                trigger=trigger,
            )
        else:
            return None
        if not frame.is_finite():
            return None
        return quantize_input(frame)
    except (TypeError, ValueError):
        return None


def state_message(world: World, events: list[SimEvent]) -> dict:
    st = world.state
    dt = world.config.world.dt
    return {
        "type": "state",
        "tick": st.tick,
        "time_s": st.tick * dt,
        "participant": {
            "x": st.participant.virtual_position.x,
            "y": st.participant.virtual_position.y,
            "z": st.participant.virtual_position.z,
            "yaw": st.participant.heading_yaw,
        },
        "controller": {
            "x": st.controller.position.x,
            "y": st.controller.position.y,
            "z": st.controller.position.z,
        },
        "platform": {
            "dx": world.platform.displacement[0],
            "dy": world.platform.displacement[1],
            "vx": world.platform.last_command.vx,
            "vy": world.platform.last_command.vy,
        },
        "trees": [
            {
                "id": t.id,
                "x": t.position.x,
                "y": t.position.y,
                "stage": t.bloom_stage,
                "stage_index": discrete_stage(t.bloom_stage, world.config.world.stage_count)[0],
            }
            for t in st.trees
        ],
        "projectiles": [
            {"id": p.id, "x": p.position.x, "y": p.position.y, "z": p.position.z}
            for p in st.projectiles
            if p.despawned_at is None
        ],
        "events": [_event_obj(e, st.tick) for e in events],
    }


def _event_obj(e: SimEvent, tick: int) -> dict:
    obj = {"type": "event", "tick": tick, "time_s": e.time_s, "kind": e.kind.value}
    if e.object_id is not None:
        obj["object_id"] = e.object_id
    if e.tree_id is not None:
        obj["tree_id"] = e.tree_id
    return obj


class SessionRunner:
    """Owns one world, one recorder and the outbound message queue."""

    def __init__(self, config: SimConfig, scenario: ScenarioSpec,
                 record_dir: Optional[str], headless_speed: bool):
        self.config = config
        self.scenario = scenario
        self.record_dir = record_dir
        self.headless_speed = headless_speed
        self.session_id = uuid.uuid4().hex
        self.world = World(config, scenario)
        self.recorder = Recorder(config, scenario, self.session_id, _now_rfc3339())
        self.recorder.start(self.world)
        self.outbound: asyncio.Queue = asyncio.Queue()
        self.started = asyncio.Event()
        self.stopping = asyncio.Event()
        self.latest_input: Optional[tuple[int, InputFrame]] = None
        self.last_applied_seq = -1
        self.last_received_seq = -1
        self.dropped_inputs = 0
        self.held = InputFrame()
        self.archived_to: Optional[str] = None

    def handle_message(self, msg: dict) -> Optional[dict]:
        """Reader-side dispatch; returns an error frame to send, if any."""
        mtype = msg.get("type")
        if mtype == "input":
            seq = msg.get("seq")
            if not isinstance(seq, int) or seq <= self.last_received_seq:
                self.dropped_inputs += 1
                return None
            frame = parse_client_input(msg, self.config.treadmill.v_max)
            if frame is None:
                return {"type": "error", "code": "bad_input"}
            self.last_received_seq = seq
            self.latest_input = (seq, frame)
            self.started.set()
            return None
        if mtype == "start":
            self.started.set()
            return None
        if mtype == "bye":
            self.stopping.set()
            return None
        return {"type": "error", "code": "unknown_type"}

    def _send(self, obj: dict, shed_ok: bool) -> None:
        if shed_ok and self.outbound.qsize() >= OUTBOUND_LIMIT:
            return  # latest-wins: shed state messages under backpressure
        self.outbound.put_nowait(obj)

    async def run(self) -> None:
        """Authoritative tick loop; paced to wall clock unless headless."""
        await self.started.wait()
        dt = self.config.world.dt
        every = max(1, round((1.0 / dt) / BROADCAST_RATE))
        loop = asyncio.get_running_loop()
        t0 = loop.time()
        n = 0
        while not self.stopping.is_set():
            if self.latest_input is not None:
                seq, frame = self.latest_input
                if seq > self.last_applied_seq:
                    self.last_applied_seq = seq
                    self.held = frame
            events = self.world.step(self.held)
            self.recorder.on_tick(self.world, self.held, events)
            for e in events:
                self._send(_event_obj(e, self.world.state.tick), shed_ok=False)
            if self.world.state.tick % every == 0:
                self._send(state_message(self.world, events), shed_ok=True)
            n += 1
            if self.headless_speed:
                if n % 32 == 0:
                    await asyncio.sleep(0)
            else:
                target = t0 + n * dt
                delay = target - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    await asyncio.sleep(0)

    def finalize(self) -> None:
        if self.archived_to is not None:
            return
        archive = self.recorder.finalize()
        if self.record_dir:
            import os

            out = os.path.join(self.record_dir, self.session_id)
            write_session(archive, out)
            self.archived_to = out
            log.info("session %s archived to %s", self.session_id, out)


def create_app(config: SimConfig, scenario: ScenarioSpec,
               record_dir: Optional[str] = None,
               headless_speed: bool = False,
               ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI()
    app.state.active_session: Optional[SessionRunner] = None
    digest = config_digest(config, scenario)

    @app.websocket("/session")
    async def session_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        if app.state.active_session is not None:
            await ws.send_text(json.dumps({"type": "error", "code": "busy"}))
            await ws.close()
            return
        try:
            hello = json.loads(await ws.receive_text())
        except (json.JSONDecodeError, WebSocketDisconnect):
            hello = None
        if not isinstance(hello, dict) or hello.get("type") != "hello":
            try:
                await ws.send_text(json.dumps({"type": "error", "code": "bad_hello"}))
                await ws.close()
            except RuntimeError:
                pass
            return

        runner = SessionRunner(config, scenario, record_dir, headless_speed)
        app.state.active_session = runner
        await ws.send_text(json.dumps({
            "type": "welcome",
            "session_id": runner.session_id,
            "config_digest": digest,
            "config": config_to_obj(config, scenario),
        }))

        async def writer() -> None:
            while True:
                obj = await runner.outbound.get()
                await ws.send_text(json.dumps(obj))

        sim_task = asyncio.create_task(runner.run())
        writer_task = asyncio.create_task(writer())
        try:
            while not runner.stopping.is_set():
                try:
                    text = await ws.receive_text()
                except WebSocketDisconnect:
                    break
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    runner.outbound.put_nowait({"type": "error", "code": "bad_json"})
                    continue
                err = runner.handle_message(msg)
                if err is not None:
                    runner.outbound.put_nowait(err)
        finally:
            # no awaits before finalize: the endpoint task may already be
            # cancelled (client gone), and awaiting would re-raise before
            # the archive lands on disk
            runner.stopping.set()
            runner.started.set()  # unblock a never-started sim task
            sim_task.cancel()
            writer_task.cancel()
            runner.finalize()
            app.state.active_session = None
            try:
                await asyncio.gather(sim_task, writer_task, return_exceptions=True)
                await ws.send_text(json.dumps({"type": "bye",
                                               "session_id": runner.session_id}))
                await ws.close()
            except (RuntimeError, asyncio.CancelledError, Exception):
                pass

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(config: SimConfig, scenario: ScenarioSpec, port: int = 8080,
          record_dir: Optional[str] = None, headless_speed: bool = False,
          ui_dir: Optional[str] = None) -> None:
    import uvicorn

    app = create_app(config, scenario, record_dir=record_dir,
                     headless_speed=headless_speed, ui_dir=ui_dir)
    uvicorn.run(app, host="0.0.0.0", port=port)
