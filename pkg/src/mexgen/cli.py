"""Operator command line: simulate, replay, plot, validate, serve.

Exit codes: 0 ok, 2 usage/validation, 3 replay divergence, 4 analytic
tolerance failure.
"""
from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
import uuid

from .analytics import DegenerateTrack, check_spawn_alignment, export_plot, fit_parabola, segment_throws
from .config import config_from_obj, load_run_config
from .recorder import (
    INPUTS_HEADER,
    InputRecord,
    Recorder,
    ReplayDivergence,
    ValidationError,
    quantize_input,
    read_session,
    replay as replay_archive,
    verify_replay,
    write_session,
)
from .types import InputFrame, SimError, Vec3
from .world import ScenarioSpec, SimConfig, World, load_scenario

log = logging.getLogger("mexgen")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3
EXIT_TOLERANCE = 4


def _setup_logging() -> None:
    level = os.environ.get("MEXGEN_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _now_rfc3339() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_script(path: str) -> list[InputRecord]:
    """Parse a script file (inputs.csv schema, ascending sparse ticks)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != INPUTS_HEADER:
        raise SimError(f"script header must be: {INPUTS_HEADER}")
    records: list[InputRecord] = []
    last_tick = -1
    for row_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise SimError(f"script row {row_no}: expected 11 columns, got {len(parts)}")
        try:
            tick = int(parts[0])
            mode = parts[1]
            nums = [float(v) for v in parts[2:10]]
            trigger = {"0": False, "1": True}[parts[10]]
        except (ValueError, KeyError) as exc:
            raise SimError(f"script row {row_no}: {exc}") from exc
        if mode not in ("direct", "trackers"):
            raise SimError(f"script row {row_no}: bad mode {mode!r}")
        if tick <= last_tick:
            raise SimError(f"script row {row_no}: tick {tick} not ascending")
        last_tick = tick
        records.append(
            InputRecord(
                tick=tick,
                frame=quantize_input(InputFrame(
                    mode=mode,
                    move_x=nums[0], move_y=nums[1], yaw=nums[2],
                    left_h=nums[3], right_h=nums[4],
                    ctrl=Vec3(nums[5], nums[6], nums[7]),
                    trigger=trigger,
                )),
            )
        )
    return records


def run_scripted(config: SimConfig, scenario: ScenarioSpec,
                 script: list[InputRecord], session_id: str,
                 started_at: str) -> tuple[World, Recorder]:
    """Run a headless session with sample-and-hold over sparse script rows."""
    world = World(config, scenario)
    recorder = Recorder(config, scenario, session_id, started_at)
    recorder.start(world)
    total = (script[-1].tick + 1) if script else 0
    held = InputFrame()
    idx = 0
    for tick in range(total):
        if idx < len(script) and script[idx].tick == tick:
            held = script[idx].frame
            idx += 1
        events = world.step(held)
        recorder.on_tick(world, held, events)
    return world, recorder


def _load_configs(args) -> tuple[SimConfig, ScenarioSpec]:
    config, scenario = SimConfig(), ScenarioSpec()
    if getattr(args, "config", None):
        config, scenario = load_run_config(args.config)
    if getattr(args, "scenario", None):
        scenario = load_scenario(args.scenario)
    return config, scenario


def cmd_simulate(args) -> int:
    try:
        config, scenario = _load_configs(args)
        script = load_script(args.script)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (SimError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    session_id = args.session_id or uuid.uuid4().hex
    world, recorder = run_scripted(config, scenario, script, session_id, _now_rfc3339())
    archive = recorder.finalize()
    write_session(archive, args.out)
    log.info("simulated %d ticks, %d frames -> %s",
             archive.tick_count, len(archive.frames), args.out)
    print(json.dumps({"session_id": session_id, "ticks": archive.tick_count,
                      "frames": len(archive.frames), "objects": len(archive.objects)}))
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        if args.verify:
            verify_replay(args.session)
            print("replay verified: byte-identical")
        else:
            archive = read_session(args.session)
            result = replay_archive(archive)
            print(json.dumps({"final_tick": result.world.state.tick,
                              "final_hash": result.hashes[-1]}))
        return EXIT_OK
    except ReplayDivergence as exc:
        print(f"replay divergence at tick {exc.tick}: {exc.detail}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValidationError, SimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def cmd_plot(args) -> int:
    if args.figure not in ("throws3d", "paths2d"):
        print(f"error: unknown figure kind {args.figure!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        archive = read_session(args.session)
        svg = export_plot(archive, args.figure)
    except (ValidationError, SimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        archive = read_session(args.session)
    except ValidationError as exc:
        print(json.dumps({"ok": False, "failed": exc.code, "detail": exc.detail}))
        return EXIT_TOLERANCE

    g_ref = archive.config.world.gravity
    failures = []
    fits = []
    for seg in segment_throws(archive):
        try:
            fit = fit_parabola(list(seg.track))
        except DegenerateTrack:
            fits.append({"object_id": seg.object_id, "skipped": "degenerate"})
            continue
        ok = abs(fit.g_est - g_ref) <= 0.01 * max(g_ref, 1.0)
        fits.append({"object_id": seg.object_id, "g_est": fit.g_est,
                     "rms_m": fit.rms_residual, "ok": ok})
        if not ok:
            failures.append(f"g_est {fit.g_est:.4f} for object {seg.object_id}")

    alignment = check_spawn_alignment(archive)
    if alignment["max_m"] is not None:
        v_ctrl = _max_controller_speed(archive)
        bound = v_ctrl * 0.05 + 1e-6
        if alignment["max_m"] > bound:
            failures.append(
                f"alignment max {alignment['max_m']:.6f} m exceeds bound {bound:.6f} m")

    report = {"ok": not failures, "frames": len(archive.frames),
              "objects": len(archive.objects), "fits": fits,
              "alignment": alignment}
    if failures:
        report["failed"] = failures
    print(json.dumps(report))
    return EXIT_OK if not failures else EXIT_TOLERANCE


def _max_controller_speed(archive) -> float:
    v = 0.0
    frames = archive.frames
    for a, b in zip(frames, frames[1:]):
        v = max(v, a.controller.dist(b.controller) / 0.1)
    return v


def cmd_serve(args) -> int:
    from .service import serve
    try:
        config, scenario = _load_configs(args)
    except (SimError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    serve(config, scenario, port=args.port, record_dir=args.record,
          headless_speed=args.headless_speed, ui_dir=args.ui_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mexgen")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scripted headless session")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--script", required=True, help="timed input script (inputs.csv schema)")
    p.add_argument("--config", help="run-config JSON file")
    p.add_argument("--out", required=True, help="session output directory")
    p.add_argument("--session-id", help="override the generated session id")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="re-simulate a recorded session")
    p.add_argument("--session", required=True)
    p.add_argument("--verify", action="store_true",
                   help="byte-compare regenerated CSVs against the archive")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("plot", help="export an SVG figure from a session")
    p.add_argument("--session", required=True)
    p.add_argument("--figure", required=True, help="throws3d | paths2d")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate", help="run analytic checks over a session")
    p.add_argument("--session", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="serve a live session over WebSocket")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--scenario")
    p.add_argument("--config")
    p.add_argument("--record", help="directory to archive finished sessions into")
    p.add_argument("--headless-speed", action="store_true",
                   help="tick as fast as possible instead of real time")
    p.add_argument("--ui-dir", help="serve static UI files from this directory")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
