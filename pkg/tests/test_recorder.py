import os

import pytest

from conftest import dense_records, run_session, throw_frames
from mexgen.recorder import (
    FRAMES_HEADER,
    ReplayDivergence,
    SessionArchive,
    ValidationError,
    frame_index_for_tick,
    read_session,
    replay,
    verify_replay,
    write_session,
)
from mexgen.types import InputFrame, Vec3
from mexgen.world import ScenarioSpec, SimConfig


def walk_records(seconds: float, config: SimConfig, vx: float = 0.3):
    n = int(round(seconds / config.world.dt))
    return dense_records(n, lambda i: InputFrame(move_x=vx))


class TestDecimation:
    def test_ten_seconds_gives_101_frames(self, config):
        _, archive = run_session(config, ScenarioSpec(), walk_records(10.0, config))
        assert len(archive.frames) == 101
        times = [f"{f.frame_index / 10.0:.1f}" for f in archive.frames]
        assert times[0] == "0.0"
        assert times[1] == "0.1"
        assert times[-1] == "10.0"
        assert len(times) == len(set(times))

    def test_short_run_records_t0_only(self, config):
        _, archive = run_session(config, ScenarioSpec(), walk_records(0.05, config))
        assert len(archive.frames) == 1
        assert archive.frames[0].frame_index == 0

    def test_frame_index_formula(self):
        dt = 1 / 60
        assert frame_index_for_tick(0, dt) == 0
        assert frame_index_for_tick(5, dt) == 0
        assert frame_index_for_tick(6, dt) == 1
        assert frame_index_for_tick(600, dt) == 100

    def test_projectile_lifecycle_rows(self, config):
        fn = throw_frames(config, press_tick=5, release_tick=12,
                          ctrl_v=Vec3(1.0, 0.0, 2.0))
        _, archive = run_session(config, ScenarioSpec(), dense_records(120, fn))
        assert len({o.object_id for o in archive.objects}) == 1
        events = [o.event for o in archive.objects]
        assert events[0] == "spawn"
        assert events[-1] == "despawn"
        assert events[-2] == "hit"  # ground impact
        assert set(events[1:-2]) <= {"fly"}
        # fly rows sit exactly on the 10 Hz instants between spawn and despawn
        spawn_t, despawn_t = archive.objects[0].time_s, archive.objects[-1].time_s
        expected_fly = [i / 10 for i in range(int(spawn_t * 10) + 1, int(despawn_t * 10) + 1)
                        if i / 10 > spawn_t and i / 10 < despawn_t]
        fly_times = [o.time_s for o in archive.objects if o.event == "fly"]
        assert fly_times == pytest.approx(expected_fly)


class TestWriteRead:
    def test_round_trip_identity(self, config, three_trees, tmp_path):
        fn = throw_frames(config, press_tick=5, release_tick=20)
        _, archive = run_session(config, three_trees, dense_records(180, fn))
        write_session(archive, str(tmp_path))
        loaded = read_session(str(tmp_path))
        assert loaded == archive

    def test_empty_archive_header_only(self, config, tmp_path):
        archive = SessionArchive("s", "2026-01-01T00:00:00Z", config, ScenarioSpec())
        write_session(archive, str(tmp_path))
        assert (tmp_path / "frames.csv").read_text() == FRAMES_HEADER + "\n"
        loaded = read_session(str(tmp_path))
        assert loaded.frames == [] and loaded.inputs == []

    def test_write_is_idempotent(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(1.0, config))
        write_session(archive, str(tmp_path))
        first = {n: (tmp_path / n).read_bytes()
                 for n in ("frames.csv", "objects.csv", "inputs.csv", "config.json")}
        write_session(archive, str(tmp_path))
        for n, data in first.items():
            assert (tmp_path / n).read_bytes() == data

    def test_line_endings_lf_single_final(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(0.5, config))
        write_session(archive, str(tmp_path))
        for name in ("frames.csv", "objects.csv", "inputs.csv"):
            data = (tmp_path / name).read_bytes()
            assert b"\r" not in data
            assert data.endswith(b"\n") and not data.endswith(b"\n\n")

    def test_cadence_gap_rejected(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(1.0, config))
        write_session(archive, str(tmp_path))
        lines = (tmp_path / "frames.csv").read_text().split("\n")
        del lines[3]  # remove the 0.2 s frame
        (tmp_path / "frames.csv").write_text("\n".join(lines))
        with pytest.raises(ValidationError) as err:
            read_session(str(tmp_path))
        assert err.value.code == "CadenceViolation"

    def test_lifecycle_order_rejected(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(0.5, config))
        write_session(archive, str(tmp_path))
        rows = ["9,0.100000,0.000000,0.000000,1.000000,despawn",
                "9,0.200000,0.000000,0.000000,1.000000,spawn"]
        text = (tmp_path / "objects.csv").read_text() + "\n".join(rows) + "\n"
        (tmp_path / "objects.csv").write_text(text)
        with pytest.raises(ValidationError) as err:
            read_session(str(tmp_path))
        assert err.value.code == "LifecycleOrder"

    def test_bad_digest_rejected(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(0.5, config))
        write_session(archive, str(tmp_path))
        meta = (tmp_path / "meta.json").read_text().replace(
            '"config_digest":"', '"config_digest":"0000')
        (tmp_path / "meta.json").write_text(meta)
        with pytest.raises(ValidationError) as err:
            read_session(str(tmp_path))
        assert err.value.code == "BadDigest"

    def test_trigger_column_binary(self, config, tmp_path):
        fn = throw_frames(config, press_tick=5, release_tick=40)
        _, archive = run_session(config, ScenarioSpec(), dense_records(60, fn))
        write_session(archive, str(tmp_path))
        values = {line.split(",")[-1]
                  for line in (tmp_path / "frames.csv").read_text().split("\n")[1:-1]}
        assert values == {"0", "1"}


class TestReplay:
    def test_replay_is_fixed_point(self, config, three_trees, tmp_path):
        fn = throw_frames(config, press_tick=5, release_tick=20)
        _, archive = run_session(config, three_trees, dense_records(240, fn))
        write_session(archive, str(tmp_path))
        verify_replay(str(tmp_path))  # must not raise

    def test_replay_hashes_match_original(self, config, three_trees):
        fn = throw_frames(config, press_tick=5, release_tick=20)
        world, archive = run_session(config, three_trees, dense_records(120, fn))
        result = replay(archive)
        assert result.world.state_hash() == world.state_hash()
        assert result.archive.frames == archive.frames
        assert result.archive.objects == archive.objects

    def test_flipped_input_diverges(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(1.0, config))
        write_session(archive, str(tmp_path))
        lines = (tmp_path / "inputs.csv").read_text().split("\n")
        parts = lines[31].split(",")
        parts[2] = "0.400000"  # was 0.300000
        lines[31] = ",".join(parts)
        (tmp_path / "inputs.csv").write_text("\n".join(lines))
        with pytest.raises(ReplayDivergence) as err:
            verify_replay(str(tmp_path))
        assert err.value.tick >= 30

    def test_edited_frame_row_diverges(self, config, tmp_path):
        _, archive = run_session(config, ScenarioSpec(), walk_records(1.0, config))
        write_session(archive, str(tmp_path))
        text = (tmp_path / "frames.csv").read_text()
        (tmp_path / "frames.csv").write_text(text.replace("0.150000", "0.151000"))
        with pytest.raises(ReplayDivergence):
            verify_replay(str(tmp_path))

    def test_empty_session_replays(self, config, tmp_path):
        archive = SessionArchive("s", "2026-01-01T00:00:00Z", config, ScenarioSpec())
        write_session(archive, str(tmp_path))
        verify_replay(str(tmp_path))
        result = replay(archive)
        assert result.world.state.tick == 0
