import io
import json

import numpy as np
import pytest

from riskprobe.sim import (
    NoiseModel,
    ScenarioError,
    World,
    advice_timeline,
    direction_sequence,
    export_risk_field_grid,
    export_risk_field_jsonl,
    export_trace_tsv,
    load_scenario,
    make_gap_scenario,
    make_no_gap_scenario,
    make_open_road_scenario,
    risk_field_block,
    summarize,
)


def minimal_doc(**overrides):
    doc = {
        "name": "t",
        "duration_s": 1.0,
        "map": {"lanes": [{"id": "a", "centerline": [[0, 0], [500, 0]]}]},
        "vehicles": [{"id": "ego", "mode": "human", "lane": "a", "arc_m": 50.0, "v_ms": 5.0}],
    }
    doc.update(overrides)
    return doc


class TestLoadScenario:
    def test_round_trip_through_json(self):
        sc = load_scenario(json.dumps(minimal_doc()))
        assert sc.ego_id == "ego"

    def test_missing_ego_rejected(self):
        doc = minimal_doc(vehicles=[{"id": "v", "mode": "constant", "lane": "a"}])
        with pytest.raises(ScenarioError, match="exactly one ego"):
            load_scenario(doc)

    def test_two_egos_rejected(self):
        doc = minimal_doc()
        doc["vehicles"].append({"id": "e2", "mode": "human", "lane": "a"})
        with pytest.raises(ScenarioError, match="exactly one ego"):
            load_scenario(doc)

    def test_duplicate_id_rejected(self):
        doc = minimal_doc()
        doc["vehicles"].append(dict(doc["vehicles"][0]))
        with pytest.raises(ScenarioError, match="duplicate vehicle id"):
            load_scenario(doc)

    def test_unsorted_schedule_rejected(self):
        doc = minimal_doc()
        doc["vehicles"].append({
            "id": "s", "mode": "scripted", "lane": "a",
            "schedule": [{"t_s": 2.0, "v_target_ms": 1.0}, {"t_s": 1.0, "v_target_ms": 2.0}],
        })
        with pytest.raises(ScenarioError, match="time-sorted"):
            load_scenario(doc)

    def test_bad_mode_and_velocity_rejected(self):
        with pytest.raises(ScenarioError, match="mode"):
            load_scenario(minimal_doc(vehicles=[
                {"id": "ego", "mode": "warp", "lane": "a"}]))
        with pytest.raises(ScenarioError, match="v_ms"):
            load_scenario(minimal_doc(vehicles=[
                {"id": "ego", "mode": "human", "lane": "a", "v_ms": -1.0}]))

    def test_unknown_param_block_rejected(self):
        with pytest.raises(ScenarioError, match="unknown"):
            load_scenario(minimal_doc(params={"warp_factor": 9}))

    def test_bundled_scenarios_validate(self):
        gap = make_gap_scenario()
        assert len(gap.vehicles) == 4  # ego, two stream cars, barrier
        assert gap.vehicles[0].v_ms == 7.0
        nogap = make_no_gap_scenario()
        assert len(nogap.vehicles) == 5
        assert nogap.vehicles[0].v_ms == 5.0


class TestStepping:
    def test_cycle_count(self):
        world = World(make_open_road_scenario(duration_s=12.0))
        records = world.run()
        assert len(records) == 120  # 12 s at 10 Hz

    def test_zero_noise_replay_identical(self):
        def trace_bytes():
            world = World(make_gap_scenario())
            world.run(duration_s=3.0)
            buf = io.StringIO()
            export_trace_tsv(world.records, buf)
            return buf.getvalue()

        assert trace_bytes() == trace_bytes()

    def test_seeded_noise_replay_identical(self):
        def trace_bytes():
            sc = make_gap_scenario()
            sc.noise = NoiseModel(enabled=True, position_std_m=0.5, velocity_std_ms=0.3)
            world = World(sc)
            world.run(duration_s=3.0)
            buf = io.StringIO()
            export_trace_tsv(world.records, buf)
            return buf.getvalue()

        assert trace_bytes() == trace_bytes()

    def test_command_clamped_and_flagged(self):
        from riskprobe.sim import EgoCommand

        world = World(make_open_road_scenario())
        rec = world.step(EgoCommand(accel=99.0))
        assert rec.clamped_command

    def test_gap_advice_left_then_straight(self):
        records = World(make_gap_scenario()).run()
        assert direction_sequence(records) == ["left", "straight"]
        assert records[0].speed_advice == "accelerate"
        assert records[0].v_tar > records[0].v_0

    def test_no_gap_three_phases(self):
        records = World(make_no_gap_scenario()).run()
        assert direction_sequence(records) == ["straight", "left", "straight"]
        assert records[0].speed_advice == "brake"
        assert records[0].v_tar < records[0].v_0

    def test_both_scenarios_end_on_the_through_lane(self):
        for factory in (make_gap_scenario, make_no_gap_scenario):
            records = World(factory()).run()
            assert records[-1].ego_lane == "through"


class TestRiskFieldExport:
    def test_empty_road_all_blue(self):
        world = World(make_open_road_scenario())
        rec = world.step()
        block = risk_field_block(rec)
        peak = max(
            max(p["rate_pct_per_s"]) for o in block["options"] for p in o["profiles"]
        )
        assert peak < 0.5  # everything below the blue threshold

    def test_no_gap_snapshot_has_two_hot_regions(self):
        world = World(make_no_gap_scenario())
        rec = world.step()
        rf = rec.risk_field
        s = rf.s_grid
        early = s < 3.0
        late = s >= 3.0
        early_hot = any(np.any(opt.rates_pct[:, early] > 1.0) for opt in rf.options)
        change = next(o for o in rf.options if o.direction == "left")
        accel_rows = [h for h in range(len(change.v_ends)) if change.v_ends[h] > rec.v_0]
        late_hot = np.any(change.rates_pct[np.ix_(accel_rows, np.where(late)[0])] > 1.0)
        assert early_hot and late_hot

    def test_chosen_avoids_hot_cells_when_possible(self):
        world = World(make_gap_scenario())
        rec = world.step()
        rf = rec.risk_field
        peaks = {}
        for i, opt in enumerate(rf.options):
            for h in range(len(opt.v_ends)):
                peaks[(i, h)] = float(opt.rates_pct[h].max())
        if min(peaks.values()) <= 1.0:
            assert peaks[tuple(rf.chosen)] <= 1.0

    def test_grid_file_format(self):
        world = World(make_open_road_scenario())
        rec = world.step()
        buf = io.StringIO()
        export_risk_field_grid(rec, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("#")
        header = lines[1].split("\t")
        assert header[:5] == ["option", "direction", "h", "v_end_ms", "chosen"]
        data = [ln.split("\t") for ln in lines[2:]]
        assert len(data) == len(rec.risk_field.options) * world.params.probe.n_t
        assert sum(row[4] == "*" for row in data) == 1

    def test_jsonl_export_parses(self):
        world = World(make_open_road_scenario())
        world.run(duration_s=0.5)
        buf = io.StringIO()
        export_risk_field_jsonl(world.records, buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 5
        block = json.loads(lines[0])
        assert block["thresholds_pct_per_s"] == [0.5, 1.0]


class TestSummaries:
    def test_summary_fields(self):
        records = World(make_gap_scenario()).run()
        s = summarize(records)
        assert s["cycles"] == 120
        assert s["final_ego_lane"] == "through"
        assert s["cycle_ms_p95"] > 0
        assert s["min_distance_m"]["front"] > 5.0
        assert s["advice_timeline"][0]["direction"] == "left"

    def test_timeline_collapses_repeats(self):
        records = World(make_open_road_scenario()).run()
        tl = advice_timeline(records)
        keys = [(e["direction"], e["speed"]) for e in tl]
        assert all(a != b for a, b in zip(keys, keys[1:]))

    def test_trace_tsv_columns(self):
        world = World(make_open_road_scenario())
        world.run(duration_s=0.3)
        buf = io.StringIO()
        export_trace_tsv(world.records, buf)
        lines = buf.getvalue().splitlines()
        header = lines[0].split("\t")
        assert header[0] == "t"
        assert "v_tar" in header and "direction" in header
        assert len(lines) == 4  # header + 3 cycles
