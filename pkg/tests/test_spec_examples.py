"""Cross-module example checks that exercise several pieces together."""

import json
import math

import numpy as np
import pytest

from riskprobe.geo import WorldPoint
from riskprobe.planner import build_situation, probe, select
from riskprobe.rldm import EntityState, Node, NodeLabel
from riskprobe.service import Session, hello_message
from riskprobe.sim import World, load_scenario, make_gap_scenario


def test_gap_snapshot_distances_match_scenario_geometry():
    # distances logged for the first snapshot equal the values recomputed
    # from the scenario document's initial placements
    scenario = make_gap_scenario()
    world = World(scenario)
    truths = {vid: world._true_state(vid, st) for vid, st in world._vehicles.items()}
    for vid, spec in ((v.vehicle_id, v) for v in scenario.vehicles):
        world.graph.ingest_measurement(world._sensor, truths[vid], push_period=0.1)

    by_id = {v.vehicle_id: v for v in scenario.vehicles}
    lane_y = {"merge": 0.0, "through": 3.5}
    lane_x0 = {"merge": 0.0, "through": -80.0}

    def doc_position(vid):
        v = by_id[vid]
        return (lane_x0[v.lane] + v.arc_m, lane_y[v.lane])

    ex, ey = doc_position("ego")
    for other in ("front", "rear", "barrier"):
        ox, oy = doc_position(other)
        expected = math.hypot(ox - ex, oy - ey)
        assert world.graph.distance_between("ego", other) == pytest.approx(expected, abs=1e-9)


def test_selection_is_the_exhaustive_table_minimum():
    # the chosen cell of the full 42-cell gap table equals the brute-force min
    world = World(make_gap_scenario())
    truths = {vid: world._true_state(vid, st) for vid, st in world._vehicles.items()}
    ego = truths["ego"]
    others = [s for vid, s in truths.items() if vid != "ego"]
    situation = build_situation(world.graph, ego, others, world.params, route_lane="through")
    table, samples = probe(situation, world.params)
    assert len(table) == 2 * world.params.probe.n_t
    out = select(situation, table, samples)
    best = min(c.C for c in table.values() if c is not None)
    assert out.chosen_cell().C == best


def test_lowest_cost_index_one_is_chosen():
    # a table whose h=1 cell carries the smallest cost selects index 1
    from test_planner import graph_with_lanes, ego_at
    from riskprobe.planner import PlannerParams
    import dataclasses

    params = PlannerParams()
    sit = build_situation(graph_with_lanes(1), ego_at(v=7.0), [], params)
    table, samples = probe(sit, params)
    floor = min(c.C for c in table.values()) - 1.0
    table[(0, 1)] = dataclasses.replace(table[(0, 1)], C=floor)
    out = select(sit, table, samples)
    assert out.chosen == (0, 1)


def test_scripted_vehicle_follows_velocity_schedule():
    doc = {
        "name": "sched",
        "duration_s": 6.0,
        "map": {"lanes": [
            {"id": "a", "centerline": [[0, 0], [500, 0]]},
            {"id": "b", "centerline": [[0, 3.5], [500, 3.5]], "right_neighbor": "a"},
        ]},
        "vehicles": [
            {"id": "ego", "mode": "human", "lane": "a", "arc_m": 50.0, "v_ms": 5.0},
            {"id": "s", "mode": "scripted", "lane": "b", "arc_m": 100.0, "v_ms": 8.0,
             "schedule": [
                 {"t_s": 1.0, "v_target_ms": 4.0, "accel_ms2": 2.0},
                 {"t_s": 4.0, "v_target_ms": 10.0},
             ]},
        ],
    }
    world = World(load_scenario(doc))
    records = world.run()
    v_of = lambda t: records[int(round(t * 10)) - 1].states["s"]["v"]
    assert v_of(1.0) == pytest.approx(8.0)     # schedule not yet applied
    assert v_of(3.5) == pytest.approx(4.0)     # ramped down at 2 m/s^2 by ~3 s
    assert v_of(4.2) == pytest.approx(10.0)    # second entry jumps (no accel given)


def test_session_send_buffer_drops_oldest():
    session = Session(make_gap_scenario())
    for i in range(40):
        session.enqueue({"type": "state", "seq": i})
    assert len(session.buffer) == 16
    seqs = [json.loads(m)["seq"] for m in session.buffer]
    assert seqs == list(range(24, 40))  # oldest dropped first


def test_hello_reports_probe_bounds():
    scenario = make_gap_scenario()
    world = World(scenario)
    hello = hello_message(scenario, world)
    assert hello["accel_bounds_ms2"] == {"min": -4.0, "max": 3.0}
    assert hello["n_t"] == 21
    lane_ids = {lane["id"] for lane in hello["map"]["lanes"]}
    assert {"merge", "through"} <= lane_ids
