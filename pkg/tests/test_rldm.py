import itertools
import json
import math

import numpy as np
import pytest

from riskprobe.geo import WorldPoint
from riskprobe.rldm import (
    EntityState,
    GraphError,
    MapGraph,
    Node,
    NodeLabel,
    RelationLabel,
    build_path,
    filter_obstacles,
    load_map,
    project_to_path,
)


def two_lane_graph():
    return load_map({
        "lanes": [
            {"id": "merge", "centerline": [[0.0, 0.0], [150.0, 0.0]],
             "left_neighbor": "through"},
            {"id": "through", "centerline": [[-50.0, 3.5], [400.0, 3.5]],
             "right_neighbor": "merge"},
        ]
    })


class TestGraphSchema:
    def test_contains_direction_enforced(self):
        g = MapGraph()
        g.add_node(Node("L1", NodeLabel.LANE_SEGMENT, {"centerline": [[0, 0], [1, 0]]}))
        g.add_node(Node("V1", NodeLabel.VEHICLE))
        g.add_relation("L1", RelationLabel.CONTAINS, "V1")
        with pytest.raises(GraphError):
            g.add_relation("V1", RelationLabel.CONTAINS, "L1")

    def test_has_measurement_needs_sensor_source(self):
        g = MapGraph()
        g.add_node(Node("S1", NodeLabel.SENSOR, {"type": "camera"}))
        g.add_node(Node("V2", NodeLabel.VEHICLE))
        g.add_relation("S1", RelationLabel.HAS_MEASUREMENT, "V2")
        with pytest.raises(GraphError):
            g.add_relation("V2", RelationLabel.HAS_MEASUREMENT, "S1")

    def test_dangling_endpoint_rejected(self):
        g = MapGraph()
        g.add_node(Node("A", NodeLabel.LANE_SEGMENT))
        with pytest.raises(GraphError):
            g.add_relation("A", RelationLabel.SUCCESSOR, "missing")

    def test_duplicate_relation_idempotent(self):
        g = MapGraph()
        g.add_node(Node("A", NodeLabel.LANE_SEGMENT))
        g.add_node(Node("B", NodeLabel.LANE_SEGMENT))
        g.add_relation("A", RelationLabel.SUCCESSOR, "B")
        rev = g.revision
        g.add_relation("A", RelationLabel.SUCCESSOR, "B")
        assert g.revision == rev
        assert len(g.relations) == 1

    def test_duplicate_node_id_rejected(self):
        g = MapGraph()
        g.add_node(Node("A", NodeLabel.ROAD))
        with pytest.raises(GraphError):
            g.add_node(Node("A", NodeLabel.ROAD))

    def test_sensor_requires_type_attribute(self):
        g = MapGraph()
        with pytest.raises(GraphError):
            g.add_node(Node("S", NodeLabel.SENSOR))
        g.add_node(Node("S", NodeLabel.SENSOR, {"type": "camera"}))

    def test_road_limited_to_two_half_roads(self):
        g = MapGraph()
        g.add_node(Node("R", NodeLabel.ROAD))
        for i in range(2):
            g.add_node(Node(f"H{i}", NodeLabel.HALF_ROAD))
            g.add_relation("R", RelationLabel.HAS_PART, f"H{i}")
        g.add_node(Node("H2", NodeLabel.HALF_ROAD))
        with pytest.raises(GraphError):
            g.add_relation("R", RelationLabel.HAS_PART, "H2")


class TestPaths:
    def test_two_lane_road_yields_two_paths(self):
        g = two_lane_graph()
        paths = g.retrieve_paths("merge", horizon=300.0)
        assert len(paths) == 2  # stay plus one neighbor

    def test_isolated_lane_yields_one_path(self):
        g = load_map({"lanes": [{"id": "solo", "centerline": [[0, 0], [100, 0]]}]})
        assert len(g.retrieve_paths("solo", horizon=300.0)) == 1

    def test_successor_chain_truncated_at_horizon(self):
        lanes = [
            {"id": "a", "centerline": [[0, 0], [50, 0]], "successors": ["b"]},
            {"id": "b", "centerline": [[50, 0], [100, 0]], "successors": ["c"]},
            {"id": "c", "centerline": [[100, 0], [150, 0]]},
        ]
        g = load_map({"lanes": lanes})
        path = g.retrieve_paths("a", horizon=120.0)[0]
        assert path.length == pytest.approx(120.0, abs=1.0)
        assert path.lane_ids == ("a", "b", "c")

    def test_missing_centerline_rejected(self):
        g = MapGraph()
        g.add_node(Node("bare", NodeLabel.LANE_SEGMENT))
        with pytest.raises(GraphError):
            g.retrieve_paths("bare", horizon=100.0)

    def test_resampled_spacing_and_monotone_arclength(self):
        g = two_lane_graph()
        path = g.retrieve_paths("merge", horizon=300.0)[0]
        assert np.all(np.diff(path.arclength) > 0)
        assert np.max(np.diff(path.arclength)) <= 1.0 + 1e-9

    def test_straight_lane_curvature_zero(self):
        g = two_lane_graph()
        path = g.retrieve_paths("merge", horizon=300.0)[0]
        assert np.max(np.abs(path.curvature)) <= 1e-6

    def test_circular_arc_curvature(self):
        radius = 100.0
        theta = np.linspace(0, np.pi / 2, 200)
        pts = np.stack([radius * np.sin(theta), radius * (1 - np.cos(theta))], axis=1)
        g = load_map({"lanes": [{"id": "arc", "centerline": pts.tolist()}]})
        path = g.retrieve_paths("arc", horizon=1000.0)[0]
        interior = path.curvature[2:-2]
        assert np.allclose(np.abs(interior), 0.01, atol=5e-4)


class TestProjection:
    def test_point_on_polyline(self):
        path = build_path([[0, 0], [100, 0]], ("l",))
        proj = project_to_path(WorldPoint(40.0, 0.0), path)
        assert proj.d_proj == pytest.approx(0.0, abs=1e-12)
        assert proj.arclength == pytest.approx(40.0, abs=1e-9)

    def test_left_offset_positive(self):
        path = build_path([[0, 0], [100, 0]], ("l",))
        proj = project_to_path(WorldPoint(40.0, 3.0), path)
        assert proj.d_proj == pytest.approx(3.0, abs=1e-9)
        proj_right = project_to_path(WorldPoint(40.0, -3.0), path)
        assert proj_right.d_proj == pytest.approx(-3.0, abs=1e-9)

    def test_beyond_end_clamps(self):
        path = build_path([[0, 0], [100, 0]], ("l",))
        point = WorldPoint(130.0, 2.0)
        proj = project_to_path(point, path)
        # brute-force nearest-vertex oracle
        d_vertices = np.linalg.norm(path.points - [point.x, point.y], axis=1)
        assert proj.arclength == pytest.approx(path.length)
        assert abs(proj.d_proj) == pytest.approx(float(d_vertices.min()), rel=1e-9)


class TestGeofence:
    def make_paths(self):
        g = two_lane_graph()
        return g.retrieve_paths("merge", horizon=300.0)

    def entity(self, x, y, vid="v"):
        return EntityState(vid, WorldPoint(x, y), 5.0)

    def test_near_parallel_lane_kept(self):
        kept = filter_obstacles([self.entity(50.0, 5.5)], self.make_paths())
        assert len(kept) == 1
        assert kept[0].d_proj == pytest.approx(2.0, abs=1e-9)
        assert kept[0].path_index == 1  # nearest is the through lane

    def test_far_from_every_path_dropped(self):
        kept = filter_obstacles([self.entity(50.0, 11.5)], self.make_paths())
        assert kept == []

    def test_boundary_is_inclusive(self):
        kept = filter_obstacles([self.entity(50.0, 8.5)], self.make_paths())
        assert len(kept) == 1  # exactly 5.0 m from the through lane

    def test_idempotent_and_order_independent(self):
        paths = self.make_paths()
        entities = [self.entity(30.0, 0.5, "a"), self.entity(60.0, 9.0, "b"),
                    self.entity(90.0, 3.0, "c")]
        base = filter_obstacles(entities, paths)
        again = filter_obstacles(base, paths)
        assert [e.entity_id for e in again] == [e.entity_id for e in base]
        for perm in itertools.permutations(entities):
            out = filter_obstacles(list(perm), paths)
            assert {e.entity_id for e in out} == {e.entity_id for e in base}


class TestIngestion:
    def make_graph(self):
        g = two_lane_graph()
        g.add_node(Node("cam", NodeLabel.SENSOR, {"type": "camera"}))
        return g

    def measurement(self, t, x=50.0, y=0.0, vid="V3"):
        return EntityState(vid, WorldPoint(x, y), 5.0, timestamp=t)

    def test_first_sighting_creates_node_and_edges(self):
        g = self.make_graph()
        assert g.ingest_measurement("cam", self.measurement(0.0))
        assert g.nodes["V3"].label is NodeLabel.VEHICLE
        assert ("cam", RelationLabel.HAS_MEASUREMENT, "V3") in g.relations
        assert g.contained_lane("V3") == "merge"

    def test_fast_stream_coalesced_to_push_period(self):
        g = self.make_graph()
        pushes = sum(
            g.ingest_measurement("cam", self.measurement(t=i * 0.01, x=50.0 + i * 0.05), 0.1)
            for i in range(100)
        )
        assert pushes <= 10

    def test_lane_change_moves_contains_edge(self):
        g = self.make_graph()
        g.ingest_measurement("cam", self.measurement(0.0, y=0.0))
        # clearly on the through lane, repeated enough to beat the stickiness
        for i in range(1, 5):
            g.ingest_measurement("cam", self.measurement(i * 0.1, y=3.5))
        assert g.contained_lane("V3") == "through"

    def test_lane_assignment_sticky_under_jitter(self):
        g = self.make_graph()
        g.ingest_measurement("cam", self.measurement(0.0, y=0.0))
        # single borderline sample does not move the edge
        g.ingest_measurement("cam", self.measurement(0.1, y=1.9))
        assert g.contained_lane("V3") == "merge"

    def test_unknown_sensor_rejected(self):
        g = self.make_graph()
        with pytest.raises(GraphError):
            g.ingest_measurement("nope", self.measurement(0.0))

    def test_stale_timestamp_rejected(self):
        g = self.make_graph()
        g.ingest_measurement("cam", self.measurement(1.0))
        with pytest.raises(GraphError):
            g.ingest_measurement("cam", self.measurement(0.5))

    def test_contains_edge_tracks_clearly_nearest_lane(self):
        # after enough consecutive measurements clearly nearest to one lane,
        # the contains edge must point at it (stabilized nearest-lane rule)
        g = self.make_graph()
        rng = np.random.default_rng(0)
        t = 0.0
        streak_lane, streak = None, 0
        for _ in range(60):
            t += 0.1
            y = float(rng.uniform(0.0, 3.5))
            g.ingest_measurement("cam", self.measurement(t, y=y))
            dists = {
                o: abs(project_to_path(WorldPoint(50.0, y), g.lane_path(o)).d_proj)
                for o in ("merge", "through")
            }
            best = min(dists, key=dists.get)
            other = "merge" if best == "through" else "through"
            clear = dists[best] + MapGraph.LANE_STICKINESS_M < dists[other]
            if clear and best == streak_lane:
                streak += 1
            elif clear:
                streak_lane, streak = best, 1
            else:
                streak_lane, streak = None, 0
            if streak >= MapGraph.LANE_SWITCH_CONFIRMATIONS:
                assert g.contained_lane("V3") == streak_lane


class TestDistance:
    def test_identical_positions(self):
        g = two_lane_graph()
        g.add_node(Node("cam", NodeLabel.SENSOR, {"type": "camera"}))
        g.ingest_measurement("cam", EntityState("a", WorldPoint(10, 0), 1.0, timestamp=0.0))
        g.ingest_measurement("cam", EntityState("b", WorldPoint(10, 0), 1.0, timestamp=0.0))
        assert g.distance_between("a", "b") == 0.0

    def test_pythagorean(self):
        g = two_lane_graph()
        g.add_node(Node("cam", NodeLabel.SENSOR, {"type": "camera"}))
        g.ingest_measurement("cam", EntityState("a", WorldPoint(0, 0), 1.0, timestamp=0.0))
        g.ingest_measurement("cam", EntityState("b", WorldPoint(3, 4), 1.0, timestamp=0.0))
        assert g.distance_between("a", "b") == pytest.approx(5.0)

    def test_missing_position_rejected(self):
        g = two_lane_graph()
        with pytest.raises(GraphError):
            g.distance_between("merge", "through")


class TestSnapshot:
    def test_round_trip(self):
        g = two_lane_graph()
        g.add_node(Node("cam", NodeLabel.SENSOR, {"type": "camera"}))
        g.ingest_measurement("cam", EntityState("V9", WorldPoint(20, 0), 4.0, timestamp=0.0))
        snap = g.export_snapshot()
        text = json.dumps(snap)  # must be JSON-serializable
        restored = MapGraph.from_snapshot(json.loads(text))
        assert set(restored.nodes) == set(g.nodes)
        assert restored.relations == g.relations
        assert restored.nodes["V9"].attributes["v"] == 4.0


class TestLoadMap:
    def test_geodetic_centerline_converted(self):
        doc = {
            "projection": {"lat0_deg": 0.0},
            "lanes": [{
                "id": "geo",
                "frame": "geodetic_deg",
                "centerline": [[0.0, 0.0], [0.0, 1e-3]],
            }],
        }
        g = load_map(doc)
        pts = np.asarray(g.nodes["geo"].attributes["centerline"])
        # 1e-3 deg of longitude at the equator
        assert pts[1][0] == pytest.approx(6_371_000 * math.radians(1e-3), rel=1e-9)
        assert pts[1][1] == pytest.approx(0.0, abs=1e-9)

    def test_hierarchy_created(self):
        g = two_lane_graph()
        roads = [n for n in g.nodes.values() if n.label is NodeLabel.ROAD]
        halves = [n for n in g.nodes.values() if n.label is NodeLabel.HALF_ROAD]
        assert len(roads) == 1 and len(halves) == 1

    def test_errors_with_field_context(self):
        with pytest.raises(GraphError):
            load_map({"lanes": []})
        with pytest.raises(GraphError):
            load_map({"lanes": [{"id": "x", "centerline": [[0, 0]]}]})
        with pytest.raises(GraphError):
            load_map({"lanes": [
                {"id": "x", "centerline": [[0, 0], [1, 0]]},
                {"id": "x", "centerline": [[0, 0], [1, 0]]},
            ]})
