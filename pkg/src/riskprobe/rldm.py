"""Relational local dynamic map: a labeled graph fusing static road geometry
with dynamic entities.

Static layer: Road -> HalfRoad -> LaneSegment hierarchy connected by hasPart
relations, with lane centerlines stored as node attributes. Dynamic layer:
Sensor and Vehicle nodes linked by hasMeasurement and contains relations.
Transient and quasi-static layers are reserved labels only; no operations
touch them.

Path retrieval resamples centerline chains to <= 1 m spacing and attaches a
finite-difference curvature, which downstream modules use for predictions
and curve risk. Obstacle geofencing drops entities farther than 5 m lateral
offset from every driving path.

Concurrency: single writer, multiple readers. Ingestion mutates the graph
between planning cycles; planner consumers work on immutable snapshots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .geo import GeoPoint, ProjectionConfig, WorldPoint, geodetic_to_world

GEOFENCE_MAX_OFFSET_M = 5.0
RESAMPLE_SPACING_M = 1.0


class GraphError(ValueError):
    """Raised on schema violations: dangling endpoints, bad labels, missing data."""


class NodeLabel(str, Enum):
    ROAD = "Road"
    HALF_ROAD = "HalfRoad"
    LANE_SEGMENT = "LaneSegment"
    SENSOR = "Sensor"
    VEHICLE = "Vehicle"
    MARKING = "Marking"
    # Reserved for the transient / quasi-static layers (not built).
    TRANSIENT = "Transient"
    QUASI_STATIC = "QuasiStatic"


class RelationLabel(str, Enum):
    HAS_PART = "hasPart"
    HAS_MEASUREMENT = "hasMeasurement"
    CONTAINS = "contains"
    SUCCESSOR = "successor"
    NEIGHBOR = "neighbor"


@dataclass
class Node:
    id: str
    label: NodeLabel
    attributes: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Path:
    """Arclength-parameterized polyline with per-point curvature.

    points is (N, 2) world-frame meters; arclength is strictly increasing
    cumulative meters; curvature is 1/m (unsigned magnitude is not enforced,
    sign follows the turn direction). lane_ids records the source lanes.
    """

    points: np.ndarray
    arclength: np.ndarray
    curvature: np.ndarray
    lane_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise GraphError("path needs at least two points")
        if not np.all(np.diff(self.arclength) > 0):
            raise GraphError("path arclength must be strictly increasing")
        if not np.all(np.isfinite(self.curvature)):
            raise GraphError("path curvature must be finite")

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def point_at(self, arc) -> np.ndarray:
        """Interpolated position(s) at the given arclength(s); clamps at ends."""
        x = np.interp(arc, self.arclength, self.points[:, 0])
        y = np.interp(arc, self.arclength, self.points[:, 1])
        return np.stack([x, y], axis=-1)

    def curvature_at(self, arc) -> np.ndarray:
        return np.interp(arc, self.arclength, self.curvature)

    def tangent_at(self, arc: float) -> np.ndarray:
        """Unit tangent of the segment containing arc (end segments at the ends)."""
        i = int(np.clip(np.searchsorted(self.arclength, arc, side="right") - 1, 0, len(self.points) - 2))
        d = self.points[i + 1] - self.points[i]
        n = float(np.hypot(d[0], d[1]))
        return d / n

    def tangents_at(self, arc) -> np.ndarray:
        """Unit tangents at the given arclength(s), clamped at the path ends."""
        seg = np.diff(self.points, axis=0)
        seg /= np.linalg.norm(seg, axis=1, keepdims=True)
        i = np.clip(np.searchsorted(self.arclength, arc, side="right") - 1, 0, len(seg) - 1)
        return seg[i]

    def cropped(self, start_arc: float) -> "Path":
        """Sub-path from start_arc to the end, re-zeroed at the new start."""
        if start_arc >= self.length:
            raise GraphError("crop start beyond path end")
        start_arc = max(0.0, start_arc)
        keep = self.arclength > start_arc + 1e-9
        points = np.vstack([self.point_at(start_arc), self.points[keep]])
        arcs = np.concatenate([[start_arc], self.arclength[keep]]) - start_arc
        curv = np.concatenate([[float(self.curvature_at(start_arc))], self.curvature[keep]])
        return Path(points=points, arclength=arcs, curvature=curv, lane_ids=self.lane_ids)


@dataclass(frozen=True)
class ProjectionResult:
    """Nearest-point projection onto a path polyline.

    d_proj is the signed lateral offset, positive to the left of the path
    direction; arclength is clamped to the path bounds.
    """

    arclength: float
    d_proj: float
    segment_index: int


@dataclass
class EntityState:
    """One measured traffic participant at one timestamp.

    The path annotation fields are filled by filter_obstacles; raw sensor
    states leave them as None.
    """

    entity_id: str
    position: WorldPoint
    v: float
    heading: float = 0.0
    timestamp: float = 0.0
    path_index: Optional[int] = None
    path: Optional[Path] = None
    arc_position: Optional[float] = None
    d_proj: Optional[float] = None

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"entity {self.entity_id}: velocity must be >= 0")


def resample_polyline(points: np.ndarray, spacing: float = RESAMPLE_SPACING_M) -> tuple[np.ndarray, np.ndarray]:
    """Resample a polyline to an even grid with step <= spacing.

    Returns (points, arclength). Duplicate consecutive input points are
    dropped first so the arclength is strictly increasing.
    """
    pts = np.asarray(points, dtype=np.float64)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-9])
    pts = pts[keep]
    if len(pts) < 2:
        raise GraphError("polyline degenerate after removing duplicate points")
    arcs = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    total = arcs[-1]
    n = max(2, int(math.ceil(total / spacing)) + 1)
    grid = np.linspace(0.0, total, n)
    out = np.stack([np.interp(grid, arcs, pts[:, 0]), np.interp(grid, arcs, pts[:, 1])], axis=1)
    return out, grid


def polyline_curvature(points: np.ndarray, arclength: np.ndarray) -> np.ndarray:
    """Signed curvature from the finite difference of the tangent angle.

    Tangent angles live on segment midpoints; a central-difference gradient
    cancels the alternating noise that resampling leaves on dense inputs.
    """
    d = np.diff(points, axis=0)
    theta = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    if len(theta) == 1:
        return np.zeros(len(points))
    mid = 0.5 * (arclength[:-1] + arclength[1:])
    kappa_mid = np.gradient(theta, mid)
    return np.interp(arclength, mid, kappa_mid)


def build_path(points: Iterable, lane_ids: tuple[str, ...], spacing: float = RESAMPLE_SPACING_M) -> Path:
    pts, arcs = resample_polyline(np.asarray(list(points), dtype=np.float64), spacing)
    return Path(points=pts, arclength=arcs, curvature=polyline_curvature(pts, arcs), lane_ids=lane_ids)


def project_to_path(point: WorldPoint, path: Path) -> ProjectionResult:
    """Nearest point on the polyline; ties break toward smaller arclength."""
    p = np.array([point.x, point.y])
    a = path.points[:-1]
    d = path.points[1:] - a
    seg_len_sq = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / seg_len_sq, 0.0, 1.0)
    foot = a + t[:, None] * d
    dist = np.linalg.norm(foot - p, axis=1)
    i = int(np.argmin(dist))  # first minimum == smaller arclength
    arc = float(path.arclength[i] + t[i] * (path.arclength[i + 1] - path.arclength[i]))
    tangent = d[i] / math.sqrt(seg_len_sq[i])
    off = p - foot[i]
    side = math.copysign(1.0, tangent[0] * off[1] - tangent[1] * off[0]) if dist[i] > 0 else 1.0
    return ProjectionResult(arclength=arc, d_proj=float(side * dist[i]), segment_index=i)


def filter_obstacles(
    states: list[EntityState], paths: list[Path], max_offset: float = GEOFENCE_MAX_OFFSET_M
) -> list[EntityState]:
    """Keep entities within max_offset lateral distance of any path (inclusive).

    Kept entities are annotated with their nearest path and projected
    arclength. Idempotent and independent of input order.
    """
    kept = []
    for state in states:
        best: tuple[float, int, ProjectionResult] | None = None
        for idx, path in enumerate(paths):
            proj = project_to_path(state.position, path)
            if best is None or abs(proj.d_proj) < abs(best[2].d_proj):
                best = (abs(proj.d_proj), idx, proj)
        if best is not None and best[0] <= max_offset:
            _, idx, proj = best
            kept.append(
                replace(
                    state,
                    path_index=idx,
                    path=paths[idx],
                    arc_position=proj.arclength,
                    d_proj=proj.d_proj,
                )
            )
    return kept


class MapGraph:
    """In-memory labeled graph with schema checks on relations.

    Not a database server: desk-scale store with a JSON snapshot format.
    revision increments on every applied mutation, which is what the
    ingestion coalescing tests observe.
    """

    LANE_STICKINESS_M = 0.5
    LANE_SWITCH_CONFIRMATIONS = 3

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self._relations: list[tuple[str, RelationLabel, str]] = []
        self._relation_set: set[tuple[str, RelationLabel, str]] = set()
        self.revision = 0
        self._lane_path_cache: dict[str, Path] = {}
        self._last_push: dict[tuple[str, str], float] = {}
        self._pending: dict[tuple[str, str], EntityState] = {}
        self._lane_votes: dict[str, tuple[str, int]] = {}

    # -- structure ---------------------------------------------------------

    def add_node(self, node: Node) -> str:
        if node.id in self.nodes:
            raise GraphError(f"duplicate node id {node.id!r}")
        if node.label is NodeLabel.SENSOR and "type" not in node.attributes:
            raise GraphError(f"sensor {node.id!r} needs a 'type' attribute")
        self.nodes[node.id] = node
        self.revision += 1
        return node.id

    def add_relation(self, src: str, label: RelationLabel, dst: str) -> None:
        if src not in self.nodes:
            raise GraphError(f"relation source {src!r} does not exist")
        if dst not in self.nodes:
            raise GraphError(f"relation target {dst!r} does not exist")
        label = RelationLabel(label)
        self._check_relation_schema(src, label, dst)
        key = (src, label, dst)
        if key in self._relation_set:
            return  # idempotent
        self._relation_set.add(key)
        self._relations.append(key)
        self.revision += 1

    def _check_relation_schema(self, src: str, label: RelationLabel, dst: str) -> None:
        s, d = self.nodes[src].label, self.nodes[dst].label
        if label is RelationLabel.CONTAINS:
            if s is not NodeLabel.LANE_SEGMENT or d is not NodeLabel.VEHICLE:
                raise GraphError("contains links only LaneSegment -> Vehicle")
        elif label is RelationLabel.HAS_MEASUREMENT:
            if s is not NodeLabel.SENSOR:
                raise GraphError("hasMeasurement must originate at a Sensor")
        elif label in (RelationLabel.SUCCESSOR, RelationLabel.NEIGHBOR):
            if s is not NodeLabel.LANE_SEGMENT or d is not NodeLabel.LANE_SEGMENT:
                raise GraphError(f"{label.value} links only LaneSegment -> LaneSegment")
        elif label is RelationLabel.HAS_PART:
            if s is NodeLabel.ROAD and d is NodeLabel.HALF_ROAD:
                count = sum(1 for r in self.relations_from(src, RelationLabel.HAS_PART)
                            if self.nodes[r[2]].label is NodeLabel.HALF_ROAD)
                if count >= 2:
                    raise GraphError(f"road {src!r} already has two half-roads")

    def remove_relation(self, src: str, label: RelationLabel, dst: str) -> None:
        key = (src, RelationLabel(label), dst)
        if key in self._relation_set:
            self._relation_set.remove(key)
            self._relations.remove(key)
            self.revision += 1

    def relations_from(self, src: str, label: Optional[RelationLabel] = None):
        return [r for r in self._relations if r[0] == src and (label is None or r[1] == label)]

    def relations_to(self, dst: str, label: Optional[RelationLabel] = None):
        return [r for r in self._relations if r[2] == dst and (label is None or r[1] == label)]

    @property
    def relations(self) -> list[tuple[str, RelationLabel, str]]:
        return list(self._relations)

    # -- paths ---------------------------------------------------------------

    def lane_centerline(self, lane_id: str) -> np.ndarray:
        node = self.nodes.get(lane_id)
        if node is None or node.label is not NodeLabel.LANE_SEGMENT:
            raise GraphError(f"unknown lane {lane_id!r}")
        if "centerline" not in node.attributes:
            raise GraphError(f"lane {lane_id!r} has no centerline attribute")
        return np.asarray(node.attributes["centerline"], dtype=np.float64)

    def lane_path(self, lane_id: str) -> Path:
        """Single-lane centerline path (cached; lanes are static)."""
        if lane_id not in self._lane_path_cache:
            self._lane_path_cache[lane_id] = build_path(self.lane_centerline(lane_id), (lane_id,))
        return self._lane_path_cache[lane_id]

    def successor_chain(self, lane_id: str, horizon: float) -> list[str]:
        """Lane ids along the successor chain until horizon meters are covered."""
        chain = [lane_id]
        covered = self.lane_path(lane_id).length
        seen = {lane_id}
        current = lane_id
        while covered < horizon:
            succ = [dst for _, _, dst in self.relations_from(current, RelationLabel.SUCCESSOR)]
            if not succ or succ[0] in seen:
                break
            current = succ[0]
            seen.add(current)
            chain.append(current)
            covered += self.lane_path(current).length
        return chain

    def _chained_path(self, lane_id: str, horizon: float) -> Path:
        points = []
        chain = self.successor_chain(lane_id, horizon)
        for lid in chain:
            pts = self.lane_centerline(lid)
            points.extend(pts if not points else pts[1:] if np.allclose(points[-1], pts[0]) else pts)
        path = build_path(np.asarray(points), tuple(chain))
        if path.length > horizon:
            n_keep = int(np.searchsorted(path.arclength, horizon, side="right"))
            path = Path(
                points=path.points[:n_keep],
                arclength=path.arclength[:n_keep],
                curvature=path.curvature[:n_keep],
                lane_ids=path.lane_ids,
            )
        return path

    def retrieve_paths(self, lane_id: str, horizon: float) -> list[Path]:
        """Stay path plus one path per neighbor lane, each up to horizon meters.

        The stay path follows the successor chain of the given lane; each
        neighbor path follows the successor chain of that neighbor. Returns
        1 + number of neighbor relations paths, stay path first.
        """
        paths = [self._chained_path(lane_id, horizon)]
        for _, _, nb in self.relations_from(lane_id, RelationLabel.NEIGHBOR):
            paths.append(self._chained_path(nb, horizon))
        return paths

    # -- dynamic entities ----------------------------------------------------

    def ingest_measurement(
        self, sensor_id: str, state: EntityState, push_period: float = 0.1
    ) -> bool:
        """Fuse one sensor measurement into the graph.

        Measurements arriving faster than push_period per (sensor, entity)
        are coalesced: the latest is kept pending and the graph is untouched.
        Returns True when the graph was updated.
        """
        sensor = self.nodes.get(sensor_id)
        if sensor is None or sensor.label is not NodeLabel.SENSOR:
            raise GraphError(f"unknown sensor {sensor_id!r}")
        key = (sensor_id, state.entity_id)
        last = self._last_push.get(key)
        if last is not None and state.timestamp < last:
            raise GraphError(
                f"entity {state.entity_id!r}: timestamp {state.timestamp} older than stored {last}"
            )
        if last is not None and state.timestamp - last < push_period - 1e-9:
            self._pending[key] = state  # latest wins
            return False
        self._pending.pop(key, None)
        self._last_push[key] = state.timestamp
        self._apply_measurement(sensor_id, state)
        return True

    def _apply_measurement(self, sensor_id: str, state: EntityState) -> None:
        node = self.nodes.get(state.entity_id)
        if node is None:
            node = Node(id=state.entity_id, label=NodeLabel.VEHICLE)
            self.add_node(node)
        prev_t = node.attributes.get("timestamp")
        if prev_t is not None and state.timestamp < prev_t:
            raise GraphError(
                f"entity {state.entity_id!r}: timestamp {state.timestamp} older than stored {prev_t}"
            )
        node.attributes.update(
            position=[state.position.x, state.position.y],
            v=state.v,
            heading=state.heading,
            timestamp=state.timestamp,
        )
        self.add_relation(sensor_id, RelationLabel.HAS_MEASUREMENT, state.entity_id)

        target = self._lane_assignment(state)
        if target is not None:
            for src, label, dst in self.relations_to(state.entity_id, RelationLabel.CONTAINS):
                if src != target:
                    self.remove_relation(src, label, dst)
            self.add_relation(target, RelationLabel.CONTAINS, state.entity_id)
        self.revision += 1

    def _lane_assignment(self, state: EntityState) -> Optional[str]:
        """Lane for the contains edge, with hysteresis against position noise.

        The edge moves to a different lane only when that lane has been
        clearly closer (by LANE_STICKINESS_M) on LANE_SWITCH_CONFIRMATIONS
        consecutive measurements, mimicking a lane-matched localization.
        """
        nearest = self.nearest_lane(state.position)
        if nearest is None:
            return None
        current = self.contained_lane(state.entity_id)
        if current is None or current == nearest or current not in self.nodes:
            self._lane_votes.pop(state.entity_id, None)
            return nearest
        d_current = abs(project_to_path(state.position, self.lane_path(current)).d_proj)
        d_nearest = abs(project_to_path(state.position, self.lane_path(nearest)).d_proj)
        if d_nearest + self.LANE_STICKINESS_M < d_current:
            lane, votes = self._lane_votes.get(state.entity_id, (nearest, 0))
            votes = votes + 1 if lane == nearest else 1
            if votes >= self.LANE_SWITCH_CONFIRMATIONS:
                self._lane_votes.pop(state.entity_id, None)
                return nearest
            self._lane_votes[state.entity_id] = (nearest, votes)
        else:
            self._lane_votes.pop(state.entity_id, None)
        return current

    def nearest_lane(self, position: WorldPoint) -> Optional[str]:
        best_id, best_d = None, math.inf
        for node in self.nodes.values():
            if node.label is NodeLabel.LANE_SEGMENT and "centerline" in node.attributes:
                d = abs(project_to_path(position, self.lane_path(node.id)).d_proj)
                if d < best_d:
                    best_id, best_d = node.id, d
        return best_id

    def entity_state(self, entity_id: str) -> EntityState:
        node = self.nodes.get(entity_id)
        if node is None or "position" not in node.attributes:
            raise GraphError(f"entity {entity_id!r} has no position")
        x, y = node.attributes["position"]
        return EntityState(
            entity_id=entity_id,
            position=WorldPoint(x, y),
            v=node.attributes.get("v", 0.0),
            heading=node.attributes.get("heading", 0.0),
            timestamp=node.attributes.get("timestamp", 0.0),
        )

    def contained_lane(self, entity_id: str) -> Optional[str]:
        rels = self.relations_to(entity_id, RelationLabel.CONTAINS)
        return rels[0][0] if rels else None

    def distance_between(self, entity_a: str, entity_b: str) -> float:
        """World-frame Euclidean distance between two entities' positions."""
        pa = self.entity_state(entity_a).position
        pb = self.entity_state(entity_b).position
        return pa.distance_to(pb)

    # -- snapshot export -----------------------------------------------------

    def export_snapshot(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "label": n.label.value, "attributes": n.attributes}
                for n in self.nodes.values()
            ],
            "relations": [
                {"from": src, "label": label.value, "to": dst}
                for src, label, dst in self._relations
            ],
        }

    @classmethod
    def from_snapshot(cls, snapshot: dict) -> "MapGraph":
        graph = cls()
        for rec in snapshot["nodes"]:
            graph.add_node(Node(id=rec["id"], label=NodeLabel(rec["label"]),
                                attributes=dict(rec.get("attributes", {}))))
        for rec in snapshot["relations"]:
            graph.add_relation(rec["from"], RelationLabel(rec["label"]), rec["to"])
        return graph


def load_map(source) -> MapGraph:
    """Build a MapGraph from the lane-list map document.

    source is a dict, a JSON string, or a file path. Lane centerlines are
    either world-frame [[x, y], ...] meters ("frame": "xy", the default) or
    geodetic [[lat_deg, lon_deg], ...] ("frame": "geodetic_deg"), converted
    at parse time using the document's projection block.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = open(source).read() if not str(source).lstrip().startswith("{") else str(source)
        doc = json.loads(text)

    proj = doc.get("projection", {})
    cfg = ProjectionConfig(
        r_e=proj.get("r_e", ProjectionConfig.r_e),
        lat0=math.radians(proj.get("lat0_deg", 0.0)),
    )

    graph = MapGraph()
    lanes = doc.get("lanes")
    if not lanes:
        raise GraphError("map document has no lanes")

    # Default single road / half-road hierarchy unless the document groups lanes.
    created: set[str] = set()
    for lane in lanes:
        lane_id = lane.get("id")
        if lane_id is None:
            raise GraphError("lane without id")
        if lane_id in graph.nodes:
            raise GraphError(f"duplicate lane id {lane_id!r}")
        pts = lane.get("centerline")
        if not pts or len(pts) < 2:
            raise GraphError(f"lane {lane_id!r}: centerline needs >= 2 points")
        if lane.get("frame", "xy") == "geodetic_deg":
            pts = [
                (lambda w: [w.x, w.y])(
                    geodetic_to_world(GeoPoint(math.radians(p[0]), math.radians(p[1])), cfg)
                )
                for p in pts
            ]
        attributes = dict(lane.get("attributes", {}))
        attributes["centerline"] = [[float(p[0]), float(p[1])] for p in pts]
        graph.add_node(Node(id=lane_id, label=NodeLabel.LANE_SEGMENT, attributes=attributes))

        road_id = lane.get("road", "road")
        half_id = lane.get("half_road", f"{road_id}:fwd")
        if road_id not in created:
            graph.add_node(Node(id=road_id, label=NodeLabel.ROAD))
            created.add(road_id)
        if half_id not in created:
            graph.add_node(Node(id=half_id, label=NodeLabel.HALF_ROAD))
            graph.add_relation(road_id, RelationLabel.HAS_PART, half_id)
            created.add(half_id)
        graph.add_relation(half_id, RelationLabel.HAS_PART, lane_id)

    for lane in lanes:
        lane_id = lane["id"]
        for succ in lane.get("successors", []) or []:
            graph.add_relation(lane_id, RelationLabel.SUCCESSOR, succ)
        for side in ("left_neighbor", "right_neighbor"):
            nb = lane.get(side)
            if nb:
                graph.add_relation(lane_id, RelationLabel.NEIGHBOR, nb)
                graph.nodes[lane_id].attributes[side] = nb
    return graph
