"""Deterministic scenario engine.

Loads a scenario document (map, vehicles, parameters), steps all vehicles on
a fixed 10 Hz timeline, runs the planner each cycle, and records a full
trace. Other vehicles are scripted (piecewise velocity schedule) or drive at
constant velocity along their lane paths; the single ego integrates live or
replayed driver commands (acceleration plus lane requests). An optional
noise model perturbs the observed states before map ingestion, leaving the
true motion untouched, so noise-robustness claims are exercised end to end.

Scenario file schema (JSON):

    {
      "name": "gap",
      "duration_s": 12.0,
      "seed": 0,
      "map": { ... map document, see riskprobe.rldm.load_map ... },
      "noise": {"enabled": false, "position_std_m": 0.5, "velocity_std_ms": 0.3},
      "route_lane": "through",
      "params": {"probe": {...}, "risk": {...}, "benefit": {...},
                 "ego_unc": {...}, "other_unc": {...}, "blend": {...},
                 "hysteresis_window_s": 2.0, "dead_band_ms": 0.5},
      "vehicles": [
        {"id": "ego", "mode": "human", "lane": "merge", "arc_m": 40, "v_ms": 7},
        {"id": "car_a", "mode": "constant", "lane": "through", "arc_m": 75, "v_ms": 8},
        {"id": "car_b", "mode": "scripted", "lane": "through", "arc_m": 5, "v_ms": 8,
         "schedule": [{"t_s": 4.0, "v_target_ms": 6.0, "accel_ms2": 1.5}]}
      ],
      "ego_commands": [
        {"t_s": 0.0, "accel_ms2": 1.0},
        {"t_s": 1.0, "lane_request": "left"}
      ]
    }

All "params" keys are optional overrides of the defaults in
riskprobe.planner.PlannerParams.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .costs import BenefitParams, RiskParams, UncertaintyParams
from .geo import WorldPoint
from .motion import BlendSpec, ProbeConfig, blend_paths
from .planner import (
    BlendParams,
    HysteresisState,
    PlannerOutput,
    PlannerParams,
    plan_cycle,
)
from .rldm import EntityState, MapGraph, Node, NodeLabel, Path, load_map, project_to_path

CYCLE_RATE_HZ = 10.0


class ScenarioError(ValueError):
    """Scenario document violates the schema; message names the field."""


@dataclass(frozen=True)
class NoiseModel:
    enabled: bool = False
    position_std_m: float = 0.0
    velocity_std_ms: float = 0.0

    def __post_init__(self):
        if self.position_std_m < 0 or self.velocity_std_ms < 0:
            raise ScenarioError("noise std devs must be >= 0")


@dataclass(frozen=True)
class ScheduleEntry:
    t_s: float
    v_target_ms: Optional[float] = None
    accel_ms2: Optional[float] = None
    lane_request: Optional[str] = None


@dataclass(frozen=True)
class VehicleSpec:
    vehicle_id: str
    mode: str  # "human" | "scripted" | "constant"
    lane: str
    arc_m: float
    v_ms: float
    schedule: tuple[ScheduleEntry, ...] = ()


@dataclass(frozen=True)
class EgoCommand:
    accel: float = 0.0
    lane_request: Optional[str] = None
    t_s: float = 0.0


@dataclass
class Scenario:
    name: str
    map_doc: dict
    vehicles: list[VehicleSpec]
    duration_s: float = 12.0
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)
    params: PlannerParams = field(default_factory=PlannerParams)
    route_lane: Optional[str] = None
    ego_commands: tuple[EgoCommand, ...] = ()

    @property
    def ego_id(self) -> str:
        return next(v.vehicle_id for v in self.vehicles if v.mode == "human")


def _override_dataclass(obj, overrides: dict, where: str):
    valid = {f.name for f in dataclasses.fields(obj)}
    for key in overrides:
        if key not in valid:
            raise ScenarioError(f"{where}: unknown parameter {key!r}")
    return dataclasses.replace(obj, **overrides)


def build_params(overrides: Optional[dict]) -> PlannerParams:
    """PlannerParams from nested override dicts (missing keys keep defaults)."""
    params = PlannerParams()
    if not overrides:
        return params
    blocks = {
        "probe": (ProbeConfig, "probe"),
        "risk": (RiskParams, "risk"),
        "benefit": (BenefitParams, "benefit"),
        "ego_unc": (UncertaintyParams, "ego_unc"),
        "other_unc": (UncertaintyParams, "other_unc"),
        "blend": (BlendParams, "blend"),
    }
    updates = {}
    for key, value in overrides.items():
        if key in blocks:
            if not isinstance(value, dict):
                raise ScenarioError(f"params.{key}: expected an object")
            updates[key] = _override_dataclass(getattr(params, key), value, f"params.{key}")
        elif key in ("hysteresis_window_s", "dead_band_ms"):
            updates[key] = float(value)
        else:
            raise ScenarioError(f"params: unknown block {key!r}")
    return dataclasses.replace(params, **updates)


def load_scenario(source) -> Scenario:
    """Parse and validate a scenario document (dict, JSON string, or path)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        doc = json.loads(text if text.lstrip().startswith("{") else open(text).read())

    if "map" not in doc:
        raise ScenarioError("map: missing (inline map document required)")
    vehicles_doc = doc.get("vehicles")
    if not vehicles_doc:
        raise ScenarioError("vehicles: must list at least the ego")

    vehicles = []
    seen = set()
    ego_count = 0
    for idx, rec in enumerate(vehicles_doc):
        where = f"vehicles[{idx}]"
        vid = rec.get("id")
        if not vid:
            raise ScenarioError(f"{where}.id: missing")
        if vid in seen:
            raise ScenarioError(f"{where}.id: duplicate vehicle id {vid!r}")
        seen.add(vid)
        mode = rec.get("mode", "constant")
        if mode not in ("human", "scripted", "constant"):
            raise ScenarioError(f"{where}.mode: {mode!r} not one of human|scripted|constant")
        ego_count += mode == "human"
        if "lane" not in rec:
            raise ScenarioError(f"{where}.lane: missing")
        v_ms = float(rec.get("v_ms", 0.0))
        if v_ms < 0:
            raise ScenarioError(f"{where}.v_ms: must be >= 0")
        schedule = []
        last_t = -math.inf
        for j, s in enumerate(rec.get("schedule", []) or []):
            t_s = float(s.get("t_s", -1))
            if t_s < last_t:
                raise ScenarioError(f"{where}.schedule[{j}].t_s: schedule must be time-sorted")
            last_t = t_s
            schedule.append(ScheduleEntry(
                t_s=t_s, v_target_ms=s.get("v_target_ms"),
                accel_ms2=s.get("accel_ms2"), lane_request=s.get("lane_request"),
            ))
        vehicles.append(VehicleSpec(
            vehicle_id=vid, mode=mode, lane=rec["lane"],
            arc_m=float(rec.get("arc_m", 0.0)), v_ms=v_ms, schedule=tuple(schedule),
        ))
    if ego_count != 1:
        raise ScenarioError(f"vehicles: exactly one ego (mode=human) required, found {ego_count}")

    noise_doc = doc.get("noise", {})
    noise = NoiseModel(
        enabled=bool(noise_doc.get("enabled", False)),
        position_std_m=float(noise_doc.get("position_std_m", 0.0)),
        velocity_std_ms=float(noise_doc.get("velocity_std_ms", 0.0)),
    )

    commands = []
    last_t = -math.inf
    for j, c in enumerate(doc.get("ego_commands", []) or []):
        t_s = float(c.get("t_s", -1))
        if t_s < last_t:
            raise ScenarioError(f"ego_commands[{j}].t_s: must be time-sorted")
        last_t = t_s
        commands.append(EgoCommand(
            accel=float(c.get("accel_ms2", 0.0)),
            lane_request=c.get("lane_request"), t_s=t_s,
        ))

    return Scenario(
        name=doc.get("name", "scenario"),
        map_doc=doc["map"],
        vehicles=vehicles,
        duration_s=float(doc.get("duration_s", 12.0)),
        seed=int(doc.get("seed", 0)),
        noise=noise,
        params=build_params(doc.get("params")),
        route_lane=doc.get("route_lane"),
        ego_commands=tuple(commands),
    )


@dataclass
class RiskFieldOption:
    key: str
    direction: str
    v_ends: np.ndarray
    rates_pct: np.ndarray  # (n_t, n_vis) critical event rate in %/s


@dataclass
class RiskField:
    s_grid: np.ndarray
    options: list[RiskFieldOption]
    chosen: tuple[int, int]
    thresholds_pct: tuple[float, float] = (0.5, 1.0)


@dataclass
class TraceRecord:
    t: float
    cycle_ms: float
    states: dict[str, dict]
    ego_lane: str
    v_0: float
    v_tar: float
    p_tar: str
    direction: str
    speed_advice: str
    magnitude: float
    chosen: tuple[int, int]
    chosen_R: float
    chosen_C: float
    distances: dict[str, float]
    risk_field: RiskField
    clamped_command: bool = False


def _risk_field(output: PlannerOutput, probe_cfg: ProbeConfig, vis_horizon: float = 6.0) -> RiskField:
    n_vis = int(round(vis_horizon / probe_cfg.ds)) + 1
    s_grid = np.arange(n_vis) * probe_cfg.ds
    options = []
    for i, opt in enumerate(output.options):
        rows = np.zeros((probe_cfg.n_t, n_vis))
        v_ends = np.zeros(probe_cfg.n_t)
        for h in range(probe_cfg.n_t):
            cell = output.cost_table.get((i, h))
            sample = output.samples.get((i, h))
            if cell is not None:
                rows[h] = cell.rate_trace[:n_vis] * 100.0
            if sample is not None and sample.profile is not None:
                v_ends[h] = sample.profile.v_end
        options.append(RiskFieldOption(
            key=opt.key, direction=opt.direction.value, v_ends=v_ends, rates_pct=rows,
        ))
    return RiskField(s_grid=s_grid, options=options, chosen=output.chosen)


class World:
    """Single-timeline simulation of one scenario.

    Live ego commands arrive through set_command (a latest-wins mailbox read
    once per cycle); when none is pending, the scenario's replayed command
    schedule applies. Planner fan-out happens within the cycle; the world
    itself advances strictly sequentially.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.params = scenario.params
        self.graph: MapGraph = load_map(scenario.map_doc)
        self.rng = np.random.default_rng(scenario.seed)
        self.t = 0.0
        self.dt = 1.0 / CYCLE_RATE_HZ
        self.hysteresis = HysteresisState()
        self.records: list[TraceRecord] = []
        self.paused = False
        self._mailbox: Optional[EgoCommand] = None
        self._ego_accel = 0.0
        self._command_idx = 0
        self._vehicles: dict[str, dict] = {}
        self._sensor = "perception"
        self.graph.add_node(Node(id=self._sensor, label=NodeLabel.SENSOR, attributes={"type": "fusion"}))
        for spec in scenario.vehicles:
            chain = self.graph.retrieve_paths(spec.lane, horizon=10_000.0)[0]
            start = project_to_path(WorldPoint(*chain.point_at(0.0)), chain)
            self._vehicles[spec.vehicle_id] = {
                "spec": spec,
                "path": chain,
                "arc": spec.arc_m,
                "v": spec.v_ms,
                "accel": 0.0,
                "v_target": None,
                "schedule_idx": 0,
                "blending": False,
            }
            del start

    # -- command mailbox ----------------------------------------------------

    def set_command(self, command: EgoCommand) -> None:
        """Latest-wins mailbox; read once per cycle."""
        self._mailbox = command

    def reset(self) -> None:
        self.__init__(self.scenario)

    # -- motion -------------------------------------------------------------

    def _advance_scripted(self, state: dict) -> None:
        spec: VehicleSpec = state["spec"]
        while state["schedule_idx"] < len(spec.schedule) and spec.schedule[state["schedule_idx"]].t_s <= self.t + 1e-9:
            entry = spec.schedule[state["schedule_idx"]]
            state["schedule_idx"] += 1
            if entry.v_target_ms is not None:
                state["v_target"] = entry.v_target_ms
                state["accel"] = abs(entry.accel_ms2) if entry.accel_ms2 else None
            if entry.lane_request:
                self._start_blend(state, entry.lane_request)
        v = state["v"]
        target = state["v_target"]
        if target is not None:
            if state["accel"] is None:
                v_new = target
            else:
                step = state["accel"] * self.dt
                v_new = min(v + step, target) if target > v else max(v - step, target)
        else:
            v_new = v
        state["arc"] += 0.5 * (v + v_new) * self.dt
        state["v"] = v_new

    def _advance_ego(self, state: dict, command: EgoCommand) -> bool:
        clamped = False
        accel = command.accel
        cfg = self.params.probe
        if not (cfg.a_min <= accel <= cfg.a_max):
            accel = min(max(accel, cfg.a_min), cfg.a_max)
            clamped = True
        v = state["v"]
        v_new = min(max(v + accel * self.dt, 0.0), cfg.v_max)
        state["arc"] += 0.5 * (v + v_new) * self.dt
        state["v"] = v_new
        if command.lane_request:
            self._start_blend(state, command.lane_request)
        return clamped

    def _start_blend(self, state: dict, side: str) -> None:
        pos = WorldPoint(*state["path"].point_at(min(state["arc"], state["path"].length)))
        lane = self.graph.nearest_lane(pos)
        attr = f"{side}_neighbor"
        neighbor = self.graph.nodes[lane].attributes.get(attr) if lane else None
        if neighbor is None:
            return  # no lane on that side; request ignored
        current = state["path"].cropped(project_to_path(pos, state["path"]).arclength)
        nb_chain = self.graph.retrieve_paths(neighbor, horizon=10_000.0)[0]
        nb_proj = project_to_path(pos, nb_chain)
        nb = nb_chain.cropped(nb_proj.arclength)
        d_path = abs(nb_proj.d_proj)
        spec = BlendSpec.from_duration(0.0, self.params.blend.duration, d_path, self.params.blend.k)
        state["path"] = blend_paths(current, nb, max(state["v"], 0.1), spec)
        state["arc"] = 0.0
        state["blending"] = True

    def _true_state(self, vid: str, state: dict) -> EntityState:
        path: Path = state["path"]
        arc = min(state["arc"], path.length)
        x, y = path.point_at(arc)
        tangent = path.tangent_at(arc)
        return EntityState(
            entity_id=vid, position=WorldPoint(float(x), float(y)), v=state["v"],
            heading=float(math.atan2(tangent[1], tangent[0])), timestamp=self.t,
        )

    def _observe(self, truth: EntityState) -> EntityState:
        noise = self.scenario.noise
        if not noise.enabled:
            return truth
        dx, dy = self.rng.normal(0.0, noise.position_std_m, size=2) if noise.position_std_m > 0 else (0.0, 0.0)
        dv = self.rng.normal(0.0, noise.velocity_std_ms) if noise.velocity_std_ms > 0 else 0.0
        return dataclasses.replace(
            truth,
            position=WorldPoint(truth.position.x + float(dx), truth.position.y + float(dy)),
            v=max(0.0, truth.v + float(dv)),
        )

    # -- cycle ---------------------------------------------------------------

    def _current_command(self) -> EgoCommand:
        live = self._mailbox
        self._mailbox = None
        lane_request = None
        if live is not None:
            self._ego_accel = live.accel
            lane_request = live.lane_request
        else:
            cmds = self.scenario.ego_commands
            while self._command_idx < len(cmds) and cmds[self._command_idx].t_s <= self.t + 1e-9:
                cmd = cmds[self._command_idx]
                self._command_idx += 1
                self._ego_accel = cmd.accel
                if cmd.lane_request:
                    lane_request = cmd.lane_request
        return EgoCommand(accel=self._ego_accel, lane_request=lane_request, t_s=self.t)

    def step(self, command: Optional[EgoCommand] = None) -> TraceRecord:
        """Advance one 10 Hz cycle and run the planner on the observed states."""
        started = time.perf_counter()
        if command is not None:
            self.set_command(command)
        cmd = self._current_command()

        clamped = False
        ego_id = self.scenario.ego_id
        for vid, state in self._vehicles.items():
            mode = state["spec"].mode
            if mode == "human":
                clamped = self._advance_ego(state, cmd)
            elif mode == "scripted":
                self._advance_scripted(state)
            else:
                v = state["v"]
                state["arc"] += v * self.dt

        truths = {vid: self._true_state(vid, st) for vid, st in self._vehicles.items()}
        observed = {vid: self._observe(s) for vid, s in truths.items()}
        for vid, obs in observed.items():
            self.graph.ingest_measurement(self._sensor, obs, push_period=self.dt)

        self.t += self.dt
        ego_obs = observed[ego_id]
        others_obs = [s for vid, s in observed.items() if vid != ego_id]
        situation, raw, committed, warning = plan_cycle(
            self.graph, ego_obs, others_obs, self.params, self.hysteresis, self.t,
            route_lane=self.scenario.route_lane,
        )

        cell = committed.chosen_cell()
        record = TraceRecord(
            t=self.t,
            cycle_ms=(time.perf_counter() - started) * 1e3,
            states={
                vid: {"x": s.position.x, "y": s.position.y, "v": s.v,
                      "heading": s.heading, "is_ego": vid == ego_id}
                for vid, s in truths.items()
            },
            ego_lane=situation.ego_lane,
            v_0=ego_obs.v,
            v_tar=committed.v_tar,
            p_tar=committed.p_tar,
            direction=committed.direction.value,
            speed_advice=warning.speed.value,
            magnitude=warning.magnitude,
            chosen=committed.chosen,
            chosen_R=cell.R,
            chosen_C=cell.C,
            distances={
                vid: truths[ego_id].position.distance_to(s.position)
                for vid, s in truths.items() if vid != ego_id
            },
            risk_field=_risk_field(raw, self.params.probe),
            clamped_command=clamped,
        )
        self.records.append(record)
        return record

    def run(self, duration_s: Optional[float] = None) -> list[TraceRecord]:
        duration = duration_s if duration_s is not None else self.scenario.duration_s
        n = int(round(duration * CYCLE_RATE_HZ))
        for _ in range(n):
            self.step()
        return self.records


# -- bundled scenarios --------------------------------------------------------

LANE_GAP_M = 3.5


def make_two_lane_map(merge_length: float, through_span: tuple[float, float]) -> dict:
    """Straight two-lane road, same direction; the right lane ends early.

    The ego merge lane runs x in [0, merge_length] at y = 0; the through lane
    spans through_span at y = +3.5 (its left). A stationary barrier vehicle
    marks the merge lane end in the bundled scenarios.
    """
    x0, x1 = through_span
    return {
        "projection": {"lat0_deg": 0.0},
        "lanes": [
            {
                "id": "merge",
                "centerline": [[0.0, 0.0], [merge_length, 0.0]],
                "left_neighbor": "through",
                "successors": [],
                "attributes": {"road_type": "test_track", "marking": "dashed"},
            },
            {
                "id": "through",
                "centerline": [[x0, LANE_GAP_M], [x1, LANE_GAP_M]],
                "right_neighbor": "merge",
                "successors": [],
                "attributes": {"road_type": "test_track", "marking": "solid"},
            },
        ],
    }


def make_gap_scenario() -> Scenario:
    """Forced lane change with a sufficient gap on the target lane.

    The ego starts at 7 m/s on the ending lane (x = 40); two cars at 8.5 m/s
    on the through lane bracket a 70 m gap around the projected merge point
    (front at x = +75, rear at x = +5; spacing stayed above the ~30 m the
    planner needs to pick the change at t = 0 during tuning). The merge lane
    ends two meters past the barrier at the cone line (x = 147). The
    replayed driver accelerates toward 10 m/s and moves left, following the
    advice. Note: through-lane arcs are x + 80 (the lane starts at x = -80).
    """
    doc = {
        "name": "gap",
        "duration_s": 12.0,
        "seed": 0,
        "map": make_two_lane_map(merge_length=149.0, through_span=(-80.0, 600.0)),
        "route_lane": "through",
        "params": {"probe": {"v_max": 14.0}},
        "vehicles": [
            {"id": "ego", "mode": "human", "lane": "merge", "arc_m": 40.0, "v_ms": 7.0},
            {"id": "front", "mode": "constant", "lane": "through", "arc_m": 155.0, "v_ms": 8.5},
            {"id": "rear", "mode": "constant", "lane": "through", "arc_m": 85.0, "v_ms": 8.5},
            {"id": "barrier", "mode": "constant", "lane": "merge", "arc_m": 147.0, "v_ms": 0.0},
        ],
        "ego_commands": [
            {"t_s": 0.0, "accel_ms2": 1.0},
            {"t_s": 1.0, "accel_ms2": 1.0, "lane_request": "left"},
            {"t_s": 3.0, "accel_ms2": 0.0},
        ],
    }
    return load_scenario(doc)


def make_no_gap_scenario() -> Scenario:
    """Forced lane change blocked by a too-small gap until the stream passes.

    The merge lane geometry ends two meters past the stationary barrier that
    marks the cone line, so stay-path predictions that overrun get pinned in
    contact with it: the earlier a profile arrives, the longer the exposure,
    which is what pushes the advice toward braking.

    The ego starts at 5 m/s on the ending lane dead-center next to the
    too-small gap: a 9 m/s stream brackets it 6 m ahead and 6 m behind
    (through arcs 131 and 119) with a third car 18 m back (arc 107), so an
    immediate merge at any allowed speed lands next to one of the three.
    The replayed driver brakes, lets the stream sweep past, then accelerates
    and changes left into the open road behind it.
    """
    doc = {
        "name": "no_gap",
        "duration_s": 14.0,
        "seed": 0,
        "map": make_two_lane_map(merge_length=90.0, through_span=(-80.0, 600.0)),
        "route_lane": "through",
        "params": {"probe": {"v_max": 14.0}},
        "vehicles": [
            {"id": "ego", "mode": "human", "lane": "merge", "arc_m": 45.0, "v_ms": 5.0},
            {"id": "lead", "mode": "constant", "lane": "through", "arc_m": 131.0, "v_ms": 9.0},
            {"id": "tail", "mode": "constant", "lane": "through", "arc_m": 119.0, "v_ms": 9.0},
            {"id": "tail2", "mode": "constant", "lane": "through", "arc_m": 107.0, "v_ms": 9.0},
            {"id": "barrier", "mode": "constant", "lane": "merge", "arc_m": 88.0, "v_ms": 0.0},
        ],
        "ego_commands": [
            {"t_s": 0.0, "accel_ms2": -0.5},
            {"t_s": 2.0, "accel_ms2": 0.0},
            {"t_s": 6.5, "accel_ms2": 0.5},
            {"t_s": 7.5, "accel_ms2": 0.5, "lane_request": "left"},
            {"t_s": 10.0, "accel_ms2": 0.0},
        ],
    }
    return load_scenario(doc)


def make_open_road_scenario(v_0: float = 7.0, duration_s: float = 3.0) -> Scenario:
    """Ego alone on one endless straight lane; no risk sources anywhere."""
    doc = {
        "name": "open_road",
        "duration_s": duration_s,
        "seed": 0,
        "map": {
            "projection": {"lat0_deg": 0.0},
            "lanes": [
                {"id": "main", "centerline": [[0.0, 0.0], [800.0, 0.0]], "successors": []},
            ],
        },
        "vehicles": [
            {"id": "ego", "mode": "human", "lane": "main", "arc_m": 60.0, "v_ms": v_0},
        ],
    }
    return load_scenario(doc)


BUILTIN_SCENARIOS = {
    "gap": make_gap_scenario,
    "no_gap": make_no_gap_scenario,
    "open_road": make_open_road_scenario,
}


# -- trace export ---------------------------------------------------------------


def advice_timeline(records: list[TraceRecord]) -> list[dict]:
    """Collapsed (t, direction, speed advice) sequence: one entry per change."""
    timeline = []
    for rec in records:
        key = (rec.direction, rec.speed_advice)
        if not timeline or (timeline[-1]["direction"], timeline[-1]["speed"]) != key:
            timeline.append({"t": round(rec.t, 3), "direction": rec.direction,
                             "speed": rec.speed_advice, "v_tar": rec.v_tar})
    return timeline


def direction_sequence(records: list[TraceRecord]) -> list[str]:
    seq = []
    for rec in records:
        if not seq or seq[-1] != rec.direction:
            seq.append(rec.direction)
    return seq


def summarize(records: list[TraceRecord]) -> dict:
    cycle_ms = sorted(r.cycle_ms for r in records)
    p95 = cycle_ms[min(len(cycle_ms) - 1, int(math.ceil(0.95 * len(cycle_ms))) - 1)]
    min_distance = {}
    for rec in records:
        for vid, d in rec.distances.items():
            min_distance[vid] = min(min_distance.get(vid, math.inf), d)
    return {
        "cycles": len(records),
        "advice_timeline": advice_timeline(records),
        "direction_sequence": direction_sequence(records),
        "min_distance_m": {k: round(v, 3) for k, v in sorted(min_distance.items())},
        "cycle_ms_p95": round(p95, 3),
        "final_ego_lane": records[-1].ego_lane if records else None,
    }


TRACE_COLUMNS = (
    "t", "ego_lane", "v_0", "v_tar", "p_tar", "direction",
    "speed_advice", "magnitude", "chosen_option", "chosen_h", "chosen_R", "chosen_C",
)


def export_trace_tsv(records: list[TraceRecord], fh) -> None:
    """One row per cycle. Fixed columns (see TRACE_COLUMNS) then, per vehicle
    sorted by id: x, y, v, and for non-ego vehicles the ego distance d_<id>.

    Wall-clock compute times are deliberately not exported here so the trace
    is byte-identical across replays; they live in the run summary.
    """
    if not records:
        return
    vids = sorted(records[0].states)
    others = [v for v in vids if not records[0].states[v]["is_ego"]]
    header = list(TRACE_COLUMNS)
    for vid in vids:
        header += [f"x_{vid}", f"y_{vid}", f"v_{vid}"]
    header += [f"d_{vid}" for vid in others]
    fh.write("\t".join(header) + "\n")
    for rec in records:
        row = [
            f"{rec.t:.3f}", rec.ego_lane, f"{rec.v_0:.6f}",
            f"{rec.v_tar:.6f}", rec.p_tar, rec.direction, rec.speed_advice,
            f"{rec.magnitude:.6f}", str(rec.chosen[0]), str(rec.chosen[1]),
            f"{rec.chosen_R:.9f}", f"{rec.chosen_C:.9f}",
        ]
        for vid in vids:
            s = rec.states[vid]
            row += [f"{s['x']:.6f}", f"{s['y']:.6f}", f"{s['v']:.6f}"]
        row += [f"{rec.distances[vid]:.6f}" for vid in others]
        fh.write("\t".join(row) + "\n")


def risk_field_block(rec: TraceRecord) -> dict:
    rf = rec.risk_field
    return {
        "t": round(rec.t, 3),
        "ds_s": round(float(rf.s_grid[1] - rf.s_grid[0]), 6),
        "s_grid_s": [round(float(s), 3) for s in rf.s_grid],
        "thresholds_pct_per_s": list(rf.thresholds_pct),
        "chosen": list(rf.chosen),
        "options": [
            {
                "key": opt.key,
                "direction": opt.direction,
                "profiles": [
                    {"h": h, "v_end_ms": float(opt.v_ends[h]),
                     "rate_pct_per_s": [float(f"{x:.6g}") for x in opt.rates_pct[h]]}
                    for h in range(len(opt.v_ends))
                ],
            }
            for opt in rf.options
        ],
    }


def export_risk_field_jsonl(records: list[TraceRecord], fh) -> None:
    for rec in records:
        fh.write(json.dumps(risk_field_block(rec), separators=(",", ":")) + "\n")


def export_risk_field_grid(rec: TraceRecord, fh) -> None:
    """Grid file for one cycle: one row per (option, profile), tab-separated
    rate values in %/s over the visualization horizon; chosen row marked."""
    rf = rec.risk_field
    fh.write(f"# t={rec.t:.3f}s rate unit: %/s thresholds: "
             f"blue<{rf.thresholds_pct[0]} red>={rf.thresholds_pct[1]}\n")
    fh.write("option\tdirection\th\tv_end_ms\tchosen\t" +
             "\t".join(f"s{s:.1f}" for s in rf.s_grid) + "\n")
    for i, opt in enumerate(rf.options):
        for h in range(len(opt.v_ends)):
            mark = "*" if (i, h) == tuple(rf.chosen) else "-"
            vals = "\t".join(f"{x:.4f}" for x in opt.rates_pct[h])
            fh.write(f"{opt.key}\t{opt.direction}\t{h}\t{opt.v_ends[h]:.3f}\t{mark}\t{vals}\n")
