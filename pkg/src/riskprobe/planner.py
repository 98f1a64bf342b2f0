"""Probing planner: build the path options, cost every (path, profile) cell,
select the cheapest, stabilize the output with hysteresis, derive the warning.

Each planning cycle evaluates a fixed M_p * n_t sample table (paths times
velocity profiles), so the runtime is constant apart from the number of
other vehicles entering the collision rates. The committed output changes
only when a different selection has shown strictly lower risk continuously
for the hysteresis window, which keeps the advice stable under sensor noise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .costs import BenefitParams, CostBreakdown, RiskParams, UncertaintyParams, evaluate_sample
from .geo import WorldPoint
from .motion import BlendSpec, ProbeConfig, TrajectorySample, blend_paths, predict_other, roll_out, sample_profiles
from .rldm import EntityState, GraphError, MapGraph, Path, RelationLabel, filter_obstacles, project_to_path

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    LEFT = "left"
    STRAIGHT = "straight"
    RIGHT = "right"


class SpeedAdvice(str, Enum):
    ACCELERATE = "accelerate"
    BRAKE = "brake"
    KEEP = "keep"


@dataclass(frozen=True)
class BlendParams:
    """Run-level lane-change geometry: start after s_start seconds of travel,
    finish the blend in roughly `duration` seconds at the current speed."""

    s_start: float = 1.0
    duration: float = 3.0
    k: float = 10.0


@dataclass(frozen=True)
class PlannerParams:
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    risk: RiskParams = field(default_factory=RiskParams)
    benefit: BenefitParams = field(default_factory=BenefitParams)
    ego_unc: UncertaintyParams = field(default_factory=UncertaintyParams)
    other_unc: UncertaintyParams = field(default_factory=UncertaintyParams)
    blend: BlendParams = field(default_factory=BlendParams)
    hysteresis_window_s: float = 2.0
    dead_band_ms: float = 0.5


@dataclass(frozen=True)
class PathOption:
    """One lateral candidate: the cropped path the ego would actually drive.

    target_lane is the lane the option ends up following; it keys the
    hysteresis commitment so a selection survives the moment the crossing
    completes and "left onto X" turns into "straight on X".
    """

    path: Path
    direction: Direction
    is_lane_change: bool
    route_required: bool
    target_lane: str
    key: str
    blend_end_arc: float = 0.0


@dataclass(frozen=True)
class Situation:
    """Immutable per-cycle snapshot handed from the map to the planner."""

    ego: EntityState
    others: tuple[EntityState, ...]
    options: tuple[PathOption, ...]
    timestamp: float
    ego_lane: str


@dataclass(frozen=True)
class PlannerOutput:
    v_0: float
    v_tar: float
    p_tar: str
    direction: Direction
    target_lane: str
    chosen: tuple[int, int]
    cost_table: dict[tuple[int, int], Optional[CostBreakdown]]
    options: tuple[PathOption, ...]
    samples: dict[tuple[int, int], TrajectorySample]

    def chosen_cell(self) -> CostBreakdown:
        cell = self.cost_table[self.chosen]
        assert cell is not None
        return cell


@dataclass
class HysteresisState:
    committed: Optional[PlannerOutput] = None
    candidate_key: Optional[tuple] = None
    candidate_since: Optional[float] = None


@dataclass(frozen=True)
class Warning:
    speed: SpeedAdvice
    direction: Direction
    magnitude: float


def _neighbor_direction(graph: MapGraph, lane_id: str, neighbor_id: str, stay: Path, other: Path) -> Direction:
    attrs = graph.nodes[lane_id].attributes
    if attrs.get("left_neighbor") == neighbor_id:
        return Direction.LEFT
    if attrs.get("right_neighbor") == neighbor_id:
        return Direction.RIGHT
    # Geometric fallback: which side of the stay path does the neighbor start on?
    proj = project_to_path(WorldPoint(*other.points[0]), stay)
    return Direction.LEFT if proj.d_proj > 0 else Direction.RIGHT


def build_situation(
    graph: MapGraph,
    ego: EntityState,
    others: list[EntityState],
    params: PlannerParams,
    timestamp: float = 0.0,
    route_lane: Optional[str] = None,
) -> Situation:
    """Assemble the per-cycle snapshot: stay path, blended lane-change paths,
    and geofenced other vehicles annotated with their nearest paths.

    With an explicit route_lane, the route-required flag (and with it the
    utility offset) lands on every option whose target chain drives that
    lane, staying or changing. Without one, lane changes are flagged
    whenever the ego lane ends within reach of the prediction horizon.
    """
    cfg = params.probe
    ego_lane = graph.contained_lane(ego.entity_id) or graph.nearest_lane(ego.position)
    if ego_lane is None:
        raise GraphError("no lane under the ego vehicle")
    lane_path = graph.lane_path(ego_lane)
    ego_on_lane = project_to_path(ego.position, lane_path)
    if abs(ego_on_lane.d_proj) > 5.0:
        raise GraphError("no path under the ego vehicle (offset > 5 m)")

    reach = cfg.v_max * cfg.s_h
    horizon = ego_on_lane.arclength + reach + 50.0
    paths = graph.retrieve_paths(ego_lane, horizon)
    stay_full = paths[0]
    ego_arc = project_to_path(ego.position, stay_full).arclength
    stay = stay_full.cropped(ego_arc)
    lane_ends_soon = stay.length < reach - 1e-6

    if route_lane is not None:
        stay_required = route_lane in stay_full.lane_ids
    else:
        stay_required = False
    options = [PathOption(path=stay, direction=Direction.STRAIGHT, is_lane_change=False,
                          route_required=stay_required, target_lane=ego_lane,
                          key=f"straight:{ego_lane}")]

    neighbor_rels = graph.relations_from(ego_lane, RelationLabel.NEIGHBOR)
    for (_, _, nb_id), nb_full in zip(neighbor_rels, paths[1:]):
        nb_proj = project_to_path(ego.position, nb_full)
        if nb_full.length - nb_proj.arclength < 5.0:
            continue  # neighbor lane exhausted at the ego position; not a real option
        d_path = abs(nb_proj.d_proj)
        nb_cropped = nb_full.cropped(nb_proj.arclength)
        spec = BlendSpec.from_duration(params.blend.s_start, params.blend.duration, d_path, params.blend.k)
        blended = blend_paths(stay, nb_cropped, ego.v, spec)
        direction = _neighbor_direction(graph, ego_lane, nb_id, stay_full, nb_full)
        if route_lane is not None:
            required = route_lane in nb_full.lane_ids
        else:
            required = lane_ends_soon
        l_end = ego.v * params.blend.s_start + ego.v * math.sqrt(spec.l_c * spec.d_path)
        options.append(PathOption(path=blended, direction=direction, is_lane_change=True,
                                  route_required=required, target_lane=nb_id,
                                  key=f"{direction.value}:{nb_id}", blend_end_arc=l_end))

    annotated = filter_obstacles([o for o in others if o.entity_id != ego.entity_id], paths)
    return Situation(ego=ego, others=tuple(annotated), options=tuple(options),
                     timestamp=timestamp, ego_lane=ego_lane)


def probe(
    situation: Situation, params: PlannerParams
) -> tuple[dict[tuple[int, int], Optional[CostBreakdown]], dict[tuple[int, int], TrajectorySample]]:
    """Cost the full (path option x velocity profile) table.

    Cells that fail to evaluate are flagged as None and excluded from
    selection; overrunning the path end is not an error (the sample is
    pinned and costed). A lane-change cell is also flagged when its profile
    cannot finish the blend within the maneuver window (start + duration
    plus 2 s grace): crawling in between lanes is not a lane-change plan.
    """
    cfg = params.probe
    profiles = sample_profiles(situation.ego.v, cfg)
    other_samples = [predict_other(o, cfg) for o in situation.others]
    window = params.blend.s_start + params.blend.duration + 2.0
    table: dict[tuple[int, int], Optional[CostBreakdown]] = {}
    samples: dict[tuple[int, int], TrajectorySample] = {}
    for i, opt in enumerate(situation.options):
        for prof in profiles:
            key = (i, prof.index)
            try:
                ego_sample = roll_out(prof, opt.path, situation.ego.v, cfg)
                samples[key] = ego_sample
                if opt.is_lane_change and not _blend_completes(ego_sample, opt.blend_end_arc, window):
                    table[key] = None
                    continue
                table[key] = evaluate_sample(
                    ego_sample, other_samples, params.ego_unc, params.other_unc,
                    params.risk, params.benefit,
                    route_bonus=opt.route_required,
                )
            except Exception:
                logger.warning("cost cell %s failed; excluded from selection", key, exc_info=True)
                table[key] = None
    return table, samples


def _blend_completes(sample: TrajectorySample, blend_end_arc: float, window_s: float) -> bool:
    if blend_end_arc <= 0.0:
        return True
    k = min(len(sample.s) - 1, int(round(window_s / (sample.s[1] - sample.s[0]))))
    return bool(sample.arclength[k] >= blend_end_arc - 1e-9)


def select(
    situation: Situation,
    table: dict[tuple[int, int], Optional[CostBreakdown]],
    samples: dict[tuple[int, int], TrajectorySample],
) -> PlannerOutput:
    """Global cost argmin over the table.

    Ties break toward the stay path, then toward the smaller velocity change,
    then the smaller profile index, making the selection deterministic and
    independent of enumeration order.
    """
    v_0 = situation.ego.v
    best_key = None
    best_rank = None
    for (i, h), cell in table.items():
        if cell is None:
            continue
        sample = samples[(i, h)]
        v_end = sample.profile.v_end if sample.profile else v_0
        rank = (cell.C, 0 if not situation.options[i].is_lane_change else 1, abs(v_end - v_0), h)
        if best_rank is None or rank < best_rank:
            best_rank, best_key = rank, (i, h)
    if best_key is None:
        raise ValueError("all cost cells flagged; no selectable trajectory")
    i, h = best_key
    opt = situation.options[i]
    chosen_sample = samples[best_key]
    v_tar = chosen_sample.profile.v_end if chosen_sample.profile else v_0
    return PlannerOutput(
        v_0=v_0, v_tar=v_tar, p_tar=opt.key, direction=opt.direction,
        target_lane=opt.target_lane, chosen=best_key, cost_table=table,
        options=situation.options, samples=samples,
    )


def _rebind_committed(output: PlannerOutput, key: tuple[str, int]) -> Optional[PlannerOutput]:
    """Re-anchor a committed (target lane, profile) pair in the current cycle.

    Returns a fresh output for the same selection with current costs and
    current geometry (the direction may have turned from left/right into
    straight once the crossing completed), or None when the pair is no
    longer in the table.
    """
    target_lane, h = key
    for i, opt in enumerate(output.options):
        if opt.target_lane == target_lane:
            cell = output.cost_table.get((i, h))
            sample = output.samples.get((i, h))
            if cell is None or sample is None:
                return None
            v_tar = sample.profile.v_end if sample.profile else output.v_0
            return replace(
                output, v_tar=v_tar, p_tar=opt.key, direction=opt.direction,
                target_lane=opt.target_lane, chosen=(i, h),
            )
    return None


def step_hysteresis(
    state: HysteresisState, new: PlannerOutput, now: float, window: float = 2.0
) -> PlannerOutput:
    """Commit the new selection only after it beats the committed one on risk
    continuously for the window.

    The committed (target lane, profile) pair is re-anchored in every
    cycle's table, so its costs stay current and its direction reflects the
    geometry (left becomes straight once the crossing completes). A
    differing argmin must show strictly lower R than the committed cell
    continuously for the full window before both outputs switch jointly.
    A challenger from another lane is tracked by lane only, since its best
    velocity naturally drifts while the scene evolves; a within-lane
    velocity challenger is tracked by its exact cell. When the committed
    target lane leaves the option set entirely, the new selection is
    adopted immediately.
    """
    if state.committed is None:
        state.committed = new
        return new
    committed_key = (state.committed.target_lane, state.committed.chosen[1])
    if (new.target_lane, new.chosen[1]) == committed_key:
        state.candidate_key = None
        state.candidate_since = None
        state.committed = new  # same selection, fresh v_0 / costs
        return new

    rebound = _rebind_committed(new, committed_key)
    if rebound is None:
        state.committed = new
        state.candidate_key = None
        state.candidate_since = None
        return new
    state.committed = rebound  # same selection, current costs and geometry

    if new.target_lane == rebound.target_lane:
        candidate_key = (new.target_lane, new.chosen[1])
    else:
        candidate_key = (new.target_lane, None)

    if new.chosen_cell().R < rebound.chosen_cell().R:
        if state.candidate_key != candidate_key:
            state.candidate_key = candidate_key
            state.candidate_since = now
        elif now - state.candidate_since >= window - 1e-9:
            state.committed = new
            state.candidate_key = None
            state.candidate_since = None
            return new
    else:
        state.candidate_key = None
        state.candidate_since = None
    return state.committed


def derive_warning(v_0: float, committed: PlannerOutput, dead_band: float = 0.5) -> Warning:
    """Map the committed output to driver advice with a speed dead-band."""
    diff = committed.v_tar - v_0
    if diff > dead_band:
        speed = SpeedAdvice.ACCELERATE
    elif -diff > dead_band:
        speed = SpeedAdvice.BRAKE
    else:
        speed = SpeedAdvice.KEEP
    return Warning(speed=speed, direction=committed.direction, magnitude=abs(diff))


def plan_cycle(
    graph: MapGraph,
    ego: EntityState,
    others: list[EntityState],
    params: PlannerParams,
    hysteresis: HysteresisState,
    now: float,
    route_lane: Optional[str] = None,
) -> tuple[Situation, PlannerOutput, PlannerOutput, Warning]:
    """One full planning cycle: situation, probe, select, hysteresis, warning.

    Returns (situation, raw output, committed output, warning).
    """
    situation = build_situation(graph, ego, others, params, timestamp=now, route_lane=route_lane)
    table, samples = probe(situation, params)
    raw = select(situation, table, samples)
    committed = step_hysteresis(hysteresis, raw, now, window=params.hysteresis_window_s)
    warning = derive_warning(ego.v, committed, dead_band=params.dead_band_ms)
    return situation, raw, committed, warning
