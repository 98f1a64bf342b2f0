"""Trajectory probing: longitudinal velocity-profile sampling and lateral
lane-change path blending.

Ego candidates are piecewise profiles (one acceleration or braking ramp
followed by constant speed) rolled out along a path on a fixed future-time
grid. Other vehicles are predicted with constant velocity along their own
paths. Lane-change paths blend the ego centerline into a neighbor centerline
with a normalized sigmoid weight over a velocity-scaled blend window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rldm import EntityState, Path, build_path


@dataclass(frozen=True)
class ProbeConfig:
    """Sampling grid for the velocity/path probing.

    n_t end velocities are spread evenly over [0, v_max]; each sample is
    predicted for s_h seconds at ds resolution. a_max > 0 and a_min < 0 are
    the strongest allowed ramps.
    """

    n_t: int = 21
    v_max: float = 20.0
    a_max: float = 3.0
    a_min: float = -4.0
    s_h: float = 12.0
    ds: float = 0.1

    def __post_init__(self):
        if self.n_t < 3:
            raise ValueError("need at least 3 velocity samples (brake / keep / accelerate)")
        if not (self.a_min < 0 < self.a_max):
            raise ValueError("acceleration bounds must satisfy a_min < 0 < a_max")
        if not (0 < self.ds < self.s_h):
            raise ValueError("prediction step must satisfy 0 < ds < s_h")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")

    def time_grid(self) -> np.ndarray:
        n = int(round(self.s_h / self.ds)) + 1
        return np.arange(n) * self.ds


@dataclass(frozen=True)
class VelocityProfile:
    """One longitudinal candidate: ramp at accel until v_end, then hold."""

    index: int
    v_end: float
    accel: float
    ramp_duration: float


@dataclass(frozen=True)
class TrajectorySample:
    """Rolled-out prediction on a fixed future-time grid.

    arclength is the planned odometer (non-decreasing even when the path is
    overrun); positions are pinned at the final path point past its end, with
    overran set. vel_vec is the world-frame velocity vector (planned speed
    along the path tangent), which the collision severity model consumes;
    pinned steps keep their planned speed, so running out of road at speed
    stays expensive.
    """

    path: Path
    s: np.ndarray
    positions: np.ndarray
    arclength: np.ndarray
    v: np.ndarray
    a: np.ndarray
    j: np.ndarray
    kappa: np.ndarray
    vel_vec: np.ndarray
    overran: bool
    profile: Optional[VelocityProfile] = None
    entity_id: Optional[str] = None


def sample_profiles(v_0: float, cfg: ProbeConfig) -> list[VelocityProfile]:
    """Sample n_t velocity profiles from v_0 to the evenly spaced end velocities.

    Ramp strength scales with the velocity change: the profile ending at
    v_max ramps at a_max, the full-stop profile ramps at a_min, and the ramp
    duration |v_end - v_0| / |a| is therefore shared by all accelerating
    profiles and by all braking profiles (the braking one equals |v_0/a_min|).
    """
    if not (0.0 <= v_0 <= cfg.v_max):
        raise ValueError(f"current velocity {v_0} outside [0, {cfg.v_max}]")
    profiles = []
    for h in range(cfg.n_t):
        v_end = h * cfg.v_max / (cfg.n_t - 1)
        if v_end > v_0:
            accel = cfg.a_max * (v_end - v_0) / (cfg.v_max - v_0)
        elif v_end < v_0:
            accel = cfg.a_min * (v_0 - v_end) / v_0
        else:
            accel = 0.0
        ramp = abs(v_end - v_0) / abs(accel) if accel != 0.0 else 0.0
        profiles.append(VelocityProfile(index=h, v_end=v_end, accel=accel, ramp_duration=ramp))
    return profiles


def profile_state(profile: VelocityProfile, v_0: float, s) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form velocity and arclength of a profile at future time(s) s."""
    s = np.asarray(s, dtype=np.float64)
    ramp = profile.ramp_duration
    s_r = np.minimum(s, ramp)
    v = np.where(s < ramp, v_0 + profile.accel * s, profile.v_end)
    arc = v_0 * s_r + 0.5 * profile.accel * s_r**2 + profile.v_end * np.maximum(0.0, s - ramp)
    return v, arc


def _finish_sample(path, s, arc, v, a, ds, profile=None, entity_id=None, start_arc=0.0) -> TrajectorySample:
    abs_arc = start_arc + arc
    overran = bool(abs_arc[-1] > path.length + 1e-9)
    clamped = np.minimum(abs_arc, path.length)
    positions = path.point_at(clamped)
    kappa = path.curvature_at(clamped)
    j = np.zeros_like(a)
    j[1:] = np.diff(a) / ds  # single impulse at the ramp/constant switch
    vel_vec = v[:, None] * path.tangents_at(clamped)
    return TrajectorySample(
        path=path, s=s, positions=positions, arclength=abs_arc, v=v, a=a, j=j,
        kappa=kappa, vel_vec=vel_vec, overran=overran, profile=profile, entity_id=entity_id,
    )


def roll_out(
    profile: VelocityProfile, path: Path, v_0: float, cfg: ProbeConfig, start_arc: float = 0.0
) -> TrajectorySample:
    """Integrate one velocity profile along a path on the prediction grid.

    Velocity and arclength come from the closed-form ramp kinematics, so the
    grid values are exact. A trajectory that overruns the path end keeps its
    planned velocity but is pinned at the final point and flagged.
    """
    s = cfg.time_grid()
    v, arc = profile_state(profile, v_0, s)
    v = np.clip(v, 0.0, cfg.v_max)
    a = np.where(s < profile.ramp_duration, profile.accel, 0.0)
    return _finish_sample(path, s, arc, v, a, cfg.ds, profile=profile, start_arc=start_arc)


def predict_other(state: EntityState, cfg: ProbeConfig, path: Optional[Path] = None) -> TrajectorySample:
    """Constant-velocity prediction of another car along its nearest path."""
    path = path if path is not None else state.path
    if path is None:
        raise ValueError(f"entity {state.entity_id!r} has no path annotation")
    start_arc = state.arc_position if state.arc_position is not None else 0.0
    s = cfg.time_grid()
    v = np.full_like(s, state.v)
    arc = state.v * s
    a = np.zeros_like(s)
    return _finish_sample(path, s, arc, v, a, cfg.ds, entity_id=state.entity_id, start_arc=start_arc)


@dataclass(frozen=True)
class BlendSpec:
    """Lane-change blend window parameters.

    The blend starts l_start = v_0 * s_start meters ahead and spans
    l_blend = v_0 * sqrt(l_c * d_path) meters, i.e. sqrt(l_c * d_path)
    seconds of travel at the current speed. k tunes the sigmoid steepness.
    """

    s_start: float
    l_c: float
    d_path: float
    k: float = 10.0

    def __post_init__(self):
        if self.s_start < 0:
            raise ValueError("blend start time must be >= 0")
        if self.l_c <= 0:
            raise ValueError("blend scale l_c must be > 0")
        if self.d_path < 0:
            raise ValueError("lateral gap must be >= 0")
        if self.k <= 0:
            raise ValueError("sigmoid steepness must be > 0")

    @classmethod
    def from_duration(cls, s_start: float, duration: float, d_path: float, k: float = 10.0) -> "BlendSpec":
        """Pick l_c so the blend takes `duration` seconds at the current speed."""
        if d_path <= 0:
            return cls(s_start=s_start, l_c=1.0, d_path=d_path, k=k)
        return cls(s_start=s_start, l_c=duration**2 / d_path, d_path=d_path, k=k)


def blend_weights(w: np.ndarray, k: float) -> np.ndarray:
    """Normalized sigmoid over the unit blend parameter.

    The logistic curve centered at w = 0.5 is shifted and scaled so the
    weight is exactly 0 at w = 0 and 1 at w = 1 (and 0.5 at the midpoint),
    keeping the blended path continuous at both interval ends.
    """
    w = np.clip(w, 0.0, 1.0)
    lo = 1.0 / (1.0 + math.exp(k / 2))
    hi = 1.0 / (1.0 + math.exp(-k / 2))
    sig = 1.0 / (1.0 + np.exp(-k * (w - 0.5)))
    return (sig - lo) / (hi - lo)


def blend_paths(p_ego: Path, p_other: Path, v_0: float, spec: BlendSpec) -> Path:
    """Blend the ego path into a neighbor path over a sigmoid window.

    Both paths are sampled by their own arclength on a common evenly spaced
    parameter grid; before l_start the result follows p_ego, after
    l_end = l_start + l_blend it follows p_other. A zero-length blend window
    (v_0 = 0 or d_path = 0) degenerates to a step at l_start.
    """
    l_start = v_0 * spec.s_start
    l_blend = v_0 * math.sqrt(spec.l_c * spec.d_path)
    l_end = l_start + l_blend

    grid = np.arange(0.0, p_other.length, 0.5)
    grid = np.unique(np.concatenate([grid, [l_start, min(l_end, p_other.length), p_other.length]]))
    grid = grid[(grid >= 0.0) & (grid <= p_other.length)]

    if l_blend > 0.0:
        w = blend_weights((grid - l_start) / l_blend, spec.k)
    else:
        w = (grid >= l_start).astype(np.float64)
    ego_pts = p_ego.point_at(grid)
    other_pts = p_other.point_at(grid)
    points = (1.0 - w[:, None]) * ego_pts + w[:, None] * other_pts
    return build_path(points, lane_ids=tuple(dict.fromkeys(p_ego.lane_ids + p_other.lane_ids)))
