"""Survival-analysis trajectory costs.

Critical events (collision with each other car, skidding on curvature) are
modeled as an inhomogeneous Poisson process along the predicted future time.
A baseline escape rate 1/tau0 discounts far-future events: the survival
function S(s) is the probability that no event (including escape) happened
by predicted time s. The scalar risk R integrates event rate times severity
under S; utility and comfort integrate speed benefits and actuation
penalties under the same S. Total cost per sample is C = R - U - O.

All quadrature is trapezoidal on the uniform prediction grid; the hot array
math lives in riskprobe._kernels (compiled when available).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .motion import TrajectorySample


@dataclass(frozen=True)
class UncertaintyParams:
    """Predicted position spread of one vehicle.

    sigma_m is the (sensor) uncertainty at s = 0; sigma_b grows linearly with
    predicted time (behavior uncertainty), so the variance at time s is
    sigma_m^2 + (sigma_b * s)^2 and dominates in later steps.
    """

    sigma_m: float = 0.4
    sigma_b: float = 0.3

    def __post_init__(self):
        if self.sigma_m < 0 or self.sigma_b < 0:
            raise ValueError("uncertainty std devs must be >= 0")

    def variance_trace(self, s: np.ndarray) -> np.ndarray:
        return self.sigma_m**2 + (self.sigma_b * s) ** 2


@dataclass(frozen=True)
class RiskParams:
    """Event-rate model parameters.

    tau_hat_coll_inv / tau_hat_curv_inv are the maximal event rates (1/s);
    tau0 the escape time constant (may be inf to disable discounting);
    a_crit / sigma_a the lateral-acceleration skid threshold and its spread;
    car_half_length is the isotropic body radius shrinking center distances
    to gaps. Collision severity is d_coll_base + kappa_d * |v_rel|^2 / 2
    (any contact costs at least the base, closing speed costs quadratically);
    d_curv is the constant curve-event severity.
    """

    tau_hat_coll_inv: float = 0.2
    tau_hat_curv_inv: float = 0.2
    tau0: float = 6.0
    a_crit: float = 6.0
    sigma_a: float = 0.7
    car_half_length: float = 0.75
    kappa_d: float = 0.1
    d_coll_base: float = 1.0
    d_curv: float = 1.0

    def __post_init__(self):
        for name in ("tau_hat_coll_inv", "tau_hat_curv_inv", "tau0", "a_crit", "sigma_a",
                     "car_half_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def escape_rate(self) -> float:
        return 0.0 if math.isinf(self.tau0) else 1.0 / self.tau0


@dataclass(frozen=True)
class BenefitParams:
    """Utility / comfort weights.

    b_d is stored non-positive so deviation from the desired velocity v_d
    reduces utility. utility_offset_per_path is added to U on paths that
    satisfy the route intent, incentivizing the required lane change and
    keeping the advice on the route lane once reached.
    """

    b_t: float = 0.004
    b_d: float = -0.005
    b_c: float = 0.01
    b_j: float = 0.002
    v_d: float = 10.0
    utility_offset_per_path: float = 0.05

    def __post_init__(self):
        if self.b_t < 0 or self.b_c < 0 or self.b_j < 0:
            raise ValueError("b_t, b_c, b_j must be >= 0")
        if self.b_d > 0:
            raise ValueError("b_d must be <= 0 (deviating from v_d cannot pay off)")


@dataclass(frozen=True)
class CostBreakdown:
    """Per-sample scalars plus the traces behind the risk graph."""

    R: float
    U: float
    O: float
    C: float
    rate_trace: np.ndarray
    survival_trace: np.ndarray


def collision_rate(
    ego_point,
    other_point,
    ego_unc: UncertaintyParams,
    other_unc: UncertaintyParams,
    s: float,
    params: RiskParams,
) -> float:
    """Instantaneous collision event rate between two predicted positions.

    The center distance is shrunk by both car half-lengths (floored at zero)
    and compared against the combined, time-grown Gaussian position spread.
    """
    ego_point = np.asarray(ego_point, dtype=np.float64)
    other_point = np.asarray(other_point, dtype=np.float64)
    gap = max(0.0, float(np.linalg.norm(ego_point - other_point)) - 2.0 * params.car_half_length)
    sigma_sq = float(ego_unc.variance_trace(np.float64(s)) + other_unc.variance_trace(np.float64(s)))
    out = _kernels.collision_rate_trace(
        np.array([gap]), np.array([sigma_sq]), params.tau_hat_coll_inv
    )
    return float(out[0])


def curve_rate(v: float, kappa: float, params: RiskParams) -> float:
    """Skid event rate from lateral acceleration v^2 * |kappa| vs. a_crit."""
    out = _kernels.curve_rate_trace(
        np.array([v]), np.array([kappa]), params.tau_hat_curv_inv, params.a_crit, params.sigma_a
    )
    return float(out[0])


def survival_trace(total_rates: np.ndarray, tau0: float, ds: float) -> np.ndarray:
    """S(s) = exp(-int_0^s (1/tau0 + total_rate)) on the grid; S(0) = 1."""
    rates = np.asarray(total_rates, dtype=np.float64)
    if np.any(rates < 0):
        raise ValueError("event rates must be >= 0")
    escape = 0.0 if math.isinf(tau0) else 1.0 / tau0
    return _kernels.survival_trace(rates, escape, ds)


def _pair_arrays(
    ego: TrajectorySample,
    others: list[TrajectorySample],
    ego_unc: UncertaintyParams,
    other_uncs: list[UncertaintyParams],
    params: RiskParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gap, combined variance, and severity traces for each ego/other pair."""
    n = len(ego.s)
    m = len(others)
    gap = np.empty((m, n))
    sigma_sq = np.empty((m, n))
    damage = np.empty((m, n))
    ego_var = ego_unc.variance_trace(ego.s)
    for idx, (other, unc) in enumerate(zip(others, other_uncs)):
        if other.s.shape != ego.s.shape or abs(other.s[-1] - ego.s[-1]) > 1e-9:
            raise ValueError("ego and other samples must share the prediction grid")
        delta = ego.positions - other.positions
        gap[idx] = np.maximum(
            0.0, np.hypot(delta[:, 0], delta[:, 1]) - 2.0 * params.car_half_length
        )
        sigma_sq[idx] = ego_var + unc.variance_trace(other.s)
        v_rel = ego.vel_vec - other.vel_vec
        damage[idx] = params.d_coll_base + 0.5 * params.kappa_d * (
            v_rel[:, 0] ** 2 + v_rel[:, 1] ** 2
        )
    return gap, sigma_sq, damage


def integrated_risk(
    ego: TrajectorySample,
    others: list[TrajectorySample],
    ego_unc: UncertaintyParams,
    other_uncs: list[UncertaintyParams] | UncertaintyParams,
    params: RiskParams,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Scalar risk of one ego sample against all predicted others.

    Returns (R, rate_trace, survival_trace). rate_trace is the summed
    critical event rate (collisions plus curve, without escape): the
    quantity plotted in the risk graph.
    """
    if isinstance(other_uncs, UncertaintyParams):
        other_uncs = [other_uncs] * len(others)
    gap, sigma_sq, damage = _pair_arrays(ego, others, ego_unc, other_uncs, params)
    risk, rate_trace, survival = _kernels.risk_profile(
        gap, sigma_sq, damage, ego.v, ego.kappa,
        params.tau_hat_coll_inv, params.tau_hat_curv_inv, params.a_crit, params.sigma_a,
        params.d_curv, params.escape_rate, float(ego.s[1] - ego.s[0]),
    )
    return risk, rate_trace, survival


def utility(
    ego: TrajectorySample,
    benefit: BenefitParams,
    survival: np.ndarray,
    ds: float,
    route_bonus: bool = False,
) -> float:
    """Speed benefit under the survival discount.

    b_t rewards driven speed, b_d (non-positive) penalizes deviation from
    v_d. The per-path utility offset is added when the sample's path
    satisfies the route intent.
    """
    integrand = benefit.b_t * np.abs(ego.v) + benefit.b_d * np.abs(ego.v - benefit.v_d)
    value = _kernels.weighted_trapezoid(integrand, survival, ds)
    if route_bonus:
        value += benefit.utility_offset_per_path
    return value


def comfort(ego: TrajectorySample, benefit: BenefitParams, survival: np.ndarray, ds: float) -> float:
    """Actuation penalty (always <= 0) under the survival discount."""
    integrand = benefit.b_c * np.abs(ego.a) + benefit.b_j * np.abs(ego.j)
    return -_kernels.weighted_trapezoid(integrand, survival, ds)


def total_cost(risk: float, util: float, comf: float) -> float:
    return risk - util - comf


def evaluate_sample(
    ego: TrajectorySample,
    others: list[TrajectorySample],
    ego_unc: UncertaintyParams,
    other_uncs: list[UncertaintyParams] | UncertaintyParams,
    risk_params: RiskParams,
    benefit_params: BenefitParams,
    route_bonus: bool = False,
) -> CostBreakdown:
    """Full cost evaluation of one ego sample: C = R - U - O."""
    ds = float(ego.s[1] - ego.s[0])
    risk, rate_trace, survival = integrated_risk(ego, others, ego_unc, other_uncs, risk_params)
    util = utility(ego, benefit_params, survival, ds, route_bonus=route_bonus)
    comf = comfort(ego, benefit_params, survival, ds)
    return CostBreakdown(
        R=risk, U=util, O=comf, C=total_cost(risk, util, comf),
        rate_trace=rate_trace, survival_trace=survival,
    )
