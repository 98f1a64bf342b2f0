"""NumPy fallback for the per-sample cost kernels.

Mirrors the compiled extension in riskprobe._kernels._core; both backends
must produce the same numbers to float tolerance (see tests/test_kernels.py).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

BACKEND = "pure"


def survival_trace(total_rate: np.ndarray, escape_rate: float, ds: float) -> np.ndarray:
    """Survival probabilities on the grid: S(s) = exp(-int (rate + escape)).

    Trapezoidal accumulation of the hazard; S[0] is exactly 1 and the result
    is non-increasing for non-negative rates.
    """
    rate = np.asarray(total_rate, dtype=np.float64) + escape_rate
    hazard = np.empty_like(rate)
    hazard[0] = 0.0
    np.cumsum((rate[:-1] + rate[1:]) * (0.5 * ds), out=hazard[1:])
    return np.exp(-hazard)


def collision_rate_trace(gap: np.ndarray, sigma_sq: np.ndarray, tau_hat_inv: float) -> np.ndarray:
    """Gaussian-overlap collision event rate for a gap/variance trace.

    Degenerate variance: rate is tau_hat_inv where the gap is closed and 0
    otherwise.
    """
    gap = np.asarray(gap, dtype=np.float64)
    sigma_sq = np.asarray(sigma_sq, dtype=np.float64)
    rate = np.zeros(np.broadcast(gap, sigma_sq).shape)
    ok = sigma_sq > 0.0
    rate[ok] = tau_hat_inv * np.exp(-0.5 * gap[ok] ** 2 / sigma_sq[ok])
    rate[~ok & (gap <= 0.0)] = tau_hat_inv
    return rate


def curve_rate_trace(
    v: np.ndarray, kappa: np.ndarray, tau_hat_inv: float, a_crit: float, sigma_a: float
) -> np.ndarray:
    """Skid event rate: tail probability of lateral acceleration above a_crit."""
    a_lat = np.asarray(v, dtype=np.float64) ** 2 * np.abs(kappa)
    return tau_hat_inv * ndtr((a_lat - a_crit) / sigma_a)


def risk_profile(
    gap: np.ndarray,
    sigma_sq: np.ndarray,
    damage: np.ndarray,
    v: np.ndarray,
    kappa: np.ndarray,
    tau_coll_inv: float,
    tau_curv_inv: float,
    a_crit: float,
    sigma_a: float,
    d_curv: float,
    escape_rate: float,
    ds: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Integrated risk of one ego sample against all predicted others.

    gap, sigma_sq, damage are (n_others, n_steps); v, kappa are the ego
    traces on the same grid. Returns (R, rate_trace, survival) where
    rate_trace is the summed critical event rate (collisions + curve,
    no escape) used for the risk graph.
    """
    coll = collision_rate_trace(gap, sigma_sq, tau_coll_inv)
    curve = curve_rate_trace(v, kappa, tau_curv_inv, a_crit, sigma_a)
    rate_trace = coll.sum(axis=0) + curve
    survival = survival_trace(rate_trace, escape_rate, ds)
    integrand = ((coll * damage).sum(axis=0) + curve * d_curv) * survival
    risk = float(np.trapezoid(integrand, dx=ds))
    return risk, rate_trace, survival


def weighted_trapezoid(values: np.ndarray, survival: np.ndarray, ds: float) -> float:
    """Trapezoidal integral of values * survival on the uniform grid."""
    return float(np.trapezoid(np.asarray(values, dtype=np.float64) * survival, dx=ds))
