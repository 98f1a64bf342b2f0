"""Numeric core for cost evaluation: compiled extension with NumPy fallback.

The Cython extension is optional; if it was not built (or the environment
variable RISKPROBE_PURE is set to a non-empty value) the NumPy implementation
is used instead. Both expose the same functions and agree numerically.
"""

import os

from . import pure

if os.environ.get("RISKPROBE_PURE"):
    _impl = pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND

survival_trace = _impl.survival_trace
collision_rate_trace = _impl.collision_rate_trace
curve_rate_trace = _impl.curve_rate_trace
risk_profile = _impl.risk_profile
weighted_trapezoid = _impl.weighted_trapezoid
