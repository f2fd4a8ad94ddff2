"""
The replicator map f_{a,b}(x) = x / (x + (1-x) e^{a(x-b)}) on [0,1].

Values are computed in log-odds form, f(x) = 1 / (1 + e^u) with
u = a(x-b) + ln((1-x)/x), so nothing overflows for large a while the
result stays in [0,1]. The endpoints 0 and 1 are exact fixed points.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit, logit

from .errors import CriticalPointSingularity, DomainError, MonotoneRegime

__all__ = [
    "Params",
    "Stability",
    "FixedPointReport",
    "CriticalPoints",
    "NEUTRAL_BAND",
    "classify",
    "eval_f",
    "eval_f_prime",
    "fixed_points",
    "critical_points",
    "absorbing_interval",
    "symmetric_params",
    "iterate",
    "iterate_sum_formula",
    "schwarzian",
]

logger = logging.getLogger(__name__)

# |multiplier| within this band of 1 counts as neutral
NEUTRAL_BAND = 1e-9

# truncation of the open unit interval used when a <= 4
UNIT_MARGIN = 1e-9

_MAX_LOG = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class Params:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and a > 0):
            raise DomainError(f"parameter a must be a positive finite real, got {self.a!r}", "invalid-a")
        if not (math.isfinite(b) and 0 < b < 1):
            raise DomainError(f"parameter b must lie in (0,1), got {self.b!r}", "invalid-b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def is_unimodal_regime(self) -> bool:
        # a > 4: the map has its two interior turning points
        return self.a > 4

    @property
    def is_fixed_point_unstable(self) -> bool:
        return self.a > 2 / (self.b * (1 - self.b))


class Stability(str, Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    NEUTRAL = "neutral"


def classify(multiplier: float, band: float = NEUTRAL_BAND) -> Stability:
    size = abs(multiplier)
    if size < 1 - band:
        return Stability.ATTRACTING
    if size > 1 + band:
        return Stability.REPELLING
    return Stability.NEUTRAL


@dataclass(frozen=True)
class FixedPointReport:
    location: float
    multiplier: float
    classification: Stability


@dataclass(frozen=True)
class CriticalPoints:
    x_max: float
    x_min: float
    f_max: float
    f_min: float


def _unit_array(x: ArrayLike, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"{name} must lie in [0,1], got {x!r}", "x-out-of-domain")
    return arr


def _result(arr: np.ndarray, like: ArrayLike):
    return float(arr) if np.ndim(like) == 0 else arr


def _log_odds_shift(p: Params, x: np.ndarray) -> np.ndarray:
    """ u = a(x-b) + ln((1-x)/x), infinite at the endpoints """
    with np.errstate(divide="ignore"):
        return p.a * (x - p.b) - logit(x)


def eval_f(p: Params, x: ArrayLike):
    arr = _unit_array(x)
    u = _log_odds_shift(p, arr)
    # expit(-inf) = 0 and expit(inf) = 1 exactly at the endpoints
    return _result(expit(-u), x)


def eval_f_prime(p: Params, x: ArrayLike):
    """
    f'(x) = e^{a(x-b)}(ax^2 - ax + 1) / (x + (1-x)e^{a(x-b)})^2, rewritten as
    f(1-f)(ax^2 - ax + 1) / (x(1-x)) so that no exponential is formed.
    """
    arr = _unit_array(x)
    u = _log_odds_shift(p, arr)
    spread = expit(-u) * expit(u)
    q = arr * (1 - arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = spread * (1 - p.a * q) / q
    if np.any(arr == 0):
        out = np.where(arr == 0, _endpoint_slope(p.a * p.b), out)
    if np.any(arr == 1):
        out = np.where(arr == 1, _endpoint_slope(p.a * (1 - p.b)), out)
    return _result(out, x)


def _endpoint_slope(log_slope: float) -> float:
    """ e^{log_slope}, inf once it leaves the binary64 range """
    return math.exp(log_slope) if log_slope < _MAX_LOG else math.inf


def fixed_points(p: Params) -> List[FixedPointReport]:
    # the endpoint slopes e^{ab} and e^{a(1-b)} always exceed 1
    at_b = 1 - p.a * p.b * (1 - p.b)
    return [
        FixedPointReport(0.0, _endpoint_slope(p.a * p.b), Stability.REPELLING),
        FixedPointReport(p.b, at_b, classify(at_b)),
        FixedPointReport(1.0, _endpoint_slope(p.a * (1 - p.b)), Stability.REPELLING),
    ]


def critical_points(p: Params) -> CriticalPoints:
    if not p.is_unimodal_regime:
        raise MonotoneRegime(f"f is monotone for a={p.a!r} <= 4, no interior critical points")
    x_min = 0.5 + math.sqrt(0.25 - 1 / p.a)
    # x_max * x_min = 1/a, avoids cancellation in 1/2 - sqrt(...)
    x_max = 1 / (p.a * x_min)
    return CriticalPoints(
        x_max=x_max,
        x_min=x_min,
        f_max=eval_f(p, x_max),
        f_min=eval_f(p, x_min),
    )


def absorbing_interval(p: Params) -> tuple[float, float]:
    """ [f_min, f_max] for a > 4, otherwise the truncated open unit interval """
    if not p.is_unimodal_regime:
        return (UNIT_MARGIN, 1 - UNIT_MARGIN)
    crit = critical_points(p)
    return (crit.f_min, crit.f_max)


def symmetric_params(p: Params) -> Params:
    # x -> 1-x conjugates f_{a,b} to f_{a,1-b}
    return Params(p.a, 1 - p.b)


def iterate(p: Params, x0: float, n: int) -> List[float]:
    if n < 0:
        raise DomainError(f"iteration count must be non-negative, got {n}", "invalid-n")
    x = float(_unit_array(x0, "x0"))
    orbit = [x]
    for _ in range(n):
        x = eval_f(p, x)
        orbit.append(x)
    return orbit


def iterate_sum_formula(p: Params, x0: float, n: int) -> float:
    """
    f^n(x) = x / (x + (1-x) exp(a * sum_{i<n} (f^i(x) - b))), evaluated in
    log-odds form from the partial sums of the orbit segment.
    """
    x0 = float(_unit_array(x0, "x0"))
    if x0 in (0.0, 1.0):
        raise DomainError("the partial-sum formula needs x0 in (0,1)", "x-out-of-domain")
    if n < 1:
        raise DomainError(f"iteration count must be positive, got {n}", "invalid-n")
    segment = iterate(p, x0, n - 1)
    drift = math.fsum(x - p.b for x in segment)
    return float(expit(-(p.a * drift - logit(x0))))


def schwarzian(p: Params, x: float, delta: float | None = None) -> float:
    """
    Sf = (f''/f')' - (f''/f')^2 / 2 from closed-form derivatives.

    With q = x(1-x) and phi = 1/q - a we have f' = f(1-f) phi, so
    f''/f' = (1-2f) phi + phi'/phi and its derivative is again elementary.
    The value is -inf at the critical points; points within ``delta`` of them
    are rejected.
    """
    crit = critical_points(p)
    if delta is None:
        delta = 1e-6 * (crit.x_min - crit.x_max)
    if delta <= 0:
        raise DomainError(f"exclusion radius must be positive, got {delta!r}", "invalid-delta")
    x = float(_unit_array(x))
    if not 0 < x < 1:
        raise DomainError("the Schwarzian is evaluated on (0,1)", "x-out-of-domain")
    if abs(x - crit.x_max) <= delta or abs(x - crit.x_min) <= delta:
        raise CriticalPointSingularity(f"x={x!r} lies within {delta!r} of a critical point")

    f = eval_f(p, x)
    q = x * (1 - x)
    dq = 1 - 2 * x
    phi = 1 / q - p.a
    dphi = -dq / q ** 2
    ddphi = 2 / q ** 2 + 2 * dq ** 2 / q ** 3
    slope = f * (1 - f) * phi

    eta = (1 - 2 * f) * phi + dphi / phi
    deta = -2 * slope * phi + (1 - 2 * f) * dphi + ddphi / phi - (dphi / phi) ** 2
    return deta - 0.5 * eta ** 2
