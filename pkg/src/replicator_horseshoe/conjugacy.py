"""
The coordinate change y = h(x) = ln((1-x)/x) and the conjugate map

    g_{a,b}(y) = y + a / (e^y + 1) - ab,     h o f_{a,b} = g_{a,b} o h.

h is decreasing, so the local maximum x_max of f corresponds to the local
minimum y_min = h(x_max) of g and vice versa. Every quantity is written through
the logistic function s(y) = 1 / (1 + e^y), which never overflows.
"""

import logging
import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit, logit

from .errors import DomainError, MonotoneRegime
from .map_core import Params

__all__ = [
    "GCriticalData",
    "ConjugateMap",
    "ReplicatorChart",
    "Mirrored",
    "h",
    "h_inv",
    "eval_g",
    "eval_g_prime",
    "eval_g_second",
    "g_critical_data",
    "g_step",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GCriticalData:
    y_max: float
    y_min: float
    g_min: float
    g_max: float
    y0: float


def _result(arr: np.ndarray, like: ArrayLike):
    return float(arr) if np.ndim(like) == 0 else arr


def _finite(y: ArrayLike) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError(f"y must be finite, got {y!r}", "y-not-finite")
    return arr


def h(x: ArrayLike):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)) or np.any(~(arr < 1)):
        raise DomainError(f"h is defined on the open interval (0,1), got {x!r}", "x-out-of-domain")
    return _result(-logit(arr), x)


def h_inv(y: ArrayLike):
    return _result(expit(-_finite(y)), y)


def eval_g(p: Params, y: ArrayLike):
    arr = _finite(y)
    return _result(arr + p.a * expit(-arr) - p.a * p.b, y)


def eval_g_prime(p: Params, y: ArrayLike):
    """ g'(y) = 1 - a e^y / (e^y + 1)^2 = 1 - a s(1-s) """
    arr = _finite(y)
    s = expit(-arr)
    return _result(1 - p.a * s * (1 - s), y)


def eval_g_second(p: Params, y: ArrayLike):
    # a e^y (e^y - 1) / (e^y + 1)^3 = a s(1-s)(1-2s), odd in y
    arr = _finite(y)
    s = expit(-arr)
    return _result(p.a * s * (1 - s) * (1 - 2 * s), y)


def g_critical_data(p: Params) -> GCriticalData:
    if not p.is_unimodal_regime:
        raise MonotoneRegime(f"g is monotone for a={p.a!r} <= 4, no critical points")
    # ln(a/2 - 1 + sqrt(a^2/4 - a)) = arccosh(a/2 - 1); the other root is its negative
    y_min = math.acosh(p.a / 2 - 1)
    y_max = -y_min
    return GCriticalData(
        y_max=y_max,
        y_min=y_min,
        g_min=eval_g(p, y_min),
        g_max=eval_g(p, y_max),
        y0=math.log((1 - p.b) / p.b),
    )


def g_step(a: float, ab: float, y: float) -> float:
    """ scalar g for long orbit loops, same branch-on-sign logistic as expit """
    if y > 0:
        e = math.exp(-y)
        return y + a * e / (1 + e) - ab
    return y + a / (1 + math.exp(y)) - ab


def g_slope_step(a: float, y: float) -> float:
    e = math.exp(-abs(y))
    return 1 - a * e / (1 + e) ** 2


@runtime_checkable
class ConjugateMap(Protocol):
    """
    A map of the line with the shape of g_{a,b}: increasing, decreasing,
    increasing, with critical points y_max < y_min. This is what the
    horseshoe construction needs.
    """
    a: float
    b: float
    label: str

    def value(self, y: ArrayLike): ...

    def slope(self, y: ArrayLike): ...

    def critical_data(self) -> GCriticalData: ...

    def to_x(self, y: ArrayLike): ...


class ReplicatorChart:
    def __init__(self, params: Params):
        self.params = params
        self.a = params.a
        self.b = params.b
        self.label = "replicator"

    def __repr__(self):
        return f"ReplicatorChart(a={self.a!r}, b={self.b!r})"

    def value(self, y: ArrayLike):
        return eval_g(self.params, y)

    def slope(self, y: ArrayLike):
        return eval_g_prime(self.params, y)

    def critical_data(self) -> GCriticalData:
        return g_critical_data(self.params)

    def to_x(self, y: ArrayLike):
        return h_inv(y)


class Mirrored:
    """ y -> -y reflection: value(y) = -base.value(-y); g_{a,1-b} is Mirrored(g_{a,b}) """

    def __init__(self, base: ConjugateMap):
        self.base = base
        self.a = base.a
        self.b = 1 - base.b
        self.label = f"mirrored-{base.label}"

    def value(self, y: ArrayLike):
        return -self.base.value(-np.asarray(y, dtype=float)) if np.ndim(y) else -self.base.value(-y)

    def slope(self, y: ArrayLike):
        return self.base.slope(-np.asarray(y, dtype=float)) if np.ndim(y) else self.base.slope(-y)

    def critical_data(self) -> GCriticalData:
        crit = self.base.critical_data()
        return GCriticalData(
            y_max=-crit.y_min,
            y_min=-crit.y_max,
            g_min=-crit.g_max,
            g_max=-crit.g_min,
            y0=-crit.y0,
        )

    def to_x(self, y: ArrayLike):
        return self.base.to_x(-np.asarray(y, dtype=float)) if np.ndim(y) else self.base.to_x(-y)
