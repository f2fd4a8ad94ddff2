"""
Periodic orbits, attractors and bifurcation scans.

Searches run in a chart z = chart(x) in which the map is G = chart o f o chart^-1;
for the replicator map the chart is h and G = g_{a,b}. The y-coordinate spreads
out the neighbourhoods of 0 and 1 where f^n is nearly flat, and multipliers
are chart independent.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq, newton

from .conjugacy import eval_g, eval_g_prime, g_critical_data, g_slope_step, g_step, h, h_inv
from .errors import ConvergenceFailure, DomainError, MonotoneRegime, PreconditionFailed
from .map_core import Params, Stability, absorbing_interval, classify, eval_f, eval_f_prime
from .parallel import map_in_threads_wrapper

__all__ = [
    "IntervalMap",
    "ReplicatorMap",
    "PeriodicOrbit",
    "Attractor",
    "BifurcationSample",
    "DEFAULT_TRANSIENT",
    "DEFAULT_MAX_PERIOD",
    "DEFAULT_GRID_PER_PERIOD",
    "period_doubling_threshold",
    "find_periodic_orbits",
    "periodic_orbit_from",
    "period2_orbit",
    "attractors_from_critical_orbits",
    "lyapunov_exponent",
    "bifurcation_scan",
]

logger = logging.getLogger(__name__)

DEFAULT_TRANSIENT = 10_000
DEFAULT_MAX_PERIOD = 64
DEFAULT_GRID_PER_PERIOD = 2048
DEFAULT_SAMPLES = 64
DEFAULT_LYAPUNOV_STEPS = 10_000

DEDUP_TOL = 1e-9
RECURRENCE_TOL = 1e-9
_SUBDIVISIONS = 32
_XTOL = 1e-14
_RTOL = 4 * np.finfo(float).eps


@runtime_checkable
class IntervalMap(Protocol):
    """ an interval map together with a chart in which orbits are searched """
    b: float

    def step(self, x: ArrayLike): ...

    def slope(self, x: ArrayLike): ...

    def chart(self, x: ArrayLike): ...

    def chart_inv(self, z: ArrayLike): ...

    def chart_step(self, z: ArrayLike): ...

    def chart_slope(self, z: ArrayLike): ...

    def search_interval(self) -> Tuple[float, float]: ...


class ReplicatorMap:
    def __init__(self, params: Params):
        self.params = params
        self.b = params.b

    def __repr__(self):
        return f"ReplicatorMap(a={self.params.a!r}, b={self.params.b!r})"

    def step(self, x: ArrayLike):
        return eval_f(self.params, x)

    def slope(self, x: ArrayLike):
        return eval_f_prime(self.params, x)

    def chart(self, x: ArrayLike):
        return h(x)

    def chart_inv(self, z: ArrayLike):
        return h_inv(z)

    def chart_step(self, z: ArrayLike):
        return eval_g(self.params, z)

    def chart_slope(self, z: ArrayLike):
        return eval_g_prime(self.params, z)

    def search_interval(self) -> Tuple[float, float]:
        return absorbing_interval(self.params)


def _as_interval_map(target) -> IntervalMap:
    if isinstance(target, Params):
        return ReplicatorMap(target)
    if isinstance(target, IntervalMap):
        return target
    raise DomainError(f"expected Params or an interval map, got {type(target).__name__}", "invalid-target")


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: Tuple[float, ...]
    multiplier: float
    mean: float
    stability: Stability
    # the orbit in dynamical order, starting from its smallest point
    cycle: Tuple[float, ...] = field(compare=False, repr=False, default=())

    @property
    def lyapunov(self) -> float:
        return math.log(abs(self.multiplier)) / self.period if self.multiplier else -math.inf


@dataclass(frozen=True)
class Attractor:
    # neutral: a recurrent cycle with |multiplier| within NEUTRAL_BAND of 1
    kind: Literal["periodic", "neutral", "aperiodic"]
    sources: Tuple[str, ...]
    points: Tuple[float, ...]
    lyapunov: float
    orbit: PeriodicOrbit | None = None

    @property
    def period(self) -> int | None:
        return self.orbit.period if self.orbit else None

    @property
    def detected_period(self) -> int | Literal["aperiodic"]:
        return self.orbit.period if self.orbit else "aperiodic"


@dataclass(frozen=True)
class BifurcationSample:
    a: float
    branch: int
    attractor_points: Tuple[float, ...]
    detected_period: int | Literal["aperiodic"]
    lyapunov: float


def period_doubling_threshold(b: float) -> float:
    if not 0 < b < 1:
        raise DomainError(f"b must lie in (0,1), got {b!r}", "invalid-b")
    return 2 / (b * (1 - b))


def _chart_power(m: IntervalMap, z: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """ G^n(z) and (G^n)'(z) by the chain rule """
    w = np.array(z, dtype=float)
    slope = np.ones_like(w)
    for _ in range(n):
        slope = slope * m.chart_slope(w)
        w = m.chart_step(w)
    return w, slope


def _scalar_residual(m: IntervalMap, n: int):
    def residual(z: float) -> float:
        return float(_chart_power(m, np.array([z]), n)[0][0]) - z

    def derivative(z: float) -> float:
        return float(_chart_power(m, np.array([z]), n)[1][0]) - 1.0

    return residual, derivative


def _roots_on_cell(m: IntervalMap, n: int, lo: float, hi: float) -> List[float]:
    """ roots of G^n(z) - z on [lo, hi], resolving pairs hidden between extrema """
    residual, derivative = _scalar_residual(m, n)
    nodes = np.linspace(lo, hi, _SUBDIVISIONS + 1)
    values, slopes = _chart_power(m, nodes, n)
    F = values - nodes
    D = slopes - 1.0
    roots = [float(z) for z, f in zip(nodes, F) if f == 0]
    for i in range(_SUBDIVISIONS):
        z0, z1, f0, f1 = nodes[i], nodes[i + 1], F[i], F[i + 1]
        if f0 * f1 < 0:
            roots.append(brentq(residual, z0, z1, xtol=_XTOL, rtol=_RTOL))
        elif f0 * f1 > 0 and D[i] * D[i + 1] < 0:
            zc = brentq(derivative, z0, z1, xtol=_XTOL, rtol=_RTOL)
            fc = residual(zc)
            if fc == 0:
                roots.append(zc)
            elif fc * f0 < 0:
                roots.append(brentq(residual, z0, zc, xtol=_XTOL, rtol=_RTOL))
                roots.append(brentq(residual, zc, z1, xtol=_XTOL, rtol=_RTOL))
    return roots


def _least_period(m: IntervalMap, z: float, n: int) -> int:
    w = z
    for d in range(1, n + 1):
        w = float(m.chart_step(w))
        if n % d == 0 and abs(w - z) <= RECURRENCE_TOL * (1 + abs(z)):
            return d
    return n


def periodic_orbit_from(target, z: float, period: int) -> PeriodicOrbit:
    """ the orbit through the chart point ``z``, assumed periodic with least period ``period`` """
    m = _as_interval_map(target)
    cycle_z = [float(z)]
    for _ in range(period - 1):
        cycle_z.append(float(m.chart_step(cycle_z[-1])))
    return _build_orbit(m, cycle_z)


def _build_orbit(m: IntervalMap, cycle_z: Sequence[float]) -> PeriodicOrbit:
    period = len(cycle_z)
    multiplier = math.prod(float(m.chart_slope(z)) for z in cycle_z)
    cycle_x = [float(m.chart_inv(z)) for z in cycle_z]
    start = int(np.argmin(cycle_x))
    cycle_x = cycle_x[start:] + cycle_x[:start]
    return PeriodicOrbit(
        period=period,
        points=tuple(sorted(cycle_x)),
        multiplier=multiplier,
        mean=math.fsum(cycle_x) / period,
        stability=classify(multiplier),
        cycle=tuple(cycle_x),
    )


def find_periodic_orbits(target, n: int, grid: int | None = None) -> List[PeriodicOrbit]:
    """
    Orbits of least period n. Sign changes of G^n(z) - z are located on a
    grid uniform in the chart over the absorbing interval; cells holding a
    sign change or an extremum of G^n(z) - z are subdivided and solved with
    Brent's method. Orbits are ordered by their smallest point.
    """
    m = _as_interval_map(target)
    if n < 1:
        raise DomainError(f"period must be positive, got {n}", "invalid-n")
    grid = DEFAULT_GRID_PER_PERIOD * n if grid is None else grid
    if grid < 10 * n:
        raise DomainError(f"grid of {grid} points is too coarse for period {n}", "invalid-grid")

    lo, hi = sorted(float(m.chart(x)) for x in m.search_interval())
    nodes = np.linspace(lo, hi, grid + 1)
    values, slopes = _chart_power(m, nodes, n)
    F = values - nodes
    D = slopes - 1.0
    candidate = (F[:-1] * F[1:] <= 0) | (D[:-1] * D[1:] < 0)
    cells = np.flatnonzero(candidate)
    logger.debug("period %d: %d candidate cells out of %d", n, len(cells), grid)

    roots: List[float] = []
    for i in cells:
        roots.extend(_roots_on_cell(m, n, float(nodes[i]), float(nodes[i + 1])))
    roots = sorted(z for z in roots if _least_period(m, z, n) == n)

    orbits: List[PeriodicOrbit] = []
    seen_x: List[float] = []
    for z in roots:
        x = float(m.chart_inv(z))
        if any(abs(x - s) <= DEDUP_TOL for s in seen_x):
            continue
        cycle_z = [z]
        for _ in range(n - 1):
            w = float(m.chart_step(cycle_z[-1]))
            # prefer the independently solved root for each cycle member
            nearest = min(roots, key=lambda r: abs(r - w))
            cycle_z.append(nearest if abs(nearest - w) <= DEDUP_TOL * (1 + abs(w)) else w)
        orbit = _build_orbit(m, cycle_z)
        seen_x.extend(orbit.points)
        orbits.append(orbit)
    orbits.sort(key=lambda o: o.points[0])
    return orbits


def period2_orbit(p: Params) -> PeriodicOrbit:
    """ the period-2 orbit {p_a, q_a}, p_a < b < q_a, born at the period-doubling threshold """
    threshold = period_doubling_threshold(p.b)
    if not p.a > threshold:
        raise PreconditionFailed(f"a={p.a!r} does not exceed the period-doubling threshold {threshold!r}",
                                 "below-period-doubling", p.a - threshold)
    m = ReplicatorMap(p)
    crit = g_critical_data(p)
    y0 = crit.y0
    residual, _ = _scalar_residual(m, 2)
    # p_a lies above y0 in the y-coordinate, where g^2(y) - y is positive near y0
    offsets = np.geomspace(1e-7 * (1 + abs(y0)), crit.g_max - y0, 400)
    signs = np.sign([residual(y0 + d) for d in offsets])
    if signs[0] <= 0:
        raise ConvergenceFailure(f"a={p.a!r} is too close to the threshold to separate the period-2 orbit")
    flips = np.flatnonzero(signs <= 0)
    if not len(flips):
        raise ConvergenceFailure("could not bracket the period-2 orbit")
    k = flips[0]
    y = brentq(residual, y0 + offsets[k - 1], y0 + offsets[k], xtol=_XTOL, rtol=_RTOL)
    return _build_orbit(m, [y, float(eval_g(p, y))])


def _log_spread(w: float) -> float:
    """ ln(s(1-s)) for s the logistic function of w """
    return -abs(w) - 2 * math.log1p(math.exp(-abs(w)))


def _log_f_slope(a: float, ab: float, y: float) -> float:
    """ ln|f'(x)| at x = h_inv(y), from f' = h_inv'(g(y)) g'(y) h'(x) """
    slope = g_slope_step(a, y)
    if slope == 0:
        y = y + 1e-15 * (1 + abs(y))
        slope = g_slope_step(a, y)
    return math.log(abs(slope)) + _log_spread(g_step(a, ab, y)) - _log_spread(y)


def lyapunov_exponent(p: Params, x0: float, n: int = DEFAULT_LYAPUNOV_STEPS, transient: int = 1000) -> float:
    if not 0 < x0 < 1:
        raise DomainError(f"x0 must lie in (0,1), got {x0!r}", "x-out-of-domain")
    if n < 1000:
        raise DomainError(f"at least 1000 steps are averaged, got {n}", "invalid-n")
    if transient < 0:
        raise DomainError(f"transient must be non-negative, got {transient}", "invalid-transient")
    a, ab = p.a, p.a * p.b
    y = h(x0)
    for _ in range(transient):
        y = g_step(a, ab, y)
    terms = []
    for _ in range(n):
        terms.append(_log_f_slope(a, ab, y))
        y = g_step(a, ab, y)
    return math.fsum(terms) / n


def _polish_cycle(p: Params, y: float, period: int) -> float:
    a, ab = p.a, p.a * p.b

    def residual(z: float) -> float:
        w = z
        for _ in range(period):
            w = g_step(a, ab, w)
        return w - z

    def derivative(z: float) -> float:
        w, product = z, 1.0
        for _ in range(period):
            product *= g_slope_step(a, w)
            w = g_step(a, ab, w)
        return product - 1.0

    try:
        polished = newton(residual, y, fprime=derivative, tol=1e-14, maxiter=50)
    except (RuntimeError, OverflowError, ZeroDivisionError):
        logger.debug("newton polish of the period-%d cycle near y=%r failed, keeping the iterate", period, y)
        return y
    return polished if abs(residual(polished)) <= abs(residual(y)) else y


def _same_orbit(first: Attractor, second: Attractor) -> bool:
    if first.kind != second.kind:
        return False
    if first.orbit is not None:
        return first.period == second.period and \
            min(abs(first.points[0] - x) for x in second.points) <= DEDUP_TOL
    # aperiodic clouds are identified when their hulls overlap
    return first.points[0] <= second.points[-1] and second.points[0] <= first.points[-1]


def attractors_from_critical_orbits(p: Params, transient: int = DEFAULT_TRANSIENT,
                                    max_period: int = DEFAULT_MAX_PERIOD,
                                    samples: int = DEFAULT_SAMPLES,
                                    lyapunov_steps: int = DEFAULT_LYAPUNOV_STEPS) -> List[Attractor]:
    """
    Attractors seen by the two critical orbits. With negative Schwarzian
    every attracting orbit attracts a critical point, so at most two are found.
    """
    if not p.is_unimodal_regime:
        raise MonotoneRegime(f"f has no interior critical points for a={p.a!r} <= 4")
    if transient < 0 or max_period < 1 or samples < 1:
        raise DomainError("transient must be non-negative, max_period and samples positive", "invalid-flags")
    crit = g_critical_data(p)
    a, ab = p.a, p.a * p.b
    m = ReplicatorMap(p)

    found: List[Attractor] = []
    # h reverses order: x_max sits at y_min and x_min at y_max
    for source, y in (("x_max", crit.y_min), ("x_min", crit.y_max)):
        for _ in range(transient):
            y = g_step(a, ab, y)
        period = None
        w = y
        for k in range(1, 2 * max_period + 1):
            w = g_step(a, ab, w)
            if abs(w - y) <= RECURRENCE_TOL * (1 + abs(y)):
                period = k
                break
        logger.debug("critical orbit from %s: recurrence %s after %d steps", source, period, transient)

        attractor = None
        if period is not None and period <= max_period:
            orbit = periodic_orbit_from(m, _polish_cycle(p, y, period), period)
            if orbit.stability is Stability.ATTRACTING:
                attractor = Attractor("periodic", (source,), orbit.points, orbit.lyapunov, orbit)
            elif orbit.stability is Stability.NEUTRAL:
                logger.warning("neutral period-%d orbit at a=%r b=%r", period, p.a, p.b)
                attractor = Attractor("neutral", (source,), orbit.points, orbit.lyapunov, orbit)
        if attractor is None:
            cloud = []
            for _ in range(samples):
                cloud.append(float(h_inv(y)))
                y = g_step(a, ab, y)
            terms = []
            for _ in range(lyapunov_steps):
                terms.append(_log_f_slope(a, ab, y))
                y = g_step(a, ab, y)
            attractor = Attractor("aperiodic", (source,), tuple(sorted(cloud)), math.fsum(terms) / lyapunov_steps)

        for i, existing in enumerate(found):
            if _same_orbit(existing, attractor):
                found[i] = Attractor(existing.kind, existing.sources + attractor.sources,
                                     existing.points, existing.lyapunov, existing.orbit)
                break
        else:
            found.append(attractor)
    return found


def bifurcation_scan(b: float, a_lo: float, a_hi: float, steps: int, samples: int = DEFAULT_SAMPLES,
                     transient: int = DEFAULT_TRANSIENT, max_period: int = DEFAULT_MAX_PERIOD) -> List[BifurcationSample]:
    """ one sample per (a, attractor), ordered by a then by attractor """
    if not 0 < b < 1:
        raise DomainError(f"b must lie in (0,1), got {b!r}", "invalid-b")
    if not 4 < a_lo < a_hi:
        raise DomainError(f"the scan needs 4 < a_lo < a_hi, got [{a_lo!r}, {a_hi!r}]", "invalid-range")
    if steps < 2:
        raise DomainError(f"a scan has at least 2 steps, got {steps}", "invalid-steps")
    grid = [float(a) for a in np.linspace(a_lo, a_hi, steps)]
    logger.info("scanning %d values of a in [%r, %r] at b=%r", steps, a_lo, a_hi, b)

    def sample(a: float) -> List[BifurcationSample]:
        attractors = attractors_from_critical_orbits(Params(a, b), transient, max_period, samples)
        return [BifurcationSample(a, branch, attractor.points[:samples], attractor.detected_period, attractor.lyapunov)
                for branch, attractor in enumerate(attractors)]

    rows = map_in_threads_wrapper(sample, grid, desc=f"Scanning a at b={b!r}")
    return [s for group in rows for s in group]
