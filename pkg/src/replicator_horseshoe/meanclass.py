"""
Maps with prescribed orbit means.

A strictly monotone potential H on an interval I induces

    f(x) = H^-1(H(x) + x - b),   equivalently   H(f(x)) - H(x) = x - b,

and summing the identity along an orbit telescopes: every periodic orbit of
f has mean b, and Birkhoff averages differ from b by (H(f^n x) - H(x)) / n.
The replicator map is the member with H = h/a.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Literal, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.differentiate import derivative
from scipy.optimize import brentq
from scipy.special import expit, logit, ndtr, ndtri

from .conjugacy import GCriticalData
from .errors import CertificateRequired, DomainError, DomainEscape, InvalidSpec, MonotoneRegime, NotClose, NotPeriodic
from .horseshoe import certify
from .map_core import UNIT_MARGIN, Params, absorbing_interval
from .orbits import PeriodicOrbit

__all__ = [
    "MeanMapSpec",
    "InducedMap",
    "MeanChart",
    "BirkhoffReport",
    "FAMILIES",
    "make_map_from_H",
    "replicator_spec",
    "ricker_spec",
    "arctan_spec",
    "probit_spec",
    "builtin_spec",
    "verify_cohomology",
    "orbit_mean_check",
    "birkhoff_average",
    "phi_invariance_residual",
    "perturbed_chaotic_member",
]

logger = logging.getLogger(__name__)

RealFunction = Callable[[ArrayLike], ArrayLike]

VALIDATION_GRID = 1000
ROUND_TRIP_TOL = 1e-9
PERIODIC_TOL = 1e-10
C1_SAMPLES = 10_000


def _domain_grid(domain: Tuple[float, float], n: int) -> np.ndarray:
    lo, hi = domain
    if math.isfinite(lo) and math.isfinite(hi):
        return np.linspace(lo, hi, n + 2)[1:-1]
    if math.isfinite(lo):
        return lo + np.geomspace(1e-6, 1e6, n)
    if math.isfinite(hi):
        return hi - np.geomspace(1e-6, 1e6, n)[::-1]
    return np.sinh(np.linspace(-10, 10, n))


def _anchor(domain: Tuple[float, float]) -> float:
    lo, hi = domain
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    if math.isfinite(lo):
        return lo + 1.0
    if math.isfinite(hi):
        return hi - 1.0
    return 0.0


@dataclass(frozen=True)
class MeanMapSpec:
    """
    A potential H on the open interval ``domain`` with offset b. ``H_inv`` and
    ``H_prime`` are optional; without them the inverse is found by monotone
    root-finding and the derivative by adaptive finite differences.
    ``search`` is an x-interval holding the interesting dynamics (an
    absorbing interval where one is known).
    """
    H: RealFunction
    b: float
    domain: Tuple[float, float]
    increasing: bool = False
    H_inv: RealFunction | None = None
    H_prime: RealFunction | None = None
    search: Tuple[float, float] | None = None
    name: str = "custom"
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise InvalidSpec(f"domain must be a non-empty interval, got {self.domain!r}")
        if self.validate:
            _validate(self)


def _validate(spec: MeanMapSpec):
    xs = _domain_grid(spec.domain, VALIDATION_GRID)
    values = np.asarray(spec.H(xs), dtype=float)
    steps = np.diff(values)
    if not np.all(np.isfinite(values)) or not (np.all(steps > 0) if spec.increasing else np.all(steps < 0)):
        raise InvalidSpec(f"H of {spec.name} is not strictly {'increasing' if spec.increasing else 'decreasing'} on its domain")
    m = InducedMap(spec)
    back = m.chart_inv(values)
    error = np.abs(back - xs) / np.maximum(1.0, np.abs(xs))
    if np.max(error) > ROUND_TRIP_TOL:
        raise InvalidSpec(f"H_inv(H(x)) misses x by {np.max(error):.3g} for {spec.name}")
    probe = _domain_grid(spec.search, 200) if spec.search else xs
    escaped = 0
    for x in probe:
        try:
            m.step(x)
        except DomainEscape:
            escaped += 1
    if escaped:
        logger.warning("the map induced by %s leaves its domain at %d of %d probe points", spec.name, escaped, len(probe))


class InducedMap:
    """ x -> H^-1(H(x) + x - b), with chart z = H(x) in which it reads G(z) = z + H^-1(z) - b """

    def __init__(self, spec: MeanMapSpec):
        self.spec = spec
        self.b = spec.b

    def __repr__(self):
        return f"InducedMap({self.spec.name}, b={self.b!r})"

    def _inside(self, x: np.ndarray) -> bool:
        lo, hi = self.spec.domain
        return bool(np.all((x > lo) & (x < hi)))

    def _inverse_scalar(self, w: float) -> float:
        spec = self.spec
        if not math.isfinite(w):
            raise DomainEscape(f"H^-1 of {w!r} is undefined for {spec.name}")
        anchor = _anchor(spec.domain)
        offset = float(spec.H(anchor)) - w
        if offset == 0:
            return anchor
        # H - w decreasing in x exactly when H is decreasing
        rightward = (offset > 0) != spec.increasing
        bound = spec.domain[1] if rightward else spec.domain[0]
        previous = anchor
        for k in range(1100):
            if math.isinf(bound):
                x = anchor + math.copysign(2.0 ** (k - 4), bound)
            else:
                x = bound + (anchor - bound) * 2.0 ** -(k + 1)
            if x == previous or not math.isfinite(x):
                break
            value = float(spec.H(x)) - w
            if value == 0:
                return x
            if (value > 0) != (offset > 0):
                lo, hi = sorted((previous, x))
                return brentq(lambda t: float(spec.H(t)) - w, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            previous = x
        raise DomainEscape(f"{w!r} lies outside the range of H for {spec.name}")

    def chart(self, x: ArrayLike):
        arr = np.asarray(x, dtype=float)
        if not self._inside(arr):
            raise DomainError(f"x must lie in the domain {self.spec.domain!r} of {self.spec.name}", "x-out-of-domain")
        out = np.asarray(self.spec.H(arr), dtype=float)
        return float(out) if np.ndim(x) == 0 else out

    def chart_inv(self, z: ArrayLike):
        arr = np.asarray(z, dtype=float)
        if self.spec.H_inv is not None:
            if not np.all(np.isfinite(arr)):
                raise DomainEscape(f"H^-1 of a non-finite value for {self.spec.name}")
            out = np.asarray(self.spec.H_inv(arr), dtype=float)
            if not self._inside(out):
                raise DomainEscape(f"H^-1 leaves the domain {self.spec.domain!r} of {self.spec.name}")
        else:
            out = np.vectorize(self._inverse_scalar, otypes=[float])(arr)
        return float(out) if np.ndim(z) == 0 else out

    def H_prime(self, x: ArrayLike):
        arr = np.asarray(x, dtype=float)
        if self.spec.H_prime is not None:
            out = np.asarray(self.spec.H_prime(arr), dtype=float)
        else:
            out = derivative(self.spec.H, arr, initial_step=1e-3).df
        return float(out) if np.ndim(x) == 0 else out

    def step(self, x: ArrayLike):
        arr = np.asarray(x, dtype=float)
        return self.chart_inv(self.chart(arr) + arr - self.b) if np.ndim(x) else \
            self.chart_inv(self.chart(float(x)) + float(x) - self.b)

    def slope(self, x: ArrayLike):
        """ f'(x) = (H'(x) + 1) / H'(f(x)) """
        return (self.H_prime(x) + 1) / self.H_prime(self.step(x))

    def chart_step(self, z: ArrayLike):
        return z + self.chart_inv(z) - self.b

    def chart_slope(self, z: ArrayLike):
        return 1 + 1 / self.H_prime(self.chart_inv(z))

    def search_interval(self) -> Tuple[float, float]:
        if self.spec.search is not None:
            return self.spec.search
        lo, hi = self.spec.domain
        if math.isfinite(lo) and math.isfinite(hi):
            margin = UNIT_MARGIN * (hi - lo)
            return (lo + margin, hi - margin)
        raise InvalidSpec(f"{self.spec.name} has an unbounded domain and no search interval")


def make_map_from_H(spec: MeanMapSpec) -> InducedMap:
    return InducedMap(spec)


class MeanChart:
    """
    The induced map seen through y = scale * H(x), where it reads
    G(y) = y + scale * (H^-1(y / scale) - b). For H = h/a and scale = a this is
    g_{a,b}; the horseshoe construction accepts it as a conjugate map.
    """

    def __init__(self, spec: MeanMapSpec, scale: float):
        if not scale > 0:
            raise DomainError(f"chart scale must be positive, got {scale!r}", "invalid-scale")
        self.spec = spec
        self.map = InducedMap(spec)
        self.a = float(scale)
        self.b = spec.b
        self.label = f"mean-{spec.name}"
        self._critical: GCriticalData | None = None

    def __repr__(self):
        return f"MeanChart({self.spec.name}, scale={self.a!r})"

    def value(self, y: ArrayLike):
        return y + self.a * (self.map.chart_inv(np.asarray(y, dtype=float) / self.a if np.ndim(y) else y / self.a) - self.b)

    def slope(self, y: ArrayLike):
        x = self.map.chart_inv(np.asarray(y, dtype=float) / self.a if np.ndim(y) else y / self.a)
        return 1 + 1 / self.map.H_prime(x)

    def to_x(self, y: ArrayLike):
        return self.map.chart_inv(np.asarray(y, dtype=float) / self.a if np.ndim(y) else y / self.a)

    def critical_data(self) -> GCriticalData:
        if self._critical is None:
            self._critical = self._locate_critical()
        return self._critical

    def _locate_critical(self) -> GCriticalData:
        xs = _domain_grid(self.spec.domain, 4096)
        gap = self.map.H_prime(xs) + 1
        roots = []
        for i in np.flatnonzero(gap[:-1] * gap[1:] < 0):
            roots.append(brentq(lambda x: float(self.map.H_prime(x)) + 1, xs[i], xs[i + 1], xtol=1e-15))
        if len(roots) != 2:
            raise MonotoneRegime(f"G has {len(roots)} turning points for {self.spec.name}, the horseshoe needs 2")
        y_max, y_min = sorted(self.a * float(self.spec.H(x)) for x in roots)
        if not float(self.slope(0.5 * (y_max + y_min))) < 0:
            raise MonotoneRegime(f"G is not increasing-decreasing-increasing for {self.spec.name}")
        return GCriticalData(
            y_max=y_max,
            y_min=y_min,
            g_min=float(self.value(y_min)),
            g_max=float(self.value(y_max)),
            y0=self.a * float(self.spec.H(self.b)),
        )


def _unimodal_search(H: RealFunction, H_inv: RealFunction, b: float,
                     turning: Tuple[float, float]) -> Tuple[float, float]:
    """ [f(x_c+), f(x_c-)] for a map rising, falling and rising again with turning points x_c- < x_c+ """
    f = lambda x: float(H_inv(H(x) + x - b))
    return (f(turning[1]), f(turning[0]))


def replicator_spec(a: float, b: float) -> MeanMapSpec:
    p = Params(a, b)
    return MeanMapSpec(
        H=lambda x: -logit(x) / p.a,
        H_inv=lambda w: expit(-p.a * np.asarray(w, dtype=float)),
        H_prime=lambda x: -1 / (p.a * np.asarray(x, dtype=float) * (1 - np.asarray(x, dtype=float))),
        b=p.b,
        domain=(0.0, 1.0),
        search=absorbing_interval(p),
        name="replicator",
    )


def ricker_spec(b: float) -> MeanMapSpec:
    """ H = -ln x on (0, inf): x -> A x e^-x with A = e^b """
    if not (math.isfinite(b) and b > 0):
        raise DomainError(f"the Ricker offset b must be positive, got {b!r}", "invalid-b")
    peak = math.exp(b - 1)
    # the hump x = 1 is a maximum; below A = e the dynamics stay monotone
    search = (peak * math.exp(b - peak), peak) if b > 1 else (0.5 * b, 1.0)
    return MeanMapSpec(
        H=lambda x: -np.log(x),
        H_inv=lambda w: np.exp(-np.asarray(w, dtype=float)),
        H_prime=lambda x: -1 / np.asarray(x, dtype=float),
        b=b,
        domain=(0.0, math.inf),
        search=search,
        name="ricker",
    )


def arctan_spec(a: float, b: float) -> MeanMapSpec:
    """ H = -tan(x)/a on (-pi/2, pi/2): x -> arctan(tan x - a(x - b)) """
    if not (math.isfinite(a) and a > 0):
        raise DomainError(f"a must be positive, got {a!r}", "invalid-a")
    if not abs(b) < math.pi / 2:
        raise DomainError(f"b must lie in (-pi/2, pi/2), got {b!r}", "invalid-b")
    H = lambda x: -np.tan(x) / a
    H_inv = lambda w: np.arctan(-a * np.asarray(w, dtype=float))
    search = None
    if a > 1:
        turn = math.acos(1 / math.sqrt(a))
        search = _unimodal_search(H, H_inv, b, (-turn, turn))
    return MeanMapSpec(
        H=H,
        H_inv=H_inv,
        H_prime=lambda x: -1 / (a * np.cos(x) ** 2),
        b=b,
        domain=(-math.pi / 2, math.pi / 2),
        search=search,
        name="arctan",
    )


def probit_spec(a: float, b: float) -> MeanMapSpec:
    """ H = -ndtri(x)/a on (0,1): x -> Phi(Phi^-1(x) - a(x - b)) """
    if not (math.isfinite(a) and a > 0):
        raise DomainError(f"a must be positive, got {a!r}", "invalid-a")
    if not 0 < b < 1:
        raise DomainError(f"b must lie in (0,1), got {b!r}", "invalid-b")
    H = lambda x: -ndtri(x) / a
    H_inv = lambda w: ndtr(-a * np.asarray(w, dtype=float))
    search = None
    if a > math.sqrt(2 * math.pi):
        # turning points where the normal density at Phi^-1(x) equals 1/a
        t = math.sqrt(2 * math.log(a / math.sqrt(2 * math.pi)))
        search = _unimodal_search(H, H_inv, b, (float(ndtr(-t)), float(ndtr(t))))
    return MeanMapSpec(
        H=H,
        H_inv=H_inv,
        H_prime=lambda x: -math.sqrt(2 * math.pi) * np.exp(0.5 * ndtri(x) ** 2) / a,
        b=b,
        domain=(0.0, 1.0),
        search=search,
        name="probit",
    )


FAMILIES = ("replicator", "ricker", "arctan", "probit")


def builtin_spec(family: Literal["replicator", "ricker", "arctan", "probit"], a: float, b: float) -> MeanMapSpec:
    if family == "replicator":
        return replicator_spec(a, b)
    if family == "ricker":
        return ricker_spec(b)
    if family == "arctan":
        return arctan_spec(a, b)
    if family == "probit":
        return probit_spec(a, b)
    raise DomainError(f"unknown family {family!r}, expected one of {', '.join(FAMILIES)}", "invalid-family")


def verify_cohomology(spec: MeanMapSpec, grid: int = 1000) -> float:
    """ max of |H(f(x)) - H(x) - (x - b)| over a mesh of the search interval """
    if grid < 2:
        raise DomainError(f"mesh needs at least 2 points, got {grid}", "invalid-grid")
    m = InducedMap(spec)
    lo, hi = m.search_interval()
    xs = np.linspace(lo, hi, grid)
    residual = np.asarray(spec.H(m.step(xs)), dtype=float) - np.asarray(spec.H(xs), dtype=float) - (xs - spec.b)
    return float(np.max(np.abs(residual)))


def _check_periodic(m: InducedMap, orbit: PeriodicOrbit):
    points = np.asarray(orbit.points, dtype=float)
    images = np.asarray(m.step(points), dtype=float)
    for x, fx in zip(points, images):
        if np.min(np.abs(points - fx)) > PERIODIC_TOL * (1 + abs(fx)):
            raise NotPeriodic(f"f({x!r}) = {fx!r} is not a point of the orbit")


def orbit_mean_check(spec: MeanMapSpec, orbit: PeriodicOrbit) -> float:
    m = InducedMap(spec)
    _check_periodic(m, orbit)
    return abs(math.fsum(orbit.points) / len(orbit.points) - spec.b)


@dataclass(frozen=True)
class BirkhoffReport:
    """ average = b + correction up to rounding, with |correction| <= bound """
    average: float
    b: float
    correction: float
    bound: float
    final: float

    @property
    def residual(self) -> float:
        return abs(self.average - self.b - self.correction)


def birkhoff_average(spec: MeanMapSpec, x0: float, n: int) -> BirkhoffReport:
    if n < 1:
        raise DomainError(f"at least one step is averaged, got {n}", "invalid-n")
    m = InducedMap(spec)
    start = m.chart(float(x0))
    x = float(x0)
    orbit = []
    for _ in range(n):
        orbit.append(x)
        x = float(m.step(x))
    end = m.chart(x)
    average = math.fsum(orbit) / n
    return BirkhoffReport(
        average=average,
        b=spec.b,
        correction=(end - start) / n,
        bound=(abs(end) + abs(start)) / n,
        final=x,
    )


def phi_invariance_residual(spec: MeanMapSpec, orbit: PeriodicOrbit,
                            phi: Literal["identity", "square", "H"] | RealFunction = "identity") -> float:
    """ |sum over the orbit of phi(f(x)) - phi(x)|, zero for any phi on a true orbit """
    if phi == "identity":
        phi = lambda x: x
    elif phi == "square":
        phi = lambda x: x * x
    elif phi == "H":
        phi = spec.H
    m = InducedMap(spec)
    _check_periodic(m, orbit)
    points = np.asarray(orbit.points, dtype=float)
    images = np.asarray(m.step(points), dtype=float)
    return abs(math.fsum(np.asarray(phi(images), dtype=float) - np.asarray(phi(points), dtype=float)))


def perturbed_chaotic_member(base: Params, H_tilde: RealFunction, delta: float,
                             H_tilde_prime: RealFunction | None = None,
                             H_tilde_inv: RealFunction | None = None) -> MeanMapSpec:
    """
    A potential C^1-close to h/a on the absorbing interval of a certified
    replicator map. The distance is the larger of the sampled sup-norms of
    the value and derivative differences.
    """
    certificate = certify(base)
    if not certificate.valid:
        raise CertificateRequired(f"{base!r} carries no horseshoe certificate",
                                  certificate.failure, certificate.failing_margin())
    lo, hi = absorbing_interval(base)
    xs = np.linspace(lo, hi, C1_SAMPLES)
    reference = replicator_spec(base.a, base.b)
    values = np.asarray(H_tilde(xs), dtype=float)
    if not np.all(np.diff(values) < 0):
        raise NotClose("the perturbed potential is not strictly decreasing on the absorbing interval", "not-monotone")
    slopes = np.asarray(H_tilde_prime(xs), dtype=float) if H_tilde_prime else derivative(H_tilde, xs, initial_step=1e-3).df
    distance = max(float(np.max(np.abs(values - reference.H(xs)))),
                   float(np.max(np.abs(slopes - reference.H_prime(xs)))))
    if distance > delta:
        raise NotClose(f"C1 distance {distance:.3g} to h/a exceeds {delta:.3g}")
    logger.info("perturbed potential within C1 distance %.3g of h/a", distance)
    return MeanMapSpec(
        H=H_tilde,
        H_inv=H_tilde_inv,
        H_prime=H_tilde_prime,
        b=base.b,
        domain=(0.0, 1.0),
        search=(lo, hi),
        name="perturbed-replicator",
    )
