"""
Numerical certification of the two-interval horseshoe of g_{a,b}.

For b < 1/2 and large a the conjugate map g has

    g_min < y_max,   g_max > y_min,   g(g_max) > y_min

and the landmark points y1-, y1+ in (y_max, y_min) and y2-, y2+ in
(y_min, inf) defined by

    g(y2+) = y_min,  g(y1-) = y2+,  g(y1+) = g(y2-) = y_max

give intervals J1 = [y1-, y1+] and J2 = [y2-, y2+] with g(J1) covering
J1 and J2, g(J2) covering J1 and missing J2. The points whose whole orbit
stays in J1 u J2 form the invariant set K, coded by the golden-mean shift
(binary sequences without "11"). For b > 1/2 everything is reflected through
y = 0.

All computations run in the y-coordinate. Every root is bracketed on a
monotone branch and solved with Brent's method.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, newton

from .conjugacy import ConjugateMap, GCriticalData, Mirrored, ReplicatorChart
from .errors import (CertificateRequired, ConvergenceFailure, DomainError, EscapedSet,
                     MonotoneRegime, NotFound, PreconditionFailed, SizeError)
from .map_core import Params
from .parallel import map_in_threads_wrapper
from .type.records import CertificateRecord

__all__ = [
    "MARGIN_THRESHOLD",
    "MAX_WORD_LENGTH",
    "MAX_DEPTH",
    "ItineraryWord",
    "CylinderInterval",
    "Landmarks",
    "HorseshoeCertificate",
    "landmark_points",
    "certify",
    "min_certified_a",
    "count_admissible_words",
    "enumerate_admissible_words",
    "topological_entropy_estimate",
    "cylinder_intervals",
    "point_from_itinerary",
    "code_orbit",
    "periodic_points",
    "two_step_expansion",
    "certificate_to_json",
    "certificate_from_json",
]

logger = logging.getLogger(__name__)

MARGIN_THRESHOLD = 1e-9
MAX_WORD_LENGTH = 30
MAX_DEPTH = 40
MAX_SEARCH_A = 1e6

_XTOL = 1e-15
_RTOL = 4 * np.finfo(float).eps


def _root_tolerance(target: float) -> float:
    return 1e-11 * (1 + abs(target))


@dataclass(frozen=True)
class ItineraryWord:
    symbols: Tuple[int, ...]
    cyclic: bool = False

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        if not symbols:
            raise DomainError("an itinerary word has at least one symbol", "empty-word")
        if any(s not in (0, 1) for s in symbols):
            raise DomainError(f"itinerary symbols are 0 or 1, got {self.symbols!r}", "invalid-symbol")
        if not self.is_admissible(symbols, self.cyclic):
            raise DomainError(f"word {''.join(map(str, symbols))} contains the factor 11"
                              + (" (cyclically)" if self.cyclic else ""), "inadmissible-word")
        object.__setattr__(self, "symbols", symbols)

    @staticmethod
    def is_admissible(symbols: Sequence[int], cyclic: bool) -> bool:
        if any(x == 1 and y == 1 for x, y in zip(symbols, symbols[1:])):
            return False
        return not (cyclic and symbols[0] == 1 and symbols[-1] == 1)

    @classmethod
    def parse(cls, text: str, cyclic: bool = False) -> "ItineraryWord":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise DomainError(f"itinerary words are written over 0/1, got {text!r}", "invalid-symbol")
        return cls(tuple(int(c) for c in text), cyclic)

    def __str__(self):
        return "".join(map(str, self.symbols))

    def __len__(self):
        return len(self.symbols)

    def repeated(self, times: int) -> "ItineraryWord":
        return ItineraryWord(self.symbols * times, cyclic=False)

    def rotations(self) -> List["ItineraryWord"]:
        n = len(self.symbols)
        return [ItineraryWord(self.symbols[k:] + self.symbols[:k], self.cyclic) for k in range(n)]


def _as_word(word: "ItineraryWord | str", cyclic: bool) -> ItineraryWord:
    if isinstance(word, ItineraryWord):
        return word if word.cyclic == cyclic else ItineraryWord(word.symbols, cyclic)
    return ItineraryWord.parse(word, cyclic)


@dataclass(frozen=True)
class CylinderInterval:
    word: ItineraryWord
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


class Landmarks(NamedTuple):
    y2_plus: float
    y1_minus: float
    y1_plus: float
    y2_minus: float


@dataclass(frozen=True)
class HorseshoeCertificate:
    """
    Outcome of the covering and expansion checks. Landmark points and
    critical data are reported in the coordinates of the map itself; for the
    reflected orientation the landmark points are the reflections of the
    landmark points of the reflected map, which reverses their order to
    y2_plus < y2_minus < y_max < y1_plus < y1_minus < y_min. A failed check
    names itself in ``failure``.
    """
    params: Params | None
    label: str
    orientation: str
    y_max: float
    y_min: float
    g_min: float
    g_max: float
    y1_minus: float
    y1_plus: float
    y2_minus: float
    y2_plus: float
    margin1: float
    margin2: float
    margin3: float
    covering_margin: float
    expansion: float
    threshold: float
    valid: bool
    failure: str | None
    chart: ConjugateMap = field(compare=False, repr=False, default=None)

    @property
    def a(self) -> float:
        return self.chart.a if self.params is None else self.params.a

    @property
    def b(self) -> float:
        return self.chart.b if self.params is None else self.params.b

    @property
    def j1(self) -> Tuple[float, float]:
        return (min(self.y1_minus, self.y1_plus), max(self.y1_minus, self.y1_plus))

    @property
    def j2(self) -> Tuple[float, float]:
        return (min(self.y2_minus, self.y2_plus), max(self.y2_minus, self.y2_plus))

    def failing_margin(self) -> float | None:
        if self.failure and self.failure.startswith("horseshoe-inequality-"):
            return (self.margin1, self.margin2, self.margin3)[int(self.failure.split("-")[2]) - 1]
        if self.failure == "covering-failed":
            return self.covering_margin
        if self.failure == "expansion-failed":
            return self.expansion
        return None


def _as_chart(target) -> ConjugateMap:
    if isinstance(target, HorseshoeCertificate):
        return target.chart
    if isinstance(target, Params):
        return ReplicatorChart(target)
    if isinstance(target, ConjugateMap):
        return target
    raise DomainError(f"expected Params, a conjugate map or a certificate, got {type(target).__name__}", "invalid-target")


def _oriented(chart: ConjugateMap) -> Tuple[ConjugateMap, GCriticalData, bool]:
    """ reflect when the overshoot below y_max exceeds the one above y_min (b > 1/2) """
    crit = chart.critical_data()
    if crit.g_max - crit.y_min >= crit.y_max - crit.g_min:
        return chart, crit, False
    mirrored = Mirrored(chart)
    return mirrored, mirrored.critical_data(), True


def _inequality_margins(chart: ConjugateMap, crit: GCriticalData) -> Tuple[float, float, float]:
    return (
        crit.y_max - crit.g_min,
        crit.g_max - crit.y_min,
        float(chart.value(crit.g_max)) - crit.y_min,
    )


def _solve_in(chart: ConjugateMap, target: float, lo: float, hi: float) -> float:
    """ the point of the monotone branch [lo, hi] where chart.value equals target """
    f_lo = float(chart.value(lo)) - target
    f_hi = float(chart.value(hi)) - target
    tol = _root_tolerance(target)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        # endpoints that coincide with the target by construction
        if min(abs(f_lo), abs(f_hi)) <= tol:
            return lo if abs(f_lo) <= abs(f_hi) else hi
        raise ConvergenceFailure(f"no sign change of g - {target!r} on [{lo!r}, {hi!r}]", "bracket-failed")
    root = brentq(lambda y: float(chart.value(y)) - target, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=200)
    if abs(float(chart.value(root)) - target) > tol * max(1.0, abs(float(chart.slope(root)))):
        raise ConvergenceFailure(f"root of g - {target!r} near {root!r} did not reach tolerance")
    return root


def _bracket_right(chart: ConjugateMap, target: float, start: float) -> float:
    """ first point right of ``start`` where the increasing branch exceeds target """
    step = 1.0
    while float(chart.value(start + step)) <= target:
        step *= 2
        if step > 1e12:
            raise ConvergenceFailure(f"could not bracket g = {target!r} right of {start!r}", "bracket-failed")
    return start + step


def _landmarks(chart: ConjugateMap, crit: GCriticalData) -> Landmarks:
    y2_plus = _solve_in(chart, crit.y_min, crit.y_min, _bracket_right(chart, crit.y_min, crit.y_min))
    y1_minus = _solve_in(chart, y2_plus, crit.y_max, crit.y_min)
    y1_plus = _solve_in(chart, crit.y_max, crit.y_max, crit.y_min)
    y2_minus = _solve_in(chart, crit.y_max, crit.y_min, _bracket_right(chart, crit.y_max, crit.y_min))
    logger.debug("landmarks y1-=%r y1+=%r y2-=%r y2+=%r", y1_minus, y1_plus, y2_minus, y2_plus)
    return Landmarks(y2_plus, y1_minus, y1_plus, y2_minus)


def _reflect(points: Landmarks) -> Landmarks:
    return Landmarks(*(-y for y in points))


def landmark_points(target) -> Landmarks:
    chart = _as_chart(target)
    oriented, crit, mirrored = _oriented(chart)
    for k, margin in enumerate(_inequality_margins(oriented, crit), start=1):
        if not margin > 0:
            raise PreconditionFailed(f"inequality {k} of the horseshoe conditions fails",
                                     f"horseshoe-inequality-{k}-failed", margin)
    points = _landmarks(oriented, crit)
    return _reflect(points) if mirrored else points


def _covering_gaps(chart: ConjugateMap, crit: GCriticalData, points: Landmarks) -> Tuple[float, float]:
    """
    (margin, constructed residual): the smallest gap of the covering and
    disjointness relations, and the largest defect at the endpoints that
    coincide by construction.
    """
    y2p, y1m, y1p, y2m = points
    image_j1 = sorted((float(chart.value(y1m)), float(chart.value(y1p))))
    image_j2 = sorted((float(chart.value(y2m)), float(chart.value(y2p))))
    gaps = (
        y1m - crit.y_max,
        crit.y_min - y1p,
        y2m - crit.y_min,
        y1p - y1m,
        y2p - y2m,
        y1m - image_j1[0],      # g(J1) reaches below J1
        y1m - image_j2[0],      # g(J2) reaches below J1
        image_j2[1] - y1p,      # g(J2) reaches above J1
        y2m - image_j2[1],      # g(J2) misses J2
    )
    constructed = max(
        y2p - image_j1[1],      # g(J1) reaches the top of J2
        0.0,
    ) / (1 + abs(y2p))
    return min(gaps), constructed


def _invalid(chart: ConjugateMap, threshold: float, failure: str, orientation: str = "standard",
             crit: GCriticalData | None = None, margins=(math.nan,) * 3) -> HorseshoeCertificate:
    nan = math.nan
    return HorseshoeCertificate(
        params=getattr(chart, "params", None), label=chart.label, orientation=orientation,
        y_max=crit.y_max if crit else nan, y_min=crit.y_min if crit else nan,
        g_min=crit.g_min if crit else nan, g_max=crit.g_max if crit else nan,
        y1_minus=nan, y1_plus=nan, y2_minus=nan, y2_plus=nan,
        margin1=margins[0], margin2=margins[1], margin3=margins[2],
        covering_margin=nan, expansion=nan, threshold=threshold,
        valid=False, failure=failure, chart=chart,
    )


def certify(target, threshold: float = MARGIN_THRESHOLD) -> HorseshoeCertificate:
    chart = _as_chart(target)
    try:
        oriented, crit_o, mirrored = _oriented(chart)
    except MonotoneRegime:
        return _invalid(chart, threshold, "monotone-regime")
    orientation = "mirrored" if mirrored else "standard"
    crit = chart.critical_data()
    margins = _inequality_margins(oriented, crit_o)

    for k, margin in enumerate(margins, start=1):
        if not margin > threshold:
            return _invalid(chart, threshold, f"horseshoe-inequality-{k}-failed", orientation, crit, margins)
    params = getattr(chart, "params", None)
    if params is not None and params.b == 0.5:
        return _invalid(chart, threshold, "symmetric-b", orientation, crit, margins)

    try:
        points = _landmarks(oriented, crit_o)
    except ConvergenceFailure:
        logger.warning("landmark points of %r did not converge despite positive margins", chart)
        return _invalid(chart, threshold, "landmark-convergence", orientation, crit, margins)

    covering_margin, constructed = _covering_gaps(oriented, crit_o, points)
    y2p, y1m, y1p, y2m = points
    expansion = (min(abs(float(oriented.slope(y1m))), abs(float(oriented.slope(y1p))))
                 * min(abs(float(oriented.slope(y2m))), abs(float(oriented.slope(y2p)))))

    failure = None
    if not covering_margin >= threshold or constructed > _root_tolerance(0.0):
        failure = "covering-failed"
    elif not expansion > 1 + threshold:
        failure = "expansion-failed"

    actual = _reflect(points) if mirrored else points
    certificate = HorseshoeCertificate(
        params=params, label=chart.label, orientation=orientation,
        y_max=crit.y_max, y_min=crit.y_min, g_min=crit.g_min, g_max=crit.g_max,
        y1_minus=actual.y1_minus, y1_plus=actual.y1_plus,
        y2_minus=actual.y2_minus, y2_plus=actual.y2_plus,
        margin1=margins[0], margin2=margins[1], margin3=margins[2],
        covering_margin=covering_margin, expansion=expansion, threshold=threshold,
        valid=failure is None, failure=failure, chart=chart,
    )
    logger.debug("certificate for %r: valid=%s failure=%s", chart, certificate.valid, failure)
    return certificate


def _certified(target) -> HorseshoeCertificate:
    certificate = target if isinstance(target, HorseshoeCertificate) else certify(target)
    if not certificate.valid:
        raise CertificateRequired(f"no horseshoe certificate for {certificate.chart!r}",
                                  certificate.failure, certificate.failing_margin())
    return certificate


def min_certified_a(b: float, tol: float, threshold: float = MARGIN_THRESHOLD, cache=None) -> float:
    """
    Smallest certified a on a tol-grid, by doubling from a = 8 and bisecting.

    Certifiability is checked pointwise and is not proven monotone in a; the
    bisection assumes it and a warning is logged when the point just below
    the answer certifies as well.
    """
    if not 0 < b < 1:
        raise DomainError(f"b must lie in (0,1), got {b!r}", "invalid-b")
    if b == 0.5:
        raise DomainError("b = 1/2 has no horseshoe", "symmetric-b")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol!r}", "invalid-tol")

    def valid(a: float) -> bool:
        params = Params(a, b)
        certificate = cache.lookup(params, threshold) if cache is not None else None
        if certificate is None:
            certificate = certify(params, threshold)
            if cache is not None:
                cache.store(certificate)
        return certificate.valid

    a_lo, a_hi = 4.0, 8.0
    while not valid(a_hi):
        a_lo = a_hi
        if a_hi >= MAX_SEARCH_A:
            raise NotFound(f"no certified a <= {MAX_SEARCH_A:g} for b={b!r}")
        a_hi = min(2 * a_hi, MAX_SEARCH_A)
    logger.info("b=%r: certified at a=%r, bisecting down from there", b, a_hi)

    while a_hi - a_lo > tol:
        mid = 0.5 * (a_lo + a_hi)
        if valid(mid):
            a_hi = mid
        else:
            a_lo = mid
    if valid(a_hi - tol):
        logger.warning("certifiability is not monotone near a=%r for b=%r", a_hi, b)
    return a_hi


@lru_cache(maxsize=None)
def count_admissible_words(n: int, cyclic: bool) -> int:
    """ Fibonacci F(n+2) for linear words, Lucas L(n) for cyclic ones """
    if n < 1:
        raise SizeError(f"word length must be positive, got {n}")
    if cyclic:
        if n <= 3:
            return (1, 3, 4)[n - 1]
        # 0w with w linear of length n-1, or 10w0 with w linear of length n-3
        return count_admissible_words(n - 1, False) + count_admissible_words(n - 3, False)
    if n <= 2:
        return n + 1
    return count_admissible_words(n - 1, False) + count_admissible_words(n - 2, False)


def enumerate_admissible_words(n: int, cyclic: bool) -> List[ItineraryWord]:
    if not 1 <= n <= MAX_WORD_LENGTH:
        raise SizeError(f"word length must be within 1..{MAX_WORD_LENGTH}, got {n}")
    words: List[Tuple[int, ...]] = [()]
    for _ in range(n):
        # extending with 0 before 1 keeps the list lexicographically sorted
        words = [w + (s,) for w in words for s in (0, 1) if not (s == 1 and w and w[-1] == 1)]
    return [ItineraryWord(w, cyclic) for w in words if ItineraryWord.is_admissible(w, cyclic)]


def topological_entropy_estimate(n: int) -> float:
    return math.log(count_admissible_words(n, True)) / n


def _base_intervals(certificate: HorseshoeCertificate) -> Dict[int, Tuple[float, float]]:
    return {0: certificate.j1, 1: certificate.j2}


def _pull_back(chart: ConjugateMap, base: Tuple[float, float], interval: Tuple[float, float]) -> Tuple[float, float]:
    """ the part of ``base`` (a monotone branch) mapped onto ``interval`` """
    ends = (_solve_in(chart, interval[0], *base), _solve_in(chart, interval[1], *base))
    return (min(ends), max(ends))


def _cylinder_of(certificate: HorseshoeCertificate, symbols: Sequence[int]) -> Tuple[float, float]:
    bases = _base_intervals(certificate)
    interval = bases[symbols[-1]]
    for s in reversed(symbols[:-1]):
        interval = _pull_back(certificate.chart, bases[s], interval)
    return interval


def cylinder_intervals(target, depth: int) -> List[CylinderInterval]:
    if not 1 <= depth <= MAX_DEPTH:
        raise SizeError(f"cylinder depth must be within 1..{MAX_DEPTH}, got {depth}")
    certificate = _certified(target)
    chart = certificate.chart
    bases = _base_intervals(certificate)

    def refine(entry: Tuple[Tuple[int, ...], Tuple[float, float]]):
        word, interval = entry
        return [((s,) + word, _pull_back(chart, bases[s], interval))
                for s in (0, 1) if not (s == 1 and word[0] == 1)]

    level = [((s,), bases[s]) for s in (0, 1)]
    for d in range(2, depth + 1):
        children = map_in_threads_wrapper(refine, level, desc=f"Refining cylinders to depth {d}")
        level = [child for group in children for child in group]
    level.sort(key=lambda entry: entry[0])
    return [CylinderInterval(ItineraryWord(word), lo, hi) for word, (lo, hi) in level]


def _orbit_residual(chart: ConjugateMap, n: int):
    def residual(y: float) -> float:
        z = y
        for _ in range(n):
            z = float(chart.value(z))
        return z - y

    def slope(y: float) -> float:
        z, product = y, 1.0
        for _ in range(n):
            product *= float(chart.slope(z))
            z = float(chart.value(z))
        return product - 1.0

    return residual, slope


def _solve_periodic(chart: ConjugateMap, n: int, lo: float, hi: float) -> float | None:
    residual, slope = _orbit_residual(chart, n)
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0:
        return lo
    if r_hi == 0:
        return hi
    if r_lo * r_hi > 0:
        return None
    root = brentq(residual, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=200)
    try:
        polished = newton(residual, root, fprime=slope, tol=1e-15, maxiter=20)
        if lo <= polished <= hi and abs(residual(polished)) < abs(residual(root)):
            root = polished
    except (RuntimeError, OverflowError, ZeroDivisionError):
        pass
    return root


def _contains(interval: Tuple[float, float], y: float) -> bool:
    slack = 1e-12 * (1 + abs(y))
    return interval[0] - slack <= y <= interval[1] + slack


def code_orbit(target, y: float, n: int) -> ItineraryWord:
    if n < 1:
        raise DomainError(f"itinerary length must be positive, got {n}", "invalid-n")
    certificate = _certified(target)
    bases = _base_intervals(certificate)
    symbols = []
    z = float(y)
    for k in range(n):
        if _contains(bases[0], z):
            symbols.append(0)
        elif _contains(bases[1], z):
            symbols.append(1)
        else:
            raise EscapedSet(f"iterate {k} of y={y!r} lies outside J1 u J2")
        z = float(certificate.chart.value(z))
    return ItineraryWord(tuple(symbols))


def point_from_itinerary(target, word: "ItineraryWord | str") -> float:
    certificate = _certified(target)
    word = _as_word(word, cyclic=True)
    n = len(word)
    lo, hi = _cylinder_of(certificate, word.repeated(2).symbols)
    y = _solve_periodic(certificate.chart, n, lo, hi)
    if y is None:
        raise ConvergenceFailure(f"g^{n}(y) - y keeps its sign on the cylinder of {word}")
    residual, slope = _orbit_residual(certificate.chart, n)
    # rounding in g^n grows with |(g^n)'|, which is at least expansion^(n/2) on K
    if abs(residual(y)) > 1e-10 * (1 + abs(y)) * max(1.0, abs(slope(y) + 1.0)):
        raise ConvergenceFailure(f"periodic point for {word} has residual {residual(y)!r}")
    coded = code_orbit(certificate, y, n)
    if coded.symbols != word.symbols:
        raise ConvergenceFailure(f"point for {word} codes as {coded}")
    return y


def periodic_points(target, n: int) -> List[Tuple[ItineraryWord, float]]:
    """
    Solutions of g^n(y) = y in K, one per depth-n cylinder on which
    g^n(y) - y changes sign.
    """
    certificate = _certified(target)
    points = []
    for cylinder in cylinder_intervals(certificate, n):
        y = _solve_periodic(certificate.chart, n, cylinder.lo, cylinder.hi)
        if y is not None:
            points.append((cylinder.word, y))
    return points


def two_step_expansion(target, depth: int) -> float:
    """ min of |g'(y) g'(g(y))| over the endpoints of the depth-``depth`` cylinders """
    if depth < 2:
        raise SizeError("two-step expansion is measured on cylinders of depth >= 2")
    certificate = _certified(target)
    chart = certificate.chart
    ends = np.array([y for c in cylinder_intervals(certificate, depth) for y in (c.lo, c.hi)])
    return float(np.min(np.abs(chart.slope(ends) * chart.slope(chart.value(ends)))))


CERTIFICATE_FIELDS = (
    "a", "b", "label", "orientation", "y_max", "y_min", "g_min", "g_max",
    "y1_minus", "y1_plus", "y2_minus", "y2_plus", "margin1", "margin2", "margin3",
    "covering_margin", "expansion", "threshold", "valid", "failure",
)


def certificate_to_json(certificate: HorseshoeCertificate) -> CertificateRecord:
    """ floats become shortest round-trip decimal strings """
    record = {}
    for name in CERTIFICATE_FIELDS:
        value = getattr(certificate, name)
        record[name] = repr(float(value)) if isinstance(value, float) else value
    return record


def certificate_from_json(record: CertificateRecord) -> HorseshoeCertificate:
    if record.get("label") != "replicator":
        raise DomainError("only replicator certificates can be restored", "invalid-record")
    params = Params(float(record["a"]), float(record["b"]))
    values = {name: float(record[name]) for name in CERTIFICATE_FIELDS
              if name not in ("a", "b", "label", "orientation", "valid", "failure")}
    return HorseshoeCertificate(
        params=params, label="replicator", orientation=record["orientation"],
        valid=bool(record["valid"]), failure=record["failure"],
        chart=ReplicatorChart(params), **values,
    )
