# tests/unit/test_map_core.py

import math

import mpmath
import numpy as np
import pytest

from replicator_horseshoe.errors import CriticalPointSingularity, DomainError, MonotoneRegime
from replicator_horseshoe.map_core import (Params, Stability, absorbing_interval, classify, critical_points,
                                           eval_f, eval_f_prime, fixed_points, iterate, iterate_sum_formula,
                                           schwarzian, symmetric_params)


def mp_f(a, b, x):
    x = mpmath.mpf(x)
    return x / (x + (1 - x) * mpmath.exp(a * (x - b)))


@pytest.fixture
def random_params():
    rng = np.random.default_rng(20240611)
    return [Params(a, b) for a, b in zip(rng.uniform(0.1, 200, 1000), rng.uniform(0.01, 0.99, 1000))]


@pytest.mark.parametrize("a, b", [(0, 0.5), (-1, 0.5), (math.inf, 0.5), (5, 0), (5, 1), (5, math.nan)])
def test_params_rejects_invalid(a, b):
    with pytest.raises(DomainError):
        Params(a, b)


def test_endpoints_are_exact_fixed_points():
    p = Params(200, 0.3)
    assert eval_f(p, 0.0) == 0.0
    assert eval_f(p, 1.0) == 1.0


def test_eval_f_against_high_precision():
    xs = np.linspace(0.0005, 0.9995, 200)
    for a, b in [(0.5, 0.2), (8, 0.5), (30, 1 / 3), (200, 0.75)]:
        p = Params(a, b)
        values = eval_f(p, xs)
        expected = np.array([float(mp_f(a, b, x)) for x in xs])
        assert np.max(np.abs(values - expected)) <= 1e-12


def test_eval_f_does_not_overflow_for_large_a():
    p = Params(5000, 0.01)
    values = eval_f(p, np.linspace(0, 1, 101))
    assert np.all(np.isfinite(values))
    assert np.all((values >= 0) & (values <= 1))


def test_slopes_and_fixed_points_for_huge_a():
    p = Params(1500, 0.5)
    assert math.isfinite(eval_f_prime(p, 0.3))
    slopes = eval_f_prime(p, np.array([0.0, 0.3, 1.0]))
    assert slopes[0] == math.inf and slopes[2] == math.inf
    assert np.isfinite(slopes[1])
    reports = fixed_points(p)
    assert [r.classification for r in reports] == [Stability.REPELLING, Stability.REPELLING, Stability.REPELLING]
    assert reports[0].multiplier == math.inf
    assert reports[1].multiplier == 1 - 1500 * 0.25


def test_eval_f_rejects_points_outside_unit_interval():
    with pytest.raises(DomainError):
        eval_f(Params(5, 0.5), 1.5)
    with pytest.raises(DomainError):
        eval_f(Params(5, 0.5), np.array([0.2, -0.1]))


def test_fixed_point_multipliers_match_closed_forms(random_params):
    for p in random_params:
        at_zero, at_b, at_one = (r.multiplier for r in fixed_points(p))
        assert eval_f_prime(p, 0.0) == pytest.approx(at_zero, rel=1e-12)
        assert eval_f_prime(p, 1.0) == pytest.approx(at_one, rel=1e-12)
        assert abs(eval_f_prime(p, p.b) - at_b) <= 1e-12 * (1 + p.a)
        assert at_b == pytest.approx(1 - p.a * p.b * (1 - p.b), abs=1e-12)


def test_fixed_point_classification():
    zero, interior, one = fixed_points(Params(7, 0.5))
    assert zero.classification is Stability.REPELLING
    assert one.classification is Stability.REPELLING
    assert interior.classification is Stability.ATTRACTING
    assert fixed_points(Params(9, 0.5))[1].classification is Stability.REPELLING
    neutral = fixed_points(Params(8, 0.5))[1]
    assert neutral.multiplier == -1.0
    assert neutral.classification is Stability.NEUTRAL


def test_classify_band():
    assert classify(1 - 1e-10) is Stability.NEUTRAL
    assert classify(-1 - 1e-10) is Stability.NEUTRAL
    assert classify(0.999) is Stability.ATTRACTING
    assert classify(-1.001) is Stability.REPELLING


def test_eval_f_prime_against_finite_differences():
    p = Params(12, 0.4)
    xs = np.linspace(0.05, 0.95, 37)
    step = 1e-6
    numeric = (eval_f(p, xs + step) - eval_f(p, xs - step)) / (2 * step)
    assert np.allclose(eval_f_prime(p, xs), numeric, rtol=1e-6, atol=1e-7)


def test_critical_points_closed_form():
    p = Params(30, 1 / 3)
    crit = critical_points(p)
    assert crit.x_max < 0.5 < crit.x_min
    assert crit.x_max + crit.x_min == pytest.approx(1, abs=1e-14)
    assert crit.x_max * crit.x_min == pytest.approx(1 / 30, rel=1e-14)
    assert abs(eval_f_prime(p, crit.x_max)) <= 1e-10
    assert abs(eval_f_prime(p, crit.x_min)) <= 1e-10
    assert crit.f_max > crit.f_min
    assert absorbing_interval(p) == (crit.f_min, crit.f_max)


def test_critical_points_need_unimodal_regime():
    with pytest.raises(MonotoneRegime):
        critical_points(Params(4, 0.3))
    lo, hi = absorbing_interval(Params(3, 0.3))
    assert 0 < lo < hi < 1


def test_iterate_returns_orbit_segment():
    p = Params(7, 0.5)
    orbit = iterate(p, 0.3, 5)
    assert len(orbit) == 6
    assert orbit[0] == 0.3
    assert orbit[1] == eval_f(p, 0.3)
    assert iterate(p, 0.3, 0) == [0.3]
    with pytest.raises(DomainError):
        iterate(p, 1.2, 3)


def test_iterate_sum_formula_matches_iteration():
    for a, b, x0 in [(7, 0.5, 0.3), (30, 1 / 3, 0.2), (19.06, 0.3961, 0.8)]:
        p = Params(a, b)
        for n in (1, 2, 10, 50):
            assert iterate_sum_formula(p, x0, n) == pytest.approx(iterate(p, x0, n)[-1], abs=1e-10)


def test_iterate_sum_formula_rejects_endpoints():
    with pytest.raises(DomainError):
        iterate_sum_formula(Params(7, 0.5), 0.0, 3)
    with pytest.raises(DomainError):
        iterate_sum_formula(Params(7, 0.5), 0.4, 0)


def test_symmetry_under_reflection():
    p = Params(6, 0.25)
    q = symmetric_params(p)
    assert q == Params(6, 0.75)
    xs = np.arange(1, 1024) / 1024
    assert np.max(np.abs(eval_f(q, 1 - xs) - (1 - eval_f(p, xs)))) <= 1e-14


def test_schwarzian_against_high_precision():
    a, b = 30, 1 / 3
    p = Params(a, b)
    for x in (0.05, 0.3, 0.6, 0.97):
        d1, d2, d3 = (mpmath.diff(lambda t: mp_f(a, b, t), mpmath.mpf(x), k) for k in (1, 2, 3))
        expected = float(d3 / d1 - mpmath.mpf(3) / 2 * (d2 / d1) ** 2)
        value = schwarzian(p, x)
        assert value < 0
        assert value == pytest.approx(expected, rel=1e-8)


def test_schwarzian_singular_at_critical_points():
    p = Params(30, 1 / 3)
    crit = critical_points(p)
    with pytest.raises(CriticalPointSingularity):
        schwarzian(p, crit.x_max)
    with pytest.raises(CriticalPointSingularity):
        schwarzian(p, crit.x_min + 1e-9)
    with pytest.raises(MonotoneRegime):
        schwarzian(Params(3, 0.5), 0.5)
