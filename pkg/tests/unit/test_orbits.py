# tests/unit/test_orbits.py

import logging
import math

import mpmath
import numpy as np
import pytest

from replicator_horseshoe.conjugacy import h
from replicator_horseshoe.errors import DomainError, MonotoneRegime, PreconditionFailed
from replicator_horseshoe.horseshoe import point_from_itinerary
from replicator_horseshoe.map_core import Params, Stability, eval_f, fixed_points
from replicator_horseshoe.orbits import (PeriodicOrbit, ReplicatorMap, attractors_from_critical_orbits, bifurcation_scan,
                                         find_periodic_orbits, lyapunov_exponent, period2_orbit,
                                         period_doubling_threshold, periodic_orbit_from)


def assert_closed(orbit, p, tol=1e-10):
    cycle = orbit.cycle
    for here, there in zip(cycle, cycle[1:] + cycle[:1]):
        assert abs(eval_f(p, here) - there) <= tol


def test_period_doubling_threshold():
    assert period_doubling_threshold(0.5) == 8
    assert period_doubling_threshold(1 / 3) == pytest.approx(9, rel=1e-15)
    assert period_doubling_threshold(0.01) > period_doubling_threshold(0.1)
    with pytest.raises(DomainError):
        period_doubling_threshold(1.0)


def test_threshold_multiplier_is_minus_one_for_random_b():
    rng = np.random.default_rng(7)
    for b in rng.uniform(0.01, 0.99, 200):
        interior = fixed_points(Params(period_doubling_threshold(b), b))[1]
        assert abs(interior.multiplier + 1) <= 1e-12
        assert interior.classification is Stability.NEUTRAL


def test_fixed_point_at_the_threshold_is_neutral():
    orbits = find_periodic_orbits(Params(8, 0.5), 1)
    assert len(orbits) == 1
    orbit = orbits[0]
    assert orbit.points[0] == pytest.approx(0.5, abs=1e-12)
    assert orbit.multiplier == pytest.approx(-1, abs=1e-9)
    assert orbit.stability is Stability.NEUTRAL


def test_symmetric_period_two_orbit():
    a = 16
    x1 = float(mpmath.findroot(lambda x: x / (1 - x) - mpmath.exp(a * (2 * x - 1) / 4), (0.01, 0.1),
                               solver="bisect"))
    orbits = find_periodic_orbits(Params(a, 0.5), 2)
    assert len(orbits) == 1
    orbit = orbits[0]
    assert orbit.points[0] == pytest.approx(x1, abs=1e-10)
    assert orbit.points[0] + orbit.points[1] == pytest.approx(1, abs=1e-12)
    assert orbit.multiplier >= 0
    assert orbit.stability is Stability.ATTRACTING
    assert_closed(orbit, Params(a, 0.5))


def test_period2_orbit_matches_search():
    orbit = period2_orbit(Params(16, 0.5))
    assert orbit.period == 2
    assert orbit.mean == pytest.approx(0.5, abs=1e-12)
    assert orbit.points == pytest.approx(find_periodic_orbits(Params(16, 0.5), 2)[0].points, abs=1e-10)


def test_period2_orbit_straddles_b():
    b = 1 / 3
    orbit = period2_orbit(Params(9.1, b))
    low, high = orbit.points
    assert 0 < low < b < high < 1
    assert abs(orbit.mean - b) <= 1e-8


def test_period2_orbit_below_threshold():
    with pytest.raises(PreconditionFailed) as excinfo:
        period2_orbit(Params(8.9, 1 / 3))
    assert excinfo.value.token == "below-period-doubling"
    assert excinfo.value.margin < 0


def test_period2_orbit_for_large_a_sits_near_2b():
    orbit = period2_orbit(Params(120, 0.25))
    assert abs(orbit.points[1] - 0.5) < 0.1 * 0.25


@pytest.mark.parametrize("a, count", [(8.5, 0), (8.95, 0), (9.05, 1), (9.5, 1), (10.5, 1)])
def test_period_two_orbits_appear_at_the_threshold(a, count):
    assert len(find_periodic_orbits(Params(a, 1 / 3), 2)) == count


@pytest.mark.parametrize("a, b", [(6, 0.3), (12, 0.45), (19.06, 0.3961), (30, 1 / 3), (45, 0.2), (25, 0.7)])
def test_orbits_have_mean_b(a, b):
    for n in range(1, 6):
        for orbit in find_periodic_orbits(Params(a, b), n):
            assert orbit.period == n
            assert len(orbit.points) == n
            assert list(orbit.points) == sorted(orbit.points)
            assert abs(orbit.mean - b) <= 1e-8
            assert_closed(orbit, Params(a, b))


@pytest.mark.slow
def test_orbits_have_mean_b_across_a_sweep():
    rng = np.random.default_rng(2024)
    pairs = list(zip(rng.uniform(4.5, 120, 200), rng.uniform(0.1, 0.9, 200)))
    for a, b in pairs:
        for n in range(1, 7):
            for orbit in find_periodic_orbits(Params(a, b), n):
                assert abs(orbit.mean - b) <= 1e-8


def test_horseshoe_orbits_are_repelling(certificate):
    expected = {1: 1, 2: 1, 3: 1, 4: 1, 5: 2}

    def inside(y):
        return any(lo - 1e-9 <= y <= hi + 1e-9 for lo, hi in (certificate.j1, certificate.j2))

    for n, count in expected.items():
        in_k = [o for o in find_periodic_orbits(certificate.params, n) if all(inside(h(x)) for x in o.points)]
        assert len(in_k) == count
        assert all(abs(o.multiplier) > 1 and o.stability is Stability.REPELLING for o in in_k)


def test_periodic_orbit_search_rejects_bad_arguments():
    with pytest.raises(DomainError):
        find_periodic_orbits(Params(30, 1 / 3), 0)
    with pytest.raises(DomainError):
        find_periodic_orbits(Params(30, 1 / 3), 3, grid=20)


def test_periodic_orbit_from_chart_point(certificate):
    y = point_from_itinerary(certificate, "10")
    orbit = periodic_orbit_from(ReplicatorMap(certificate.params), y, 2)
    assert orbit.period == 2
    assert orbit.lyapunov >= 0.5 * math.log(certificate.expansion) > 0
    assert abs(orbit.mean - 1 / 3) <= 1e-8


def test_lyapunov_at_attracting_fixed_point():
    assert lyapunov_exponent(Params(7, 0.5), 0.3) == pytest.approx(math.log(0.75), abs=1e-9)


def test_lyapunov_at_period_two_attractor():
    p = Params(8.5, 0.5)
    expected = math.log(abs(period2_orbit(p).multiplier)) / 2
    value = lyapunov_exponent(p, 0.3)
    assert value < 0
    assert value == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("x0, n, transient", [(0.0, 1000, 0), (0.5, 999, 0), (0.5, 1000, -1)])
def test_lyapunov_rejects_bad_arguments(x0, n, transient):
    with pytest.raises(DomainError):
        lyapunov_exponent(Params(7, 0.5), x0, n, transient)


def test_period_two_attractor_found_from_both_critical_points():
    attractors = attractors_from_critical_orbits(Params(8.5, 0.5))
    assert len(attractors) == 1
    attractor = attractors[0]
    assert attractor.kind == "periodic"
    assert attractor.period == 2
    assert set(attractor.sources) == {"x_max", "x_min"}
    assert attractor.lyapunov < 0
    assert attractor.points == pytest.approx(period2_orbit(Params(8.5, 0.5)).points, abs=1e-9)


def test_recurrence_beyond_max_period_is_reported_aperiodic():
    p = Params(8.5, 0.5)
    attractors = attractors_from_critical_orbits(p, max_period=1, samples=8)
    assert len(attractors) == 1
    attractor = attractors[0]
    assert attractor.kind == "aperiodic"
    assert attractor.detected_period == "aperiodic"
    assert set(attractor.sources) == {"x_max", "x_min"}
    assert len(attractor.points) == 8
    assert attractor.lyapunov == pytest.approx(math.log(abs(period2_orbit(p).multiplier)) / 2, abs=1e-6)


@pytest.mark.parametrize("a, period", [(7, 1), (7.9, 1), (16, 2)])
def test_critical_orbits_find_the_symmetric_attractor(a, period):
    p = Params(a, 0.5)
    attractors = attractors_from_critical_orbits(p)
    assert len(attractors) == 1
    attractor = attractors[0]
    assert attractor.kind == "periodic"
    assert attractor.period == period
    assert set(attractor.sources) == {"x_max", "x_min"}
    assert attractor.orbit.stability is Stability.ATTRACTING
    expected = (0.5,) if period == 1 else period2_orbit(p).points
    assert attractor.points == pytest.approx(expected, abs=1e-9)


def test_no_attracting_cycle_claimed_at_the_doubling_threshold():
    attractors = attractors_from_critical_orbits(Params(8, 0.5))
    assert attractors
    for attractor in attractors:
        assert attractor.kind != "periodic"
        assert max(abs(x - 0.5) for x in attractor.points) < 0.05


def test_neutral_cycle_gets_its_own_kind(mocker, caplog):
    neutral = PeriodicOrbit(1, (0.5,), -1.0, 0.5, Stability.NEUTRAL, (0.5,))
    mocker.patch("replicator_horseshoe.orbits.periodic_orbit_from", return_value=neutral)
    with caplog.at_level(logging.WARNING, logger="replicator_horseshoe.orbits"):
        attractors = attractors_from_critical_orbits(Params(7, 0.5))
    assert len(attractors) == 1
    assert attractors[0].kind == "neutral"
    assert attractors[0].detected_period == 1
    assert set(attractors[0].sources) == {"x_max", "x_min"}
    assert "neutral period-1 orbit" in caplog.text


def test_attractors_need_unimodal_regime():
    with pytest.raises(MonotoneRegime):
        attractors_from_critical_orbits(Params(4, 0.5))
    with pytest.raises(DomainError):
        attractors_from_critical_orbits(Params(8.5, 0.5), max_period=0)


@pytest.mark.slow
def test_two_coexisting_period_four_attractors():
    attractors = attractors_from_critical_orbits(Params(19.06, 0.3961), transient=100_000)
    assert len(attractors) == 2
    assert [a.period for a in attractors] == [4, 4]
    assert attractors[0].points != pytest.approx(attractors[1].points, abs=1e-6)
    for attractor in attractors:
        assert attractor.orbit.stability is Stability.ATTRACTING
        assert abs(attractor.orbit.mean - 0.3961) <= 1e-8


@pytest.mark.slow
def test_coexisting_attractors_of_periods_twenty_and_fifty_six():
    attractors = attractors_from_critical_orbits(Params(28.8695, 0.414652), transient=1_000_000, max_period=256)
    assert sorted(a.period for a in attractors) == [20, 56]


def test_scan_below_first_doubling_is_period_one():
    samples = bifurcation_scan(0.5, 6, 7.9, steps=5)
    assert len(samples) == 5
    for sample in samples:
        assert sample.branch == 0
        assert sample.detected_period == 1
        assert sample.attractor_points[0] == pytest.approx(0.5, abs=1e-9)


def test_scan_past_first_doubling_is_period_two():
    samples = bifurcation_scan(0.5, 8.1, 9, steps=4)
    assert [s.detected_period for s in samples] == [2, 2, 2, 2]
    assert all(0 < x < 1 for s in samples for x in s.attractor_points)


def test_scan_doubling_at_b_one_third():
    samples = bifurcation_scan(1 / 3, 8, 9.6, steps=9)
    assert [s.a for s in samples] == pytest.approx([8 + 0.2 * k for k in range(9)])
    for s in samples:
        if s.a <= 8.8 + 1e-9:
            assert s.detected_period == 1
        elif s.a >= 9.2 - 1e-9:
            assert s.detected_period == 2


@pytest.mark.parametrize("b, a_lo, a_hi, steps", [(0.5, 4, 6, 5), (0.5, 7, 6, 5), (0.5, 6, 7, 1), (1.5, 6, 7, 5)])
def test_scan_rejects_bad_arguments(b, a_lo, a_hi, steps):
    with pytest.raises(DomainError):
        bifurcation_scan(b, a_lo, a_hi, steps)
