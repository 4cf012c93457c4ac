import math
from dataclasses import replace

import numpy as np
import pytest

from tonguelab.cylmap import MapParams, PhaseState
from tonguelab.orbits import SingularJacobianError, solve_delta_y, solve_orbit_fixed_delta
from tonguelab.series import expand, predicted_width
from tonguelab.tongue import (InsufficientDataError, TongueSample, fit_exponent,
                              saddle_node_locus, sweep, width_at)
from tonguelab.trigpoly import TrigPoly

SIN = TrigPoly.sine()


def find_any_orbit(m, seeds, grid=32, max_iter=30):
    """First orbit reached from warm seeds, else from a coarse grid."""
    starts = list(seeds)
    starts += [(x, y) for x in np.linspace(0, 2 * math.pi, grid, endpoint=False)
               for y in (0.0, m.eps / 2, -m.eps / 2)]
    for x0, y0 in starts:
        try:
            orbit = solve_orbit_fixed_delta(PhaseState(float(x0), float(y0)), m,
                                            max_iter=max_iter)
        except SingularJacobianError:
            continue
        if orbit is not None:
            return orbit
    return None


def bisect_edge(m, eps, upward, tol):
    """Tongue edge by bisection on fixed-delta orbit existence.

    Fully independent of the drift-profile route: it never evaluates the
    implicit solve, only fixed-delta Newton searches, warm-started from
    the last orbit found as the drift creeps toward the edge.  After the
    bracket is validated with a full grid, each level reuses the inside
    orbit's points as Newton starts: branch continuation keeps them
    inside the shrinking basin all the way to the fold.
    """
    inside = 0.0
    orbit = find_any_orbit(replace(m, eps=eps, delta=0.0), [])
    assert orbit is not None, "no orbit at the tongue center"
    seeds = [(s.x, s.y) for s in orbit.states]
    # max{|f|} bounds the edge: S = 0 forces |delta| <= eps * max|f|
    hi, lo, _, _ = __import__("tonguelab.trigpoly", fromlist=["range_extrema"]).range_extrema(m.f)
    outside = (1.01 * max(abs(hi), abs(lo)) * eps + 1e-6) * (1 if upward else -1)
    assert find_any_orbit(replace(m, eps=eps, delta=outside), seeds) is None
    while abs(outside - inside) > tol:
        mid = 0.5 * (inside + outside)
        orbit = find_any_orbit(replace(m, eps=eps, delta=mid), seeds, grid=0)
        if orbit is not None:
            inside = mid
            seeds = [(s.x, s.y) for s in orbit.states]
        else:
            outside = mid
    return 0.5 * (inside + outside)


class TestWidthClosedForm:
    @pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.4])
    def test_one_step_width(self, eps):
        m = MapParams(0.0, 0.0, SIN, 0, 1)
        s = width_at(m, eps, 16)
        assert s.width == pytest.approx(2 * eps, rel=1e-10)
        assert s.delta_max == pytest.approx(eps, rel=1e-9)
        assert s.delta_min == pytest.approx(-eps, rel=1e-9)
        assert s.x_argmax == pytest.approx(3 * math.pi / 2, abs=1e-4)
        assert s.x_argmin == pytest.approx(math.pi / 2, abs=1e-4)

    def test_zero_eps(self):
        m = MapParams(0.0, 0.0, SIN, 1, 2)
        assert width_at(m, 0.0, 16).width == 0.0

    def test_reducible_rejected(self):
        with pytest.raises(ValueError):
            width_at(MapParams(0.0, 0.0, SIN, 2, 4), 0.1, 32)


class TestBisectionOracle:
    def test_q2_matches_range_method(self):
        m = MapParams(0.0, 0.0, SIN, 1, 2)
        sample = width_at(m, 0.1, 32)
        tol_edge = 1e-9
        upper = bisect_edge(m, 0.1, True, tol_edge)
        lower = bisect_edge(m, 0.1, False, tol_edge)
        assert sample.width == pytest.approx(upper - lower, abs=1e-8)

    @pytest.mark.parametrize("q,p,eps", [(2, 1, 0.1), (2, 1, 0.2), (3, 1, 0.1),
                                         (3, 1, 0.2), (4, 1, 0.1), (4, 1, 0.2)])
    def test_oracle_equivalence(self, q, p, eps):
        m = MapParams(0.0, 0.0, SIN, p, q)
        sample = width_at(m, eps, max(32, 8 * q))
        tol = 1e-7 * max(sample.width, 1e-6)
        upper = bisect_edge(m, eps, True, tol / 4)
        lower = bisect_edge(m, eps, False, tol / 4)
        assert abs(sample.width - (upper - lower)) < tol


class TestSweepAndFit:
    def test_empty_sweep(self):
        m = MapParams(0.0, 0.0, SIN, 1, 2)
        result = sweep(m, [])
        assert result.samples == () and result.failures == ()

    def test_unsorted_rejected(self):
        m = MapParams(0.0, 0.0, SIN, 1, 2)
        with pytest.raises(ValueError):
            sweep(m, [0.2, 0.1])

    def test_one_step_closed_form_sweep(self):
        m = MapParams(0.0, 0.0, SIN, 0, 1)
        eps_list = [0.05, 0.1, 0.2, 0.3, 0.4]
        result = sweep(m, eps_list, grid=16)
        assert not result.failures
        for s, eps in zip(result.samples, eps_list):
            assert s.width == pytest.approx(2 * eps, rel=1e-9)

    def test_widths_monotone_for_sine(self):
        m = MapParams(0.0, 0.0, SIN, 1, 3)
        widths = [s.width for s in sweep(m, list(np.linspace(0.1, 0.35, 6)), grid=32).samples]
        assert all(a < b for a, b in zip(widths, widths[1:]))

    def test_exact_power_law_fit(self):
        samples = [TongueSample(e, 3 * e ** 2, 0, 0, 0, 0)
                   for e in np.geomspace(0.05, 0.4, 8)]
        fit = fit_exponent(samples)
        assert fit.exponent == pytest.approx(2.0, abs=1e-6)
        assert fit.log_prefactor == pytest.approx(math.log(3.0), abs=1e-6)
        assert fit.residual < 1e-9

    def test_insufficient_data(self):
        samples = [TongueSample(0.1, 1e-3, 0, 0, 0, 0)] * 4
        with pytest.raises(InsufficientDataError):
            fit_exponent(samples)
        # widths at the solver floor are not usable either
        tiny = [TongueSample(0.1 * k, 1e-10, 0, 0, 0, 0) for k in range(1, 7)]
        with pytest.raises(InsufficientDataError):
            fit_exponent(tiny)

    def test_sine_q3_exponent(self):
        m = MapParams(0.0, 0.0, SIN, 1, 3)
        result = sweep(m, list(np.geomspace(0.1, 0.35, 7)), grid=32)
        fit = fit_exponent(result.samples)
        assert abs(fit.exponent - 3.0) < 0.15

    def test_degree_two_exponent_matches_series(self):
        f2 = TrigPoly.sine(2)
        m = MapParams(0.0, 0.0, f2, 1, 4)
        sol = expand(m, 3)
        assert sol.r == 2
        result = sweep(m, list(np.geomspace(0.1, 0.35, 7)), grid=32)
        fit = fit_exponent(result.samples)
        assert abs(fit.exponent - sol.r) < 0.2

    def test_exponent_at_least_q_over_d(self):
        for f, q, p in ((SIN, 2, 1), (SIN, 3, 1), (TrigPoly.sine(2), 4, 1)):
            m = MapParams(0.0, 0.0, f, p, q)
            result = sweep(m, list(np.geomspace(0.1, 0.35, 6)), grid=32)
            fit = fit_exponent(result.samples)
            assert fit.exponent >= q / f.degree() - 0.25


class TestSeriesAgreement:
    def test_width_ratio_improves(self):
        m = MapParams(0.0, 0.0, SIN, 1, 2)
        sol = expand(m, 2)
        ratios = []
        for eps in (0.2, 0.1, 0.05):
            measured = width_at(m, eps, 32).width
            ratios.append(measured / predicted_width(sol, eps))
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
        assert abs(ratios[-1] - 1.0) < 0.02


class TestSignSymmetry:
    @pytest.mark.parametrize("q,p", [(1, 0), (2, 1), (3, 1)])
    def test_odd_forcing_symmetric_tongue(self, q, p):
        m = MapParams(0.0, 0.0, SIN, p, q)
        s = width_at(m, 0.15, max(16, 8 * q))
        assert s.delta_min == pytest.approx(-s.delta_max, abs=1e-10)


class TestSaddleNode:
    def test_one_step_locus(self):
        m = MapParams(0.0, 0.0, SIN, 0, 1)
        plus, minus = saddle_node_locus(m, 0.2, 16)
        assert plus == pytest.approx(0.2, rel=1e-9)
        assert minus == pytest.approx(-0.2, rel=1e-9)

    def test_pair_exists_inside_none_outside(self):
        from tonguelab.orbits import multistart_orbits

        m = MapParams(0.2, 0.0, SIN, 1, 3)
        plus, _ = saddle_node_locus(m, 0.2, 48)
        inside = multistart_orbits(replace(m, delta=plus - 1e-6), x0_grid=48,
                                   y0_values=(0.0, 0.1, -0.1))
        kinds = sorted(o.kind for o in inside)
        assert kinds == ["center", "saddle"]
        sample = width_at(m, 0.2, 48)
        outside = multistart_orbits(replace(m, delta=plus + 1e-3 * sample.width),
                                    x0_grid=48, y0_values=(0.0, 0.1, -0.1))
        assert outside == []

    def test_trace_two_at_merge(self):
        from tonguelab.cylmap import iterate
        from tonguelab.orbits import monodromy

        m = MapParams(0.0, 0.0, SIN, 1, 3)
        sample = width_at(m, 0.2, 48)
        sol = solve_delta_y(sample.x_argmax, 0.2, m)
        assert sol.converged
        m_at = replace(m, eps=0.2, delta=sol.delta)
        states = iterate(PhaseState(sol.x0, sol.y0), m_at, 2)
        trace = float(np.trace(monodromy(states, m_at)))
        assert abs(trace - 2.0) < 1e-4
