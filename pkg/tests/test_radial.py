import itertools
import math

import mpmath
import numpy as np
import pytest

from padic_exit.padic import PAdic
from padic_exit.radial import (
    BallConvolution,
    HeatKernel,
    ProcessParams,
    SeriesConvergenceError,
    SeriesTolerance,
    alpha,
    ball_convolution,
    ball_mass,
    ball_mass_lemma1,
    bridge_ball_prob,
    circle_mass,
    density_profile,
    density_radial,
    exact_exit_prob,
    grid_sup_prob,
)

mpmath.mp.dps = 50


def mp_density(p, b, s, t, m, depth=400):
    """Naive kernel series, summed in 50-digit arithmetic."""
    top = -m if m is not None else 200
    tot = mpmath.mpf(0)
    for r in range(top, top - depth, -1):
        e1 = mpmath.exp(-s * t * mpmath.mpf(p) ** (r * b))
        e2 = mpmath.exp(-s * t * mpmath.mpf(p) ** ((r + 1) * b))
        tot += (e1 - e2) * mpmath.mpf(p) ** r
    return tot


def mp_ball_mass(p, b, s, t, a, depth=400):
    """``1 - P(|X_t| > p^a)`` summed over the circles outside the ball."""
    out = mpmath.mpf(0)
    for r in range(a + 1, a + depth):
        out += mp_density(p, b, s, t, r, depth) * mpmath.mpf(p) ** r * (1 - mpmath.mpf(1) / p)
    return 1 - out


P211 = ProcessParams(2, 1.0, 1.0)


class TestAlpha:
    def test_p2_b1(self):
        assert alpha(P211) == pytest.approx(2 / 3, abs=1e-15)

    @pytest.mark.parametrize("p,b", list(itertools.product([2, 3, 5, 97], [0.1, 0.5, 1, 3])))
    def test_bounds(self, p, b):
        al = alpha(ProcessParams(p, b, 1.0))
        assert 1 - 1 / p < al < 1

    def test_limits_in_b(self):
        assert alpha(ProcessParams(5, 1e-9, 1.0)) == pytest.approx(1.0, abs=1e-8)
        assert alpha(ProcessParams(5, 40.0, 1.0)) == pytest.approx(1 - 1 / 5, abs=1e-15)


class TestDensity:
    @pytest.mark.parametrize("p,b,s,t,m", [(2, 1.0, 1.0, 1.0, 0), (3, 2.0, 0.5, 0.3, -2),
                                           (5, 1.0, 2.0, 4.0, 3), (2, 0.5, 1.0, 0.01, -6)])
    def test_matches_high_precision(self, p, b, s, t, m):
        got = density_radial(ProcessParams(p, b, s), t, m).value
        want = float(mp_density(p, b, s, t, m))
        assert got == pytest.approx(want, rel=1e-12)

    def test_decreasing_in_radius(self):
        vals = [density_radial(P211, 1.0, m).value for m in range(-10, 30)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))
        assert all(x > y for x, y in zip(vals[10:], vals[11:]))
        assert density_radial(P211, 1.0, None).value >= vals[0]

    @pytest.mark.parametrize("params", [P211, ProcessParams(3, 2.0, 0.5), ProcessParams(7, 0.7, 3.0)])
    def test_normalized(self, params):
        # mass of B_{-40} plus all circles outside it
        t = 0.8
        tot = ball_mass(params, t, -40).value
        for r in range(-39, 150):
            tot += density_radial(params, t, r).value * params.p ** float(r) * (1 - 1 / params.p)
        assert tot == pytest.approx(1.0, abs=1e-10)

    def test_profile_matches_scalar(self):
        params = ProcessParams(3, 1.5, 0.7)
        prof = density_profile(params, 0.4, -8, 12)
        for i, m in enumerate(range(-8, 13)):
            assert prof[i] == pytest.approx(density_radial(params, 0.4, m).value, rel=1e-12)

    def test_bad_time(self):
        with pytest.raises(ValueError):
            density_radial(P211, 0.0, 1)

    def test_series_budget(self):
        with pytest.raises(SeriesConvergenceError):
            density_radial(P211, 1.0, 0, SeriesTolerance(eps=1e-14, max_terms=2))

    def test_far_tail_keeps_relative_accuracy(self):
        m = 60
        got = density_radial(P211, 1.0, m).value
        assert got == pytest.approx(float(mp_density(2, 1.0, 1.0, 1.0, m)), rel=1e-10)


class TestBallMass:
    @pytest.mark.parametrize("p,b,s,t,a", [(2, 1.0, 1.0, 1.0, 0), (3, 2.0, 0.5, 2.0, 1),
                                           (5, 1.0, 2.0, 1.0, -1), (2, 0.3, 1.0, 5.0, 4)])
    def test_matches_high_precision(self, p, b, s, t, a):
        got = ball_mass(ProcessParams(p, b, s), t, a).value
        assert got == pytest.approx(float(mp_ball_mass(p, b, s, t, a, 250)), abs=1e-13)

    def test_integral_form_agrees_on_grid(self):
        pbs = itertools.product([2, 3, 5, 7, 13], [0.5, 2.0], [0.5, 2.0])
        ta = [(0.01, -2), (0.3, 0), (1.0, 3), (10.0, 1), (100.0, 5)]
        grid = [(p, b, s, t, a) for (p, b, s), (t, a) in itertools.product(pbs, ta)]
        assert len(grid) == 100
        for p, b, s, t, a in grid:
            params = ProcessParams(p, b, s)
            assert abs(ball_mass(params, t, a).value - ball_mass_lemma1(params, t, a).value) <= 1e-12

    def test_small_time_limit(self):
        assert ball_mass(P211, 1e-12, 0).value == pytest.approx(1.0, abs=1e-9)

    def test_large_ball_and_long_time(self):
        assert ball_mass(P211, 1.0, 60).value == pytest.approx(1.0, abs=1e-12)
        assert ball_mass(P211, 1e9, 0).value < 1e-8

    def test_monotone_in_radius(self):
        vals = [ball_mass(P211, 1.0, a).value for a in range(-20, 20)]
        assert all(x <= y for x, y in zip(vals, vals[1:]))

    def test_circle_normalization(self):
        params = ProcessParams(3, 2.0, 0.5)
        tot = sum(circle_mass(params, 2.0, r).value for r in range(-60, 200)) + ball_mass(params, 2.0, -61).value
        assert tot == pytest.approx(1.0, abs=1e-10)

    def test_circle_near_zero_is_haar_proportional(self):
        rho0 = density_radial(P211, 1.0, None).value
        for r in (-20, -25, -30):
            ratio = circle_mass(P211, 1.0, r).value / (2.0 ** r * 0.5)
            assert ratio == pytest.approx(rho0, rel=1e-4)

    def test_circle_mass_is_measure_times_density(self):
        params = ProcessParams(5, 1.0, 1.0)
        for r in range(-4, 5):
            want = density_radial(params, 0.7, r).value * 5.0 ** r * 0.8
            assert circle_mass(params, 0.7, r).value == pytest.approx(want, rel=1e-9, abs=1e-16)


class TestExitProbabilities:
    def test_reference_value(self):
        v = exact_exit_prob(P211, 1.0, 0)
        assert v == pytest.approx(math.exp(-2 / 3), abs=1e-15)
        assert v == pytest.approx(0.513417, abs=1e-6)

    def test_zero_horizon(self):
        assert exact_exit_prob(P211, 0.0, 3) == 1.0

    def test_huge_ball(self):
        assert exact_exit_prob(P211, 1.0, 60) == pytest.approx(1.0, abs=1e-15)

    def test_grid_single_point(self):
        assert grid_sup_prob(P211, 1.0, 0, 1) == ball_mass(P211, 1.0, 0).value

    def test_grid_above_closed_form_and_decreasing(self):
        target = exact_exit_prob(P211, 1.0, 0)
        vals = [grid_sup_prob(P211, 1.0, 0, m) for m in (1, 2, 8, 64, 1024)]
        assert all(x > y for x, y in zip(vals, vals[1:]))
        assert vals[-1] > target

    def test_grid_error_halves(self):
        target = exact_exit_prob(P211, 1.0, 0)
        errs = [grid_sup_prob(P211, 1.0, 0, m) - target for m in (64, 128, 256, 512, 1024)]
        for e1, e2 in zip(errs, errs[1:]):
            assert 1.5 <= e1 / e2 <= 2.5

    def test_grid_bad_m(self):
        with pytest.raises(ValueError):
            grid_sup_prob(P211, 1.0, 0, 0)


class TestBallConvolution:
    @pytest.mark.parametrize("params", [P211, ProcessParams(3, 2.0, 0.5), ProcessParams(5, 1.0, 2.0)])
    @pytest.mark.parametrize("z", [-2, 0, 3])
    def test_semigroup(self, params, z):
        got = ball_convolution(params, 0.7, 1.3, z, z + 30)
        assert got == pytest.approx(density_radial(params, 2.0, z).value, abs=1e-8)

    @pytest.mark.parametrize("p,t,tp,a,z", [(2, 0.5, 1.0, 1, -1), (2, 1.0, 0.3, 2, 2), (3, 0.2, 0.9, 1, 0),
                                            (3, 1.0, 1.0, 0, -2), (2, 2.0, 0.1, 0, 0)])
    def test_matches_group_model(self, group_model, p, t, tp, a, z):
        params = ProcessParams(p, 1.0, 1.0)
        g = group_model(p, max(a, z) + 1, 9 if p == 3 else 13)
        f1, f2 = g.heat(params, t), g.heat(params, tp)
        zi = g.index(PAdic.from_unit_integer(p, -z, 1, 20))
        want = g.conv(f1 * g.ball(a), f2)[zi]
        assert ball_convolution(params, t, tp, z, a) == pytest.approx(want, rel=1e-9)

    def test_lower_bound_inside_ball(self):
        for a in (-1, 0, 2):
            for z in (None, a - 2, a):
                lhs = ball_convolution(P211, 1.0, 0.5, z, a)
                rhs = density_radial(P211, 1.5, z).value * ball_mass(P211, 1.0, a).value
                assert lhs - rhs > 1e-12

    def test_bound_fails_outside_ball(self):
        # with |z| > p^a the integrand rho(t', z - x) is constant on B_a, so the
        # convolution is rho(t', z) P(|X_t| <= p^a), which sits below rho(t+t', z) P(...)
        a, z = 0, 3
        lhs = ball_convolution(P211, 1.0, 0.5, z, a)
        assert lhs == pytest.approx(density_radial(P211, 0.5, z).value * ball_mass(P211, 1.0, a).value,
                                    rel=1e-12)
        assert lhs < density_radial(P211, 1.5, z).value * ball_mass(P211, 1.0, a).value

    def test_nested_function_value(self):
        f = BallConvolution(HeatKernel(P211, 1.0), HeatKernel(P211, 0.5), 1)
        assert f.value(0) == pytest.approx(ball_convolution(P211, 1.0, 0.5, 0, 1), rel=1e-14)
        assert f.ball_integral(40) == pytest.approx(ball_mass(P211, 1.0, 1).value, rel=1e-9)


class TestBridgeBallProb:
    def _children(self, p, c, k):
        return [c + PAdic.from_unit_integer(p, -k, d, 20) if d else c for d in range(p)]

    @pytest.mark.parametrize("p,w", [(2, None), (3, 0), (3, -2), (5, 1)])
    def test_children_partition_parent(self, p, w):
        params = ProcessParams(p, 1.0, 1.0)
        wv = PAdic.zero(p) if w is None else PAdic.from_unit_integer(p, -w, 1, 20)
        for k in range(-3, 4):
            c = PAdic.zero(p)
            parent = bridge_ball_prob(params, 0.6, 0.9, wv, c, k)
            kids = sum(bridge_ball_prob(params, 0.6, 0.9, wv, ch, k - 1) for ch in self._children(p, c, k))
            assert kids == pytest.approx(parent, rel=1e-11, abs=1e-15)

    def test_total_mass(self):
        params = ProcessParams(3, 1.0, 1.0)
        w = PAdic.from_unit_integer(3, -1, 2, 20)
        assert bridge_ball_prob(params, 0.4, 1.1, w, PAdic.zero(3), 60) == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_in_time_reversal(self):
        params = ProcessParams(3, 1.0, 1.0)
        w = PAdic.from_unit_integer(3, 0, 1, 20)
        c = PAdic.from_unit_integer(3, 1, 2, 20)
        fwd = bridge_ball_prob(params, 0.3, 0.8, w, c, -1)
        bwd = bridge_ball_prob(params, 0.8, 0.3, w, w - c, -1)
        assert fwd == pytest.approx(bwd, rel=1e-12)

    @pytest.mark.parametrize("c_int,k", [(0, -2), (1, -1), (4, -3), (3, 0), (9, -2)])
    def test_matches_group_model(self, group_model, c_int, k):
        p, t, tp = 3, 0.5, 0.7
        params = ProcessParams(p, 1.0, 1.0)
        w = PAdic.from_int(4, p, 20)
        c = PAdic.from_int(c_int, p, 20) if c_int else PAdic.zero(p)
        g = group_model(p, 2, 8)
        joint = g.heat(params, t) * np.roll(g.heat(params, tp)[::-1], g.index(w) + 1)
        # outside B_A both factors are constant on circles and |w - x| = |x|
        outside = sum(3.0 ** r * (1 - 1 / 3) * density_radial(params, t, r).value * density_radial(params, tp, r).value
                      for r in range(g.A + 1, g.A + 80))
        mass = (joint * g.ball(k, g.index(c))).sum() * g.cell / (joint.sum() * g.cell + outside)
        assert bridge_ball_prob(params, t, tp, w, c, k) == pytest.approx(mass, rel=1e-6)
