from fractions import Fraction

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from padic_exit import _kernels_py
from padic_exit.batch import Window
from padic_exit.padic import (
    PAdic,
    arithmetic,
    character,
    format_padic,
    fractional_part,
    parse_padic,
)
from padic_exit.radial import ProcessParams, ball_mass, bridge_ball_prob, circle_mass

primes = st.sampled_from([2, 3, 5, 7, 11])


@st.composite
def padics(draw, p=None, prec=16):
    p = p or draw(primes)
    if draw(st.integers(0, 9)) == 0:
        return PAdic.zero(p)
    v = draw(st.integers(-6, 6))
    digits = [draw(st.integers(1, p - 1))] + draw(st.lists(st.integers(0, p - 1), min_size=prec - 1,
                                                             max_size=prec - 1))
    return PAdic.from_digits(p, v, digits)


@st.composite
def pairs(draw):
    p = draw(primes)
    return draw(padics(p)), draw(padics(p))


def norm(x):
    return abs(x)


@given(pairs())
def test_ultrametric(xy):
    x, y = xy
    s = x + y
    # compare where both sides are known
    assume(s.is_zero or s.valuation < min(x.abs_precision, y.abs_precision))
    assert norm(s) <= max(norm(x), norm(y))


@given(pairs())
def test_strict_triangle_when_sizes_differ(xy):
    x, y = xy
    assume(norm(x) != norm(y))
    assert norm(x + y) == max(norm(x), norm(y))


@given(pairs())
def test_addition_commutes(xy):
    x, y = xy
    assert x + y == y + x


@given(pairs())
def test_subtraction_inverts_addition(xy):
    x, y = xy
    z = (x + y) - y
    d = z - x
    assert d.is_zero or d.valuation >= min(x.abs_precision, y.abs_precision)


@given(pairs())
def test_character_is_additive(xy):
    x, y = xy
    assume(min(x.abs_precision, y.abs_precision) > 0)
    assert abs(character(x + y) - character(x) * character(y)) < 1e-9


@given(padics())
def test_fractional_part_has_p_power_denominator(x):
    f = fractional_part(x)
    assert 0 <= f < 1
    den = f.denominator
    while den % x.prime == 0:
        den //= x.prime
    assert den == 1


@given(padics())
def test_text_round_trip(x):
    assert parse_padic(format_padic(x)) == x


@given(padics())
def test_fraction_round_trip(x):
    y = PAdic.from_fraction(x.to_fraction(), x.prime, max(len(x.digits), 1))
    assert arithmetic("sub", x, y).is_zero or x.is_zero


@given(st.integers(-10 ** 6, 10 ** 6), st.integers(1, 10 ** 3), primes)
def test_from_fraction_valuation(num, den, p):
    assume(num != 0)
    q = Fraction(num, den)
    x = PAdic.from_fraction(q, p, 8)
    v, n, d = 0, q.numerator, q.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    assert x.valuation == v


params_st = st.builds(ProcessParams, primes, st.floats(0.2, 4.0), st.floats(0.1, 5.0))


@settings(deadline=None)
@given(params_st, st.floats(1e-3, 1e3), st.integers(-15, 15))
def test_ball_mass_is_a_cdf(params, t, a):
    lo = ball_mass(params, t, a).value
    hi = ball_mass(params, t, a + 1).value
    assert 0.0 <= lo <= hi <= 1.0
    assert circle_mass(params, t, a + 1).value >= 0.0


@settings(deadline=None, max_examples=200)
@given(st.sampled_from([2, 3, 5]), st.floats(0.05, 3.0), st.floats(0.05, 3.0),
       st.integers(-3, 3), st.integers(0, 40), st.integers(-4, 2))
def test_bridge_children_sum_to_parent(p, t, tp, w_v, c_int, k):
    params = ProcessParams(p, 1.0, 1.0)
    w = PAdic.from_unit_integer(p, w_v, 1, 20)
    c = PAdic.from_int(c_int, p, 20) if c_int else PAdic.zero(p)
    parent = bridge_ball_prob(params, t, tp, w, c, k)
    kids = sum(bridge_ball_prob(params, t, tp, w, c + PAdic.from_unit_integer(p, -k, d, 20) if d else c, k - 1)
               for d in range(p))
    assert abs(kids - parent) <= 1e-12 * max(parent, 1e-300) + 1e-16


@settings(deadline=None)
@given(st.sampled_from([2, 3, 5]), st.lists(st.integers(0, 2 ** 40), min_size=1, max_size=50))
def test_trailing_zeros_divides(p, xs):
    win = Window.for_level(p, 0)
    x = np.array([v % win.modulus or 1 for v in xs], dtype=np.int64)
    tz = _kernels_py.trailing_zeros(x, p, win.W)
    for v, k in zip(x.tolist(), tz.tolist()):
        assert v % p ** k == 0 and (v // p ** k) % p != 0
