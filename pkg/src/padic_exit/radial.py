"""Series evaluation of the p-adic heat kernel and the masses it assigns to balls.

Everything here depends on points only through their absolute value, so radii
enter as integer exponents: ``m`` stands for any ``x`` with ``|x| = p**m`` and
``None`` stands for ``x = 0``.

The kernel for time ``t`` is::

    rho(t, x) = sum_{r <= -m} (exp(-s t p^{rb}) - exp(-s t p^{(r+1)b})) p^r ,   |x| = p^m

and all infinite sums are truncated with an explicit geometric bound on the
discarded tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .padic import PAdic, PrimeMismatchError, is_prime

_EXP_FLUSH = 745.0  # exp(-x) is flushed to 0 beyond this


class SeriesConvergenceError(ArithmeticError):
    """The requested tolerance was not reached within ``max_terms`` terms."""


@dataclass(frozen=True)
class ProcessParams:
    p: int
    b: float
    sigma: float

    def __post_init__(self):
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise ValueError(f"p must be a prime integer, got {self.p!r}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def alpha(self) -> float:
        return alpha(self)

    def as_dict(self) -> dict:
        return {"p": self.p, "b": self.b, "sigma": self.sigma}


@dataclass(frozen=True)
class SeriesTolerance:
    eps: float = 1e-14
    max_terms: int = 10 ** 6

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")


DEFAULT_TOL = SeriesTolerance()


@dataclass(frozen=True)
class RadialValue:
    value: float
    attained_tolerance: float

    def __float__(self) -> float:
        return self.value


def alpha(params: ProcessParams) -> float:
    """Exit-rate constant ``1 - (p^b - 1) / (p^(b+1) - 1)``."""
    p, b = params.p, params.b
    return 1.0 - math.expm1(b * math.log(p)) / math.expm1((b + 1) * math.log(p))


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"time must be positive, got {t!r}")


# -- series building blocks ---------------------------------------------------

def _log_rate(params: ProcessParams, t: float, r: int) -> float:
    """log(sigma t p^{rb})"""
    return math.log(params.sigma * t) + r * params.b * math.log(params.p)


def _expneg(params: ProcessParams, t: float, r: int) -> float:
    lx = _log_rate(params, t, r)
    if lx > math.log(_EXP_FLUSH):
        return 0.0
    return math.exp(-math.exp(lx))


def _coef(params: ProcessParams, t: float, r: int) -> float:
    """exp(-s t p^{rb}) - exp(-s t p^{(r+1)b}) without cancellation."""
    lx = _log_rate(params, t, r)
    if lx > math.log(_EXP_FLUSH):
        return 0.0
    x = math.exp(lx)
    return math.exp(-x) * -math.expm1(-x * math.expm1(params.b * math.log(params.p)))


@lru_cache(maxsize=4096)
def _top_index(params: ProcessParams, t: float) -> int:
    """Largest r worth summing: above it, exp(-s t p^{rb}) p^r is negligible
    relative to the peak of the series."""
    logp = math.log(params.p)
    r_dom = math.floor(-math.log(params.sigma * t) / (params.b * logp))

    def log_term(r):
        return -math.exp(_log_rate(params, t, r)) + r * logp

    ref = log_term(r_dom)
    r = r_dom
    while log_term(r) > ref - 80.0 or _log_rate(params, t, r) < 0:
        r += 1
    return r


def _kernel_tail(params: ProcessParams, t: float, r: int) -> float:
    """Upper bound for sum_{s <= r} c_s p^s  (uses c_s <= s t p^{sb}(p^b - 1))."""
    p, b = params.p, params.b
    lb = (math.log(params.sigma * t) + math.log(math.expm1(b * math.log(p)))
          + r * (1 + b) * math.log(p) - math.log1p(-p ** (-(1 + b))))
    if lb > 700:
        return math.inf
    return math.exp(lb)


def _sum_down(term, r_start: int, tail, tol: SeriesTolerance):
    s = 0.0
    r = r_start
    n = 0
    while True:
        s += term(r)
        r -= 1
        n += 1
        tb = tail(r)
        # absolute tolerance, and relative once the sum itself is tiny
        if tb < tol.eps * (1.0 + abs(s)) and (tb <= tol.eps * abs(s) or tb < 1e-300):
            return s, tb
        if n >= tol.max_terms:
            raise SeriesConvergenceError(
                f"tail bound {tb:.3g} above eps={tol.eps} after {n} terms")


# -- kernel and masses ----------------------------------------------------------

@lru_cache(maxsize=1 << 16)
def density_radial(params: ProcessParams, t: float, m: Optional[int],
                   tol: SeriesTolerance = DEFAULT_TOL) -> RadialValue:
    """``rho(t, x)`` for ``|x| = p**m`` (``m=None`` for ``x = 0``)."""
    _check_t(t)
    p = params.p
    top = _top_index(params, t)
    start = top if m is None else min(-m, top)
    s, tb = _sum_down(lambda r: _coef(params, t, r) * float(p) ** r, start,
                      lambda r: _kernel_tail(params, t, r), tol)
    return RadialValue(s, tb)


def density_at_zero(params: ProcessParams, t: float, tol: SeriesTolerance = DEFAULT_TOL) -> RadialValue:
    return density_radial(params, t, None, tol)


@lru_cache(maxsize=1 << 16)
def ball_mass(params: ProcessParams, t: float, a: int,
              tol: SeriesTolerance = DEFAULT_TOL) -> RadialValue:
    """``P(|X_t| <= p**a)`` from the closed first term plus the circle series."""
    _check_t(t)
    p = params.p
    head = _expneg(params, t, -a)
    start = min(-a - 1, _top_index(params, t))
    pa = float(p) ** a
    s, tb = _sum_down(lambda r: pa * float(p) ** r * _coef(params, t, r), start,
                      lambda r: pa * _kernel_tail(params, t, r), tol)
    v = head + s
    return RadialValue(min(max(v, 0.0), 1.0), tb)


@lru_cache(maxsize=1 << 16)
def ball_mass_lemma1(params: ProcessParams, t: float, a: int,
                     tol: SeriesTolerance = DEFAULT_TOL) -> RadialValue:
    """Same mass as :func:`ball_mass`, written as ``p^a`` times the integral of
    ``exp(-s t |x|^b)`` over ``B_{-a}``; no differences of exponentials appear."""
    _check_t(t)
    p = params.p
    q = 1.0 - 1.0 / p
    start = min(-a, _top_index(params, t))
    pa = float(p) ** a
    s, tb = _sum_down(lambda r: pa * float(p) ** r * q * _expneg(params, t, r), start,
                      lambda r: pa * float(p) ** r, tol)
    return RadialValue(min(max(s, 0.0), 1.0), tb)


def circle_mass(params: ProcessParams, t: float, r: int,
                tol: SeriesTolerance = DEFAULT_TOL) -> RadialValue:
    """``P(|X_t| = p**r)``."""
    hi = ball_mass(params, t, r, tol)
    lo = ball_mass(params, t, r - 1, tol)
    v = hi.value - lo.value
    if v < 0:
        v = 0.0
    return RadialValue(v, hi.attained_tolerance + lo.attained_tolerance)


def exact_exit_prob(params: ProcessParams, T: float, a: int) -> float:
    """Probability that the path stays in ``B_a(0)`` on all of ``[0, T]``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        return 1.0
    rate = params.sigma * alpha(params) * T * math.exp(-a * params.b * math.log(params.p))
    return math.exp(-rate)


def grid_sup_prob(params: ProcessParams, T: float, a: int, m: int,
                  tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Probability that the path is in ``B_a(0)`` at the ``m`` grid times ``jT/m``."""
    _check_t(T)
    if m < 1:
        raise ValueError("m must be >= 1")
    bm = ball_mass(params, T / m, a, tol).value
    if bm <= 0:
        return 0.0
    return math.exp(m * math.log(bm))


def density_profile(params: ProcessParams, t: float, m_lo: int, m_hi: int,
                    tol: SeriesTolerance = DEFAULT_TOL) -> np.ndarray:
    """Vector of ``rho(t, .)`` on the circles ``m_lo..m_hi`` (inclusive)."""
    _check_t(t)
    if m_hi < m_lo:
        raise ValueError("empty range")
    p, b = params.p, params.b
    base = density_radial(params, t, m_hi + 1, tol).value
    r = np.arange(-m_hi, -m_lo + 1, dtype=np.float64)
    lx = math.log(params.sigma * t) + r * b * math.log(p)
    with np.errstate(over="ignore", under="ignore"):
        x = np.exp(np.minimum(lx, 50.0))
        c = np.where(lx > math.log(_EXP_FLUSH), 0.0,
                     np.exp(-x) * -np.expm1(-x * math.expm1(b * math.log(p))))
        terms = c * np.power(float(p), r)
    f = base + np.cumsum(terms)
    # f[i] corresponds to r = -m_hi + i, i.e. m = m_hi - i
    return f[::-1].copy()


# -- radial functions and ball integrals --------------------------------------

class RadialFunction:
    """A function of ``|x|`` given circle by circle.

    Subclasses provide ``_value(e)``, ``at_zero()`` and may override
    ``ball_integral(k)``; values are memoized per instance.
    """

    def __init__(self, p: int, tol: SeriesTolerance = DEFAULT_TOL):
        self.p = p
        self.tol = tol
        self._memo: dict = {}

    def value(self, e: Optional[int]) -> float:
        if e is None:
            return self.at_zero()
        v = self._memo.get(e)
        if v is None:
            v = self._memo[e] = self._value(e)
        return v

    def _value(self, e: int) -> float:
        raise NotImplementedError

    def at_zero(self) -> float:
        raise NotImplementedError

    def ball_integral(self, k: int) -> float:
        """Integral over ``B_k(0)`` by summing circles downward."""
        p = float(self.p)
        q = 1.0 - 1.0 / p
        bound = abs(self.at_zero())
        s = 0.0
        r = k
        n = 0
        while True:
            s += p ** r * q * self.value(r)
            r -= 1
            n += 1
            if p ** r * max(bound, abs(self.value(r))) < self.tol.eps * (1.0 + abs(s)):
                return s + p ** r * self.value(r)
            if n >= self.tol.max_terms:
                raise SeriesConvergenceError("ball integral did not converge")


class HeatKernel(RadialFunction):
    """``x -> rho(t, x)``."""

    def __init__(self, params: ProcessParams, t: float, tol: SeriesTolerance = DEFAULT_TOL):
        super().__init__(params.p, tol)
        _check_t(t)
        self.params = params
        self.t = t

    def _value(self, e: int) -> float:
        return density_radial(self.params, self.t, e, self.tol).value

    def at_zero(self) -> float:
        return density_radial(self.params, self.t, None, self.tol).value

    def ball_integral(self, k: int) -> float:
        return ball_mass(self.params, self.t, k, self.tol).value


class BallHitting(RadialFunction):
    """``c -> P(X_t in B_j(c))`` as a function of ``|c|``."""

    def __init__(self, params: ProcessParams, t: float, j: int, tol: SeriesTolerance = DEFAULT_TOL):
        super().__init__(params.p, tol)
        self.kernel = HeatKernel(params, t, tol)
        self.j = j

    def _value(self, e: int) -> float:
        if e <= self.j:
            return self.kernel.ball_integral(self.j)
        return float(self.p) ** self.j * self.kernel.value(e)

    def at_zero(self) -> float:
        return self.kernel.ball_integral(self.j)

    def ball_integral(self, k: int) -> float:
        if k >= self.j:
            return float(self.p) ** self.j * self.kernel.ball_integral(k)
        return float(self.p) ** k * self.kernel.ball_integral(self.j)


class BallConvolution(RadialFunction):
    """``z -> integral over B_a(0) of F(|x|) G(|z - x|) dx``."""

    def __init__(self, f: RadialFunction, g: RadialFunction, a: int):
        super().__init__(f.p, f.tol)
        if f.p != g.p:
            raise PrimeMismatchError("radial functions over different primes")
        self.f, self.g, self.a = f, g, a

    def _value(self, e: int) -> float:
        return radial_ball_integral(self.f, self.g, e, self.a)

    def at_zero(self) -> float:
        v = self._memo.get("zero")
        if v is None:
            v = self._memo["zero"] = radial_ball_integral(self.f, self.g, None, self.a)
        return v


def radial_ball_integral(f: RadialFunction, g: RadialFunction, z_exp: Optional[int], a: int) -> float:
    """Integral over ``B_a(0)`` of ``f(|x|) g(|z - x|)`` for ``|z| = p**z_exp``.

    ``B_a`` is cut into circles about 0; only the circle of radius ``|z|`` needs
    a further split (into ``B_{e-1}(z)`` and the rest), where ``|z - x|`` and
    ``|x|`` swap roles.
    """
    p = float(f.p)
    q = 1.0 - 1.0 / p
    if z_exp is None:
        # |z - x| = |x| everywhere
        bound = abs(f.at_zero() * g.at_zero())
        s = 0.0
        r = a
        n = 0
        while True:
            s += p ** r * q * f.value(r) * g.value(r)
            r -= 1
            n += 1
            if p ** r * max(bound, abs(f.value(r) * g.value(r))) < f.tol.eps * (1.0 + abs(s)):
                return s + p ** r * f.value(r) * g.value(r)
            if n >= f.tol.max_terms:
                raise SeriesConvergenceError("ball integral did not converge")
    e = z_exp
    if e > a:
        return g.value(e) * f.ball_integral(a)
    s = 0.0
    for r in range(a, e, -1):
        s += p ** r * q * f.value(r) * g.value(r)
    fe, ge = f.value(e), g.value(e)
    s += p ** e * (1.0 - 2.0 / p) * fe * ge
    s += fe * g.ball_integral(e - 1)
    s += ge * f.ball_integral(e - 1)
    return s


def ball_convolution(params: ProcessParams, t: float, t_prime: float, z_exp: Optional[int], a: int,
                     tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """``integral over B_a of rho(t, x) rho(t', z - x) dx`` for ``|z| = p**z_exp``."""
    _check_t(t)
    _check_t(t_prime)
    return _ball_convolution(params, t, t_prime, z_exp, a, tol)


@lru_cache(maxsize=1 << 16)
def _ball_convolution(params, t, t_prime, z_exp, a, tol):
    return radial_ball_integral(HeatKernel(params, t, tol), HeatKernel(params, t_prime, tol), z_exp, a)


# -- bridge marginal ------------------------------------------------------------

def _ball_class(c: PAdic, x: Optional[PAdic], k: int) -> Optional[int]:
    """Radius exponent of ``c - x`` if ``x`` lies outside ``B_k(c)``, else ``None``."""
    d = c if x is None else c - x
    if d.is_zero or -d.valuation <= k:
        return None
    return -d.valuation


def bridge_ball_prob(params: ProcessParams, t: float, t_prime: float, w: PAdic, c: PAdic, k: int,
                     tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """``P(Z in B_k(c))`` for ``Z`` with density proportional to ``rho(t, z) rho(t', w - z)``.

    This is the law of the bridge position at time ``t`` for a path pinned to
    ``w`` at time ``t + t'``.
    """
    _check_t(t)
    _check_t(t_prime)
    if w.prime != params.p or c.prime != params.p:
        raise PrimeMismatchError("w and c must share the process prime")
    w_exp = w.radius_exponent()
    return bridge_ball_prob_class(params, t, t_prime, w_exp, k,
                                  _ball_class(c, None, k), _ball_class(c, w, k), tol)


@lru_cache(maxsize=1 << 18)
def bridge_ball_prob_class(params: ProcessParams, t: float, t_prime: float, w_exp: Optional[int], k: int,
                           c_exp: Optional[int], cw_exp: Optional[int],
                           tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """:func:`bridge_ball_prob` keyed by ultrametric data only.

    ``c_exp``/``cw_exp`` are the radius exponents of ``c`` and ``c - w`` when the
    ball ``B_k(c)`` misses 0 (resp. ``w``), and ``None`` when it contains it.
    """
    norm = density_radial(params, t + t_prime, w_exp, tol).value
    if c_exp is None and cw_exp is None:
        mass = _ball_convolution(params, t, t_prime, w_exp, k, tol)
    elif c_exp is None:
        # ball around 0 that misses w: |w - z| = |w|
        mass = density_radial(params, t_prime, w_exp, tol).value * ball_mass(params, t, k, tol).value
    elif cw_exp is None:
        mass = density_radial(params, t, w_exp, tol).value * ball_mass(params, t_prime, k, tol).value
    else:
        mass = (float(params.p) ** k * density_radial(params, t, c_exp, tol).value
                * density_radial(params, t_prime, cw_exp, tol).value)
    return mass / norm
