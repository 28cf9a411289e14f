"""Vectorized path simulation on fixed digit windows.

A window ``(p, L, W)`` stores a p-adic value by its digits at positions
``L .. L+W-1`` as one int64 ``N = sum d_k p^(k-L)``; addition is addition mod
``p**W``.  Choosing ``L = -a - W//2`` keeps the exit ball ``B_a`` well inside
the window: an increment with a digit below position ``L`` has radius above
``p^-L >= p^a`` and is recorded as an overflow, which is always an exit.
Digits above the window only change positions by less than ``p^-(L+W)`` and
never affect radii at or above that scale.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _backend
from .padic import PAdic, PrimeMismatchError
from .radial import DEFAULT_TOL, ProcessParams, SeriesTolerance, ball_mass, density_profile, density_radial
from .rng import RandomStream
from .sampler import radius_table

INT_BITS = 62

# outcome kinds in a bridge step table
_CIRCLE, _SPLIT, _REFLECT, _ZERO, _JUMP_TO_W, _OVERFLOW = range(6)


@dataclass(frozen=True)
class Window:
    p: int
    L: int
    W: int

    @classmethod
    def for_level(cls, p: int, a: int) -> "Window":
        W = 1
        while p ** (W + 1) <= 1 << INT_BITS:
            W += 1
        return cls(p, -a - W // 2, W)

    @property
    def modulus(self) -> int:
        return self.p ** self.W

    @property
    def r_min(self) -> int:
        """Smallest radius exponent a nonzero window value can have."""
        return -(self.L + self.W - 1)

    @property
    def r_max(self) -> int:
        return -self.L

    def encode(self, x: PAdic) -> int:
        if x.prime != self.p:
            raise PrimeMismatchError("value and window use different primes")
        if x.is_zero:
            return 0
        if x.valuation < self.L:
            raise ValueError(f"value of radius p^{-x.valuation} does not fit the window")
        return sum(x.digit(k) * self.p ** (k - self.L) for k in range(x.valuation, self.L + self.W))

    def decode(self, n: int) -> PAdic:
        n = int(n) % self.modulus
        if n == 0:
            return PAdic.zero(self.p)
        return PAdic.from_unit_integer(self.p, self.L, n, self.W)


def _draw_block(gen: np.random.Generator, p: int, W: int, shape):
    u = gen.random(shape)
    lead = gen.integers(1, p, size=shape, dtype=np.int64) if p > 2 else np.ones(shape, dtype=np.int64)
    rest = gen.integers(0, p ** (W - 1), size=shape, dtype=np.int64)
    return u, lead, rest


def free_increments(params: ProcessParams, dt: float, shape, win: Window, depth: int,
                    rng: RandomStream, kernels=None, tol: SeriesTolerance = DEFAULT_TOL):
    """``(incr, over)`` arrays of free increments over time ``dt``."""
    k = kernels or _backend.kernels
    r_lo, cdf = radius_table(params, dt, tol)
    u, lead, rest = _draw_block(rng.generator, win.p, win.W, shape)
    return k.free_increments(u, lead, rest, cdf, r_lo, win.p, win.L, win.W, depth)


def simulate_free(params: ProcessParams, T: float, m: int, n: int, win: Window, a: int,
                  start: int, center: int, depth: int, rng: RandomStream, kernels=None,
                  tol: SeriesTolerance = DEFAULT_TOL):
    """``(sup, first_exit, final)`` for ``n`` free paths on the grid ``jT/m``."""
    k = kernels or _backend.kernels
    incr, over = free_increments(params, T / m, (n, m), win, depth, rng, k, tol)
    return k.walk(incr, over, np.full(n, start, dtype=np.int64), center, win.p, win.L, win.W, a)


# -- bridge steps ----------------------------------------------------------------

class BridgeStepLaw:
    """Law of the next increment ``delta`` of a bridge that must cover ``w`` in
    the remaining time, i.e. density proportional to ``rho(dt, d) rho(tau, w - d)``.

    For ``|w| = p^e`` the law splits into four exact pieces by the circle of
    ``delta``: radius above ``e`` (``|w - delta| = |delta|``), radius ``e`` away
    from both 0 and ``w``, ``delta`` near 0 and ``delta`` near ``w``.  On each
    piece the density is constant on circles around 0 or around ``w``, so a
    circle is picked from a table and the point is uniform on it.
    """

    def __init__(self, params: ProcessParams, dt: float, tau: float, win: Window,
                 tol: SeriesTolerance = DEFAULT_TOL):
        self.params, self.dt, self.tau, self.win, self.tol = params, dt, tau, win, tol
        p = params.p
        lo = win.r_min
        hi = win.r_max + 8
        while True:
            fd = density_profile(params, dt, lo, hi, tol)
            ft = density_profile(params, tau, lo, hi, tol)
            mu_hi = float(p) ** hi * (1 - 1 / p)
            norm0 = density_radial(params, dt + tau, None, tol).value
            if mu_hi * fd[-1] * ft[-1] < 1e-18 * norm0 or hi > win.r_max + 4096:
                break
            hi += 32
        self.r_lo, self.r_hi = lo, hi
        self.fd, self.ft = fd, ft
        self.mu = np.power(float(p), np.arange(lo, hi + 1)) * (1 - 1 / p)
        self.below_d = ball_mass(params, dt, lo - 1, tol).value
        self.below_t = ball_mass(params, tau, lo - 1, tol).value
        self._tables = {}
        self._flat = None

    def _i(self, r: int) -> int:
        return r - self.r_lo

    def table(self, e: Optional[int]):
        """``(kind, radius, cdf)`` for ``|w| = p^e`` (``None`` for ``w = 0``)."""
        if e in self._tables:
            return self._tables[e]
        p, win = self.params.p, self.win
        kinds, radii, weights = [], [], []

        def add(kind, r, wgt):
            kinds.append(kind)
            radii.append(r)
            weights.append(wgt)

        prod = self.mu * self.fd * self.ft
        if e is None:
            norm = density_radial(self.params, self.dt + self.tau, None, self.tol).value
            add(_ZERO, 0, float(p) ** (self.r_lo - 1) * self.fd[0] * self.ft[0])
            for r in range(self.r_lo, win.r_max + 1):
                add(_CIRCLE, r, prod[self._i(r)])
            add(_OVERFLOW, 0, prod[self._i(win.r_max + 1):].sum())
        else:
            norm = density_radial(self.params, self.dt + self.tau, e, self.tol).value
            ie = self._i(e)
            for r in range(e + 1, win.r_max + 1):
                add(_CIRCLE, r, prod[self._i(r)])
            add(_OVERFLOW, 0, prod[self._i(win.r_max + 1):].sum())
            if p > 2:
                add(_SPLIT, e, float(p) ** e * (1 - 2 / p) * self.fd[ie] * self.ft[ie])
            add(_ZERO, 0, self.below_d * self.ft[ie])
            add(_JUMP_TO_W, 0, self.below_t * self.fd[ie])
            for r in range(self.r_lo, e):
                add(_CIRCLE, r, self.mu[self._i(r)] * self.fd[self._i(r)] * self.ft[ie])
                add(_REFLECT, r, self.mu[self._i(r)] * self.ft[self._i(r)] * self.fd[ie])
        wts = np.array(weights)
        total = wts.sum()
        cdf = np.cumsum(wts) / total
        cdf[-1] = 1.0
        out = (np.array(kinds, dtype=np.int8), np.array(radii, dtype=np.int64), cdf, total / norm)
        self._tables[e] = out
        return out

    def flat_tables(self):
        """All tables concatenated; segment 0 is ``w = 0``, segment ``i >= 1`` is
        ``|w| = p^(i - W - L)``, matching ``W - tz(w)`` for window integers."""
        if self._flat is None:
            win = self.win
            segs = [self.table(None)] + [self.table(i - win.W - win.L) for i in range(1, win.W + 1)]
            off = np.cumsum([0] + [len(s[0]) for s in segs]).astype(np.int64)
            self._flat = (off, np.concatenate([s[0] for s in segs]),
                          np.concatenate([s[1] for s in segs]), np.concatenate([s[2] for s in segs]))
        return self._flat


@lru_cache(maxsize=1024)
def bridge_step_law(params: ProcessParams, dt: float, tau: float, win: Window,
                    tol: SeriesTolerance = DEFAULT_TOL) -> BridgeStepLaw:
    return BridgeStepLaw(params, dt, tau, win, tol)


def bridge_step(law: BridgeStepLaw, w: np.ndarray, depth: int, rng: RandomStream, kernels=None):
    """One vectorized bridge step: ``(delta, over)`` for targets ``w`` (window ints)."""
    k = kernels or _backend.kernels
    win = law.win
    n = w.shape[0]
    gen = rng.generator
    u, lead, rest = _draw_block(gen, win.p, win.W, n)
    split = gen.integers(0, max(win.p - 2, 1), size=n, dtype=np.int64)
    off, kind, rad, cdf = law.flat_tables()
    return k.bridge_deltas(w, u, lead, rest, split, off, kind, rad, cdf, win.p, win.L, win.W, depth)


def simulate_bridge(params: ProcessParams, T_bridge: float, k_bridge: int, m_free: int, n: int,
                    win: Window, a: int, target: int, depth: int, rng: RandomStream,
                    kernels=None, tol: SeriesTolerance = DEFAULT_TOL):
    """Paths from 0 pinned at ``target`` after ``k_bridge`` steps of ``T_bridge/k_bridge``,
    then ``m_free`` free steps of the same size.  Returns ``(sup, first_exit, final, pinned)``
    where ``pinned`` is the window value at the pin time."""
    k = kernels or _backend.kernels
    if k_bridge < 1:
        raise ValueError("k_bridge must be >= 1")
    dt = T_bridge / k_bridge
    M = np.int64(win.modulus)
    incr = np.zeros((n, k_bridge + m_free), dtype=np.int64)
    over = np.zeros((n, k_bridge + m_free), dtype=np.uint8)
    pos = np.zeros(n, dtype=np.int64)
    tgt = np.int64(target)
    for j in range(k_bridge):
        w = (tgt - pos) % M
        if j == k_bridge - 1:
            delta = w
        else:
            law = bridge_step_law(params, dt, (k_bridge - j - 1) * dt, win, tol)
            delta, ov = bridge_step(law, w, depth, rng, k)
            over[:, j] = ov
        incr[:, j] = delta
        pos = (pos + delta) % M
    pinned = pos.copy()
    if m_free:
        fi, fo = free_increments(params, dt, (n, m_free), win, depth, rng, k, tol)
        incr[:, k_bridge:] = fi
        over[:, k_bridge:] = fo
    sup, first, final = k.walk(incr, over, np.zeros(n, dtype=np.int64), 0, win.p, win.L, win.W, a)
    return sup, first, final, pinned
