"""Sampling of increments, grid paths and bridge points with ``PAdic`` values.

These are the reference samplers: one draw at a time, exact digit arithmetic.
The vectorized versions used for large Monte Carlo runs live in
:mod:`padic_exit.batch`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .padic import PAdic, PrimeMismatchError, uniform_ball_sample, uniform_circle_sample
from .radial import (
    DEFAULT_TOL,
    ProcessParams,
    SeriesTolerance,
    ball_mass,
    bridge_ball_prob_class,
)
from .rng import RandomStream

DEFAULT_DEPTH = 24
RADIUS_TAIL = 1e-17
BRIDGE_CAPTURE = 1.0 - 1e-12
MAX_BRIDGE_LEVELS = 4096  # below this many levels under B_K a draw is returned as is


@dataclass(frozen=True)
class PathSample:
    params: ProcessParams
    times: tuple
    positions: tuple
    origin: PAdic

    def __post_init__(self):
        if len(self.times) != len(self.positions):
            raise ValueError("times and positions differ in length")
        if not self.times or self.times[0] != 0:
            raise ValueError("times must start at 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if self.positions[0] != self.origin:
            raise ValueError("path must start at its origin")
        if any(x.prime != self.params.p for x in self.positions):
            raise PrimeMismatchError("positions must use the process prime")


@dataclass(frozen=True)
class BridgeSpec:
    T: float
    x: PAdic
    y: PAdic

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("bridge pin time must be positive")
        if self.x.prime != self.y.prime:
            raise PrimeMismatchError("bridge endpoints use different primes")


# -- increments -----------------------------------------------------------------

@lru_cache(maxsize=4096)
def radius_table(params: ProcessParams, t: float, tol: SeriesTolerance = DEFAULT_TOL,
                 tail: float = RADIUS_TAIL):
    """``(r_lo, cdf)`` with ``cdf[i] = P(|X_t| <= p**(r_lo + i))``.

    The range starts at the typical scale ``sigma t p^{-mb} ~ 1`` and grows in
    both directions until each discarded tail is below ``tail``.  The lower
    tail is folded into ``r_lo`` and the upper one into the last entry.
    """
    if not t > 0:
        raise ValueError("time must be positive")
    mode = round(math.log(params.sigma * t) / (params.b * math.log(params.p)))
    hi = mode
    while 1.0 - ball_mass(params, t, hi, tol).value >= tail:
        hi += 1
        if hi - mode > 100000:
            raise RuntimeError("upper radius tail search did not terminate")
    lo = mode
    while ball_mass(params, t, lo - 1, tol).value >= tail:
        lo -= 1
        if mode - lo > 100000:
            raise RuntimeError("lower radius tail search did not terminate")
    cdf = np.array([ball_mass(params, t, r, tol).value for r in range(lo, hi + 1)])
    cdf = np.maximum.accumulate(cdf)
    cdf[-1] = 1.0
    cdf.setflags(write=False)
    return lo, cdf


def _draw_radius(params, t, rng, tol) -> int:
    lo, cdf = radius_table(params, t, tol)
    i = int(np.searchsorted(cdf, rng.generator.random(), side="right"))
    return lo + min(i, len(cdf) - 1)


def sample_increment(params: ProcessParams, t: float, depth: int, rng: RandomStream,
                     tol: SeriesTolerance = DEFAULT_TOL) -> PAdic:
    """One draw of ``X_t`` (started at 0), resolved to ``depth`` significant digits."""
    if not t > 0:
        raise ValueError("time must be positive")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    r = _draw_radius(params, t, rng, tol)
    return uniform_circle_sample(r, PAdic.zero(params.p), depth, rng)


def sample_path(params: ProcessParams, T: float, m_points: int, origin: PAdic,
                depth: int, rng: RandomStream, tol: SeriesTolerance = DEFAULT_TOL) -> PathSample:
    """Path on the grid ``jT/m_points`` built from independent increments."""
    if not T > 0 or m_points < 1:
        raise ValueError("need T > 0 and m_points >= 1")
    if origin.prime != params.p:
        raise PrimeMismatchError("origin must use the process prime")
    dt = T / m_points
    pos = [origin]
    for _ in range(m_points):
        pos.append(pos[-1] + sample_increment(params, dt, depth, rng, tol))
    times = tuple(j * dt for j in range(m_points + 1))
    return PathSample(params, times, tuple(pos), origin)


def sup_norm(path: PathSample, center: PAdic) -> Optional[int]:
    """Largest radius exponent of ``position - center`` over the grid; ``None`` if all are zero."""
    if center.prime != path.params.p:
        raise PrimeMismatchError("center must use the process prime")
    best = None
    for x in path.positions:
        d = x - center
        if d.is_zero:
            continue
        r = -d.valuation
        if best is None or r > best:
            best = r
    return best


def first_exit_index(path: PathSample, center: PAdic, a: int) -> Optional[int]:
    for j, x in enumerate(path.positions):
        d = x - center
        if not d.is_zero and -d.valuation > a:
            return j
    return None


# -- bridge points ----------------------------------------------------------------

def _capture_radius(params, t, t_prime, w_exp, tol) -> int:
    if w_exp is not None:
        k = w_exp
    else:
        k = math.floor(math.log(params.sigma * min(t, t_prime)) / (params.b * math.log(params.p)))
    for _ in range(100000):
        if bridge_ball_prob_class(params, t, t_prime, w_exp, k, None, None, tol) >= BRIDGE_CAPTURE:
            return k
        k += 1
    raise RuntimeError("no ball captures the bridge law")


def bridge_children(params: ProcessParams, t: float, t_prime: float, w: PAdic, w_exp,
                    k: int, in0: bool, inw: bool, c_exp, cw_exp, tol=DEFAULT_TOL):
    """Class data and probabilities of the ``p`` children of ``B_k(c)`` obtained by
    fixing the digit at position ``-k``."""
    p = params.p
    wd = w.digit(-k) if inw else -1
    out = []
    for j in range(p):
        c0 = in0 and j == 0
        cw = inw and j == wd
        ce = c_exp if (not in0 or c0) else k
        cwe = cw_exp if (not inw or cw) else k
        prob = bridge_ball_prob_class(params, t, t_prime, w_exp, k - 1,
                                      None if c0 else ce, None if cw else cwe, tol)
        out.append((c0, cw, ce, cwe, prob))
    return out


def sample_bridge_point(params: ProcessParams, t: float, t_prime: float, w: PAdic, depth: int,
                        rng: RandomStream, tol: SeriesTolerance = DEFAULT_TOL) -> PAdic:
    """Draw ``Z`` with density proportional to ``rho(t, z) rho(t', w - z)``.

    Starts from a ball ``B_K(0)`` holding all but ``1e-12`` of the mass and picks
    one child per level with the exact ball probabilities until ``depth``
    significant digits are known.  Once the current ball contains neither 0 nor
    ``w`` the density is constant on it and the remaining digits are uniform.
    """
    if not (t > 0 and t_prime > 0):
        raise ValueError("times must be positive")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if w.prime != params.p:
        raise PrimeMismatchError("w must use the process prime")
    p = params.p
    gen = rng.generator
    w_exp = w.radius_exponent()
    K = _capture_radius(params, t, t_prime, w_exp, tol)
    k = K
    in0 = inw = True
    c_exp = cw_exp = None
    digits = []
    first = None  # index of the leading nonzero digit
    while first is None or len(digits) - first < depth:
        if len(digits) >= MAX_BRIDGE_LEVELS:
            break
        if not in0 and not inw:
            digits.extend(gen.integers(0, p, size=depth - (len(digits) - first)).tolist())
            break
        kids = bridge_children(params, t, t_prime, w, w_exp, k, in0, inw, c_exp, cw_exp, tol)
        probs = np.array([kid[4] for kid in kids])
        total = probs.sum()
        if not total > 0:
            raise ArithmeticError("bridge ball has zero mass")
        u = gen.random() * total
        j = min(int(np.searchsorted(np.cumsum(probs), u, side="right")), p - 1)
        c0, cw, c_exp, cw_exp, _ = kids[j]
        in0, inw = c0, cw
        if first is None and j:
            first = len(digits)
        digits.append(j)
        k -= 1
    return PAdic.from_digits(p, -K, digits)


def sample_bridge_path(spec: BridgeSpec, params: ProcessParams, m_points: int, depth: int,
                       rng: RandomStream, tol: SeriesTolerance = DEFAULT_TOL) -> PathSample:
    """Bridge from ``spec.x`` at time 0 to ``spec.y`` at ``spec.T`` on a uniform grid.

    Each step draws the next position from its law given the current one and
    the pin; the last step lands on ``spec.y`` exactly.
    """
    if m_points < 1:
        raise ValueError("m_points must be >= 1")
    if spec.x.prime != params.p:
        raise PrimeMismatchError("bridge endpoints must use the process prime")
    dt = spec.T / m_points
    pos = [spec.x]
    for j in range(m_points - 1):
        w = spec.y - pos[-1]
        tau = (m_points - j - 1) * dt
        pos.append(pos[-1] + sample_bridge_point(params, dt, tau, w, depth, rng, tol))
    pos.append(spec.y)
    times = tuple(j * dt for j in range(m_points + 1))
    return PathSample(params, times, tuple(pos), spec.x)


# -- path dump ------------------------------------------------------------------

def write_path_csv(path: PathSample, fh, n_digits: int = 16) -> None:
    """One row per grid point: time, valuation, leading digits (little-endian)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", "valuation", "digits"])
    for t, x in zip(path.times, path.positions):
        if x.is_zero:
            w.writerow([repr(t), "inf", ""])
        else:
            w.writerow([repr(t), x.valuation, "".join(str(d) if d < 10 else f"[{d}]"
                                                      for d in x.digits[:n_digits])])


__all__ = [
    "BridgeSpec", "PathSample", "RandomStream", "radius_table", "sample_increment", "sample_path",
    "sup_norm", "first_exit_index", "sample_bridge_point", "sample_bridge_path", "write_path_csv",
    "uniform_ball_sample",
]
