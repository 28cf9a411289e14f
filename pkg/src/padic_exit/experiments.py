"""Monte Carlo estimators and verification reports.

Deterministic checks (ball convolutions, nested decompositions) compare series
values with a margin of ``10 * eps``.  Monte Carlo checks count events over
paths simulated in fixed chunks; chunk ``i`` always draws from stream ``i`` of
the seed, so estimates do not depend on how many workers ran the chunks.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend
from .batch import Window, simulate_bridge, simulate_free
from .padic import PAdic, PrimeMismatchError
from .radial import (
    DEFAULT_TOL,
    BallConvolution,
    HeatKernel,
    ProcessParams,
    RadialFunction,
    SeriesTolerance,
    ball_convolution,
    ball_mass,
    density_radial,
    exact_exit_prob,
    grid_sup_prob,
)
from .rng import DEFAULT_SEED, RandomStream
from .sampler import BridgeSpec, DEFAULT_DEPTH

CHUNK = 8192
Z95 = 1.96
MC_SIGMAS = 4.0
INEQ_SIGMAS = 3.0
DEFAULT_M = 64


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    n: int
    std_error: float
    ci95: tuple
    seed: int
    wall_time_s: float = field(default=0.0, compare=False)
    hits: int = 0

    @classmethod
    def from_counts(cls, hits: int, n: int, seed: int, wall_time_s: float = 0.0) -> "McEstimate":
        est = hits / n
        se = math.sqrt(est * (1.0 - est) / n)
        return cls(est, n, se, (est - Z95 * se, est + Z95 * se), seed, wall_time_s, hits)


@dataclass(frozen=True)
class InequalityCase:
    config: dict
    lhs: float
    rhs: float
    margin: float
    passed: bool
    std_error: Optional[float] = None


@dataclass(frozen=True)
class InequalityReport:
    op: str
    cases: tuple
    n: Optional[int] = None
    seed: Optional[int] = None

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.cases)


# -- chunked Monte Carlo ----------------------------------------------------------

def _run_chunks(fn: Callable[[int, RandomStream], np.ndarray], n: int, seed: int,
                stream_base: int = 0, workers: int = 1) -> np.ndarray:
    """Sum of ``fn(size, stream)`` over fixed chunks of ``n``; order-independent of ``workers``."""
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    streams = [RandomStream(seed, stream_base + i) for i in range(len(sizes))]
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, sizes, streams))
    else:
        parts = [fn(s, r) for s, r in zip(sizes, streams)]
    return np.sum(parts, axis=0)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError("sample count must be >= 1")


def mc_exit_prob(params: ProcessParams, T: float, a: int, m_points: int = DEFAULT_M, n: int = 200_000,
                 seed: int = DEFAULT_SEED, origin: Optional[PAdic] = None, center: Optional[PAdic] = None,
                 depth: int = DEFAULT_DEPTH, workers: int = 1, stream_base: int = 0,
                 kernels=None, tol: SeriesTolerance = DEFAULT_TOL) -> McEstimate:
    """Fraction of paths from ``origin`` whose grid positions all lie in ``B_a(center)``."""
    _check_n(n)
    if T < 0 or m_points < 1:
        raise ValueError("need T >= 0 and m_points >= 1")
    p = params.p
    origin = origin if origin is not None else PAdic.zero(p)
    center = center if center is not None else origin
    if origin.prime != p or center.prime != p:
        raise PrimeMismatchError("origin and center must use the process prime")
    t0 = time.perf_counter()
    rel = origin - center
    if not rel.is_zero and -rel.valuation > a:
        return McEstimate.from_counts(0, n, seed, time.perf_counter() - t0)
    if T == 0:
        return McEstimate.from_counts(n, n, seed, time.perf_counter() - t0)
    win = Window.for_level(p, a)
    start = win.encode(rel)

    def chunk(size, rng):
        sup, _, _ = simulate_free(params, T, m_points, size, win, a, start, 0, depth, rng, kernels, tol)
        return np.array([(sup <= a).sum()])

    hits = int(_run_chunks(chunk, n, seed, stream_base, workers)[0])
    return McEstimate.from_counts(hits, n, seed, time.perf_counter() - t0)


def _exit_case(params, T, a, m_points, est: McEstimate, config: dict) -> InequalityCase:
    target = grid_sup_prob(params, T, a, m_points)
    closed = exact_exit_prob(params, T, a)
    se = max(est.std_error, 1.0 / est.n)
    cfg = dict(config, grid_target=target, closed_form=closed,
               z_closed_form=(est.estimate - closed) / se)
    diff = est.estimate - target
    return InequalityCase(cfg, est.estimate, target, diff, abs(diff) <= MC_SIGMAS * se, est.std_error)


def verify_exit_mc(params: ProcessParams, T: float, a: int, m_points: int = DEFAULT_M, n: int = 200_000,
                   seed: int = DEFAULT_SEED, depth: int = DEFAULT_DEPTH, workers: int = 1,
                   m_fine: int = 1024, rel_tol: float = 0.005) -> InequalityReport:
    """Closed-form exit probability check: MC against the exact grid value, and the
    fine-grid value against the closed form."""
    est = mc_exit_prob(params, T, a, m_points, n, seed, depth=depth, workers=workers)
    mc = _exit_case(params, T, a, m_points, est, {"check": "mc_vs_grid", "m_points": m_points})
    closed = exact_exit_prob(params, T, a)
    g_fine = grid_sup_prob(params, T, a, m_fine)
    g_half = grid_sup_prob(params, T, a, m_fine // 2)
    rel = abs(g_fine - closed) / closed
    fine = InequalityCase({"check": "grid_vs_closed_form", "m": m_fine, "rel_tol": rel_tol},
                          g_fine, closed, rel, rel <= rel_tol)
    e1, e0 = abs(g_fine - closed), abs(g_half - closed)
    halving = InequalityCase({"check": "error_halving", "m": m_fine}, e1, 2.0 * e0, 2.0 * e0 - e1, e1 <= 2.0 * e0)
    return InequalityReport("verify exit", (mc, fine, halving), n, seed)


def mc_translation_check(params: ProcessParams, T: float, a: int, x: PAdic, m_points: int = DEFAULT_M,
                         n: int = 200_000, seed: int = DEFAULT_SEED, x_prime: Optional[PAdic] = None,
                         depth: int = DEFAULT_DEPTH, workers: int = 1) -> InequalityReport:
    """Exit probability of paths started at ``x``, measured about ``x`` and about
    another center ``x'`` of the same ball (default ``x + p^-a``, on its boundary)."""
    _check_n(n)
    p = params.p
    if x_prime is None:
        x_prime = x + PAdic.from_digits(p, -a, [1])
    d = x_prime - x
    if not d.is_zero and -d.valuation > a:
        raise ValueError("x' must lie in B_a(x)")
    cases = []
    for i, c in enumerate((x, x_prime)):
        est = mc_exit_prob(params, T, a, m_points, n, seed, origin=x, center=c, depth=depth,
                           workers=workers, stream_base=i << 32)
        cases.append(_exit_case(params, T, a, m_points, est,
                                {"center": "x" if i == 0 else "x_prime", "m_points": m_points}))
    return InequalityReport("verify translation", tuple(cases), n, seed)


def mc_bridge_exit(params: ProcessParams, spec: BridgeSpec, T_total: float, a: int,
                   m_points: int = DEFAULT_M, n: int = 100_000, seed: int = DEFAULT_SEED,
                   depth: int = DEFAULT_DEPTH, workers: int = 1, stream_base: int = 0,
                   kernels=None, tol: SeriesTolerance = DEFAULT_TOL) -> McEstimate:
    """Fraction of paths staying in ``B_a(x)`` on the grid ``j T_total / m_points``,
    where the path is a bridge from ``x`` to ``y`` on ``[0, spec.T]`` and free afterwards."""
    _check_n(n)
    if spec.x.prime != params.p:
        raise PrimeMismatchError("bridge endpoints must use the process prime")
    if spec.T > T_total:
        raise ValueError("bridge pin time exceeds the horizon")
    d = spec.y - spec.x
    if not d.is_zero and -d.valuation > a:
        raise ValueError("precondition breach: y - x lies outside B_a")
    dt = T_total / m_points
    k_bridge = round(spec.T / dt)
    if k_bridge < 1 or abs(k_bridge * dt - spec.T) > 1e-9 * T_total:
        raise ValueError("bridge pin time must be a grid time")
    t0 = time.perf_counter()
    win = Window.for_level(params.p, a)
    target = win.encode(d)

    def chunk(size, rng):
        sup, _, _, pinned = simulate_bridge(params, spec.T, k_bridge, m_points - k_bridge, size, win, a,
                                            target, depth, rng, kernels, tol)
        if not (pinned == target).all():
            raise AssertionError("bridge path missed its pin")
        return np.array([(sup <= a).sum()])

    hits = int(_run_chunks(chunk, n, seed, stream_base, workers)[0])
    return McEstimate.from_counts(hits, n, seed, time.perf_counter() - t0)


def verify_thm6(params: ProcessParams, T: float, a: int, x: Optional[PAdic] = None,
                m_points: int = DEFAULT_M, n: int = 100_000, seed: int = DEFAULT_SEED,
                fractions: Sequence[float] = (0.25, 0.5, 1.0), depth: int = DEFAULT_DEPTH,
                workers: int = 1) -> InequalityReport:
    """Bridge exit probabilities against the free closed form for ``y = x`` and
    ``y`` on the boundary circle of ``B_a(x)``, for each pin time ``f * T``."""
    p = params.p
    x = x if x is not None else PAdic.zero(p)
    ys = (("x", x), ("boundary", x + PAdic.from_digits(p, -a, [1])))
    closed = exact_exit_prob(params, T, a)
    cases = []
    i = 0
    for f in fractions:
        for label, y in ys:
            spec = BridgeSpec(f * T, x, y)
            est = mc_bridge_exit(params, spec, T, a, m_points, n, seed, depth, workers, stream_base=i << 32)
            margin = est.estimate - closed
            cases.append(InequalityCase({"t_over_T": f, "y": label, "m_points": m_points},
                                        est.estimate, closed, margin,
                                        margin >= -INEQ_SIGMAS * est.std_error, est.std_error))
            i += 1
    return InequalityReport("verify thm6", tuple(cases), n, seed)


# -- deterministic inequality checks ----------------------------------------------

DEFAULT_PROP3_GRID = tuple(
    (t, tp, z, a)
    for t in (0.1, 1.0, 3.0)
    for tp in (0.05, 0.5, 2.0)
    for a in (-1, 0, 2)
    for z in (None, a - 2, a)
)

DEFAULT_SEMIGROUP_GRID = tuple(
    (t, tp, z) for t in (0.1, 1.0, 3.0) for tp in (0.05, 0.5, 2.0) for z in (-2, 0, 3)
)


def verify_prop3(params: ProcessParams, grid: Optional[Sequence] = None,
                 tol: SeriesTolerance = DEFAULT_TOL) -> InequalityReport:
    """Ball convolution against ``rho(t+t', z) B(t, a)``; with ``|z| <= p^a`` also
    against the symmetric bound ``rho(t+t', z) B(t', a)``."""
    grid = DEFAULT_PROP3_GRID if grid is None else tuple(grid)
    if not grid:
        raise ValueError("empty grid")
    thresh = 10.0 * tol.eps
    cases = []
    for t, tp, z, a in grid:
        lhs = ball_convolution(params, t, tp, z, a, tol)
        dens = density_radial(params, t + tp, z, tol).value
        rhs = dens * ball_mass(params, t, a, tol).value
        cfg = {"t": t, "t_prime": tp, "z_exp": z, "a": a}
        cases.append(InequalityCase(dict(cfg, bound="B(t,a)"), lhs, rhs, lhs - rhs, lhs - rhs > thresh))
        if z is None or z <= a:
            rhs2 = dens * ball_mass(params, tp, a, tol).value
            cases.append(InequalityCase(dict(cfg, bound="B(t',a)"), lhs, rhs2, lhs - rhs2, lhs - rhs2 > thresh))
    return InequalityReport("verify prop3", tuple(cases))


def verify_semigroup(params: ProcessParams, grid: Optional[Sequence] = None, offset: int = 30,
                     atol: float = 1e-8, tol: SeriesTolerance = DEFAULT_TOL) -> InequalityReport:
    """Convolution over ``B_{z+offset}`` against ``rho(t+t', z)``."""
    grid = DEFAULT_SEMIGROUP_GRID if grid is None else tuple(grid)
    if not grid:
        raise ValueError("empty grid")
    cases = []
    for t, tp, z in grid:
        lhs = ball_convolution(params, t, tp, z, z + offset, tol)
        rhs = density_radial(params, t + tp, z, tol).value
        err = abs(lhs - rhs)
        cases.append(InequalityCase({"t": t, "t_prime": tp, "z_exp": z, "a": z + offset},
                                    lhs, rhs, err, err <= atol))
    return InequalityReport("verify semigroup", tuple(cases))


def _target_ball_integral(fn: RadialFunction, p: int, y_exp: Optional[int], n_cond: int) -> float:
    """Integral of a radial function over ``B_{-n}(y)`` with ``|y| = p^y_exp``."""
    if y_exp is None or y_exp <= -n_cond:
        return fn.ball_integral(-n_cond)
    return float(p) ** (-n_cond) * fn.value(y_exp)


def _check_target_ball(a: int, y_exp: Optional[int], n_cond: int) -> None:
    if (y_exp is not None and y_exp > a) or -n_cond > a:
        raise ValueError("B_{-n}(y) is not contained in B_a")


def prop4_sides(params: ProcessParams, t_list: Sequence[float], a: int, y_exp: Optional[int],
                n_cond: int, tol: SeriesTolerance = DEFAULT_TOL):
    """Both sides of the nested inequality for ``m = len(t_list) - 1`` intermediate
    times restricted to ``B_a`` and a final point in ``B_{-n}(y)``."""
    _check_target_ball(a, y_exp, n_cond)
    m = len(t_list) - 1
    if m not in (1, 2):
        raise ValueError("exact check supports 2 or 3 time steps")
    if any(not t > 0 for t in t_list):
        raise ValueError("times must be positive")
    fn: RadialFunction = HeatKernel(params, t_list[0], tol)
    for t in t_list[1:]:
        fn = BallConvolution(fn, HeatKernel(params, t, tol), a)
    lhs = _target_ball_integral(fn, params.p, y_exp, n_cond)
    total = HeatKernel(params, float(sum(t_list)), tol)
    rhs = _target_ball_integral(total, params.p, y_exp, n_cond)
    for t in t_list[:-1]:
        rhs *= ball_mass(params, t, a, tol).value
    return lhs, rhs


DEFAULT_PROP4_CASES = tuple(
    (tl, y, n)
    for tl in ((0.5, 1.0), (1.0, 0.25), (0.3, 0.6, 1.2), (1.0, 1.0, 1.0))
    for y, n in ((None, 2), (-1, 3), (0, 1))
)


def verify_prop4_small_m(params: ProcessParams, t_list: Sequence[float], a: int, y_exp: Optional[int],
                         n_cond: int, tol: SeriesTolerance = DEFAULT_TOL) -> InequalityReport:
    lhs, rhs = prop4_sides(params, t_list, a, y_exp, n_cond, tol)
    cfg = {"t_list": list(t_list), "m": len(t_list) - 1, "a": a, "y_exp": y_exp, "n_cond": n_cond}
    return InequalityReport("verify prop4", (InequalityCase(cfg, lhs, rhs, lhs - rhs,
                                                            lhs - rhs > 10.0 * tol.eps),))


def verify_prop4_grid(params: ProcessParams, a: int = 0, cases=DEFAULT_PROP4_CASES,
                      tol: SeriesTolerance = DEFAULT_TOL) -> InequalityReport:
    out = []
    for tl, y, n in cases:
        out.extend(verify_prop4_small_m(params, tl, a, y, n, tol).cases)
    return InequalityReport("verify prop4", tuple(out))


def _ratio_se(k: int, n: int) -> float:
    """Agresti-Coull standard error: stays honest for small or extreme counts."""
    nt = n + Z95 ** 2
    q = (k + Z95 ** 2 / 2) / nt
    return math.sqrt(q * (1 - q) / nt)


def verify_conditional_props(params: ProcessParams, t: float, a: int, y_exp: Optional[int], n_cond: int,
                             n_samples: int = 1_000_000, seed: int = DEFAULT_SEED,
                             m_points: int = DEFAULT_M, depth: int = DEFAULT_DEPTH,
                             workers: int = 1) -> InequalityReport:
    """Conditioning on staying in ``B_a`` raises the chance of ending in ``B_{-n}(y)``,
    and conditioning on the endpoint raises the chance of staying in ``B_a``.

    Both conditionals are count ratios over one sample of grid paths; the
    unconditional sides are exact.
    """
    _check_n(n_samples)
    _check_target_ball(a, y_exp, n_cond)
    p = params.p
    win = Window.for_level(p, a)
    if -n_cond < win.r_min:
        raise ValueError("target ball is finer than the digit window")
    y = PAdic.zero(p) if y_exp is None else PAdic.from_digits(p, -y_exp, [1])
    y_enc = np.int64(win.encode(y))
    M = np.int64(win.modulus)
    k = _backend.kernels

    def chunk(size, rng):
        sup, _, final = simulate_free(params, t, m_points, size, win, a, 0, 0, depth, rng)
        in_s = sup <= a
        in_a = k.radius_exp((final - y_enc) % M, p, win.L, win.W) <= -n_cond
        return np.array([in_s.sum(), in_a.sum(), (in_s & in_a).sum()])

    n_s, n_a, n_sa = (int(v) for v in _run_chunks(chunk, n_samples, seed, 0, workers))
    if n_s == 0 or n_a == 0:
        raise ValueError("a conditioning event never occurred; increase n_samples")
    p_a = _target_ball_integral(HeatKernel(params, t), p, y_exp, n_cond)
    p_s = grid_sup_prob(params, t, a, m_points)
    base = {"t": t, "a": a, "y_exp": y_exp, "n_cond": n_cond, "m_points": m_points,
            "count_S": n_s, "count_A": n_a, "count_AS": n_sa}
    cases = []
    for label, k_, n_, rhs in (("P(A|S) > P(A)", n_sa, n_s, p_a), ("P(S|A) > P(S)", n_sa, n_a, p_s)):
        est = k_ / n_
        se = _ratio_se(k_, n_)
        lo, hi = est - Z95 * se, est + Z95 * se
        margin = est - rhs
        cases.append(InequalityCase(dict(base, claim=label, ci95=[lo, hi]), est, rhs, margin,
                                    margin >= INEQ_SIGMAS * se, se))
    return InequalityReport("verify conditionals", tuple(cases), n_samples, seed)


def convergence_table(params: ProcessParams, T: float, a: int, m_list: Sequence[int],
                      tol: SeriesTolerance = DEFAULT_TOL) -> list:
    """Rows ``{m, grid, error, ratio}`` with ``ratio = error(prev)/error(m)``."""
    if not m_list:
        raise ValueError("empty m_list")
    if any(m < 1 for m in m_list) or any(b <= a_ for a_, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be increasing positive integers")
    exact = exact_exit_prob(params, T, a)
    rows, prev = [], None
    for m in m_list:
        g = grid_sup_prob(params, T, a, m, tol)
        err = abs(g - exact)
        ratio = prev / err if prev is not None and err > 0 else None
        rows.append({"m": m, "grid": g, "error": err, "ratio": ratio})
        prev = err
    return rows


# -- report output ------------------------------------------------------------------

def estimate_record(op: str, params: ProcessParams, config: dict, est: McEstimate,
                    passed: Optional[bool] = None) -> dict:
    return {"op": op, "params": params.as_dict(), "config": config, "estimate": est.estimate,
            "std_error": est.std_error, "ci95": list(est.ci95), "n": est.n, "seed": est.seed,
            "pass": True if passed is None else bool(passed)}


def report_record(report: InequalityReport, params: ProcessParams, config: dict) -> dict:
    cases = [{"config": c.config, "lhs": c.lhs, "rhs": c.rhs, "margin": c.margin,
              "std_error": c.std_error, "pass": c.passed} for c in report.cases]
    return {"op": report.op, "params": params.as_dict(), "config": config, "cases": cases,
            "n": report.n, "seed": report.seed, "pass": report.all_pass}


def _flat(prefix: str, d: dict) -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flat(key + ".", v))
        elif isinstance(v, (list, tuple)):
            out[key] = " ".join(repr(x) for x in v)
        else:
            out[key] = "" if v is None else v
    return out


def format_record(record: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(record, indent=2, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    head = {k: v for k, v in record.items() if k not in ("cases", "rows")}
    rows = record.get("cases") or record.get("rows") or [{}]
    flat = [dict(_flat("", head), **_flat("case.", r)) for r in rows]
    cols = list(dict.fromkeys(k for r in flat for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()
