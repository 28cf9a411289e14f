"""Command-line front end: ``padic-exit <command> [flags]``.

Exit status is 0 when a report passes, 1 when a verification fails and 2 on
usage errors (bad flags or parameter domains).
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import experiments as ex
from . import radial
from .padic import PAdic, parse_padic
from .radial import ProcessParams, SeriesTolerance
from .rng import DEFAULT_SEED
from .sampler import DEFAULT_DEPTH, BridgeSpec


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed() -> int:
    raw = os.environ.get("UD_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"UD_SEED must be an integer, got {raw!r}")


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--p", type=int, required=True, help="prime")
    p.add_argument("--b", type=float, default=1.0, help="exponent b > 0")
    p.add_argument("--sigma", type=float, default=1.0, help="diffusion constant")
    p.add_argument("--tol", type=float, default=radial.DEFAULT_TOL.eps, help="series tolerance")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    flags = {
        "T": dict(type=float, help="time horizon"),
        "t": dict(type=float, help="time"),
        "t_prime": dict(type=float, help="second time"),
        "a": dict(type=int, help="ball radius exponent (radius p^a)"),
        "r": dict(type=int, default=None, help="radius exponent of the point (omit for 0)"),
        "m": dict(type=int, default=ex.DEFAULT_M, help="grid points"),
        "n": dict(type=int, help="Monte Carlo samples"),
        "seed": dict(type=int, default=None, help="seed (default: $UD_SEED or a fixed value)"),
        "depth": dict(type=int, default=DEFAULT_DEPTH, help="digit resolution of samples"),
        "workers": dict(type=int, default=1, help="worker threads (results do not depend on it)"),
        "x": dict(type=str, default=None, help="start point, format p:v:digits"),
        "y": dict(type=str, default=None, help="pinned endpoint, format p:v:digits"),
    }
    for name in names:
        spec = dict(flags[name])
        p.add_argument("--" + name.replace("_", "-"), dest=name, **spec)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="padic-exit", description="p-adic brownian motion: exit probabilities and checks")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _common(sub.add_parser("alpha", help="exit-rate constant"))
    _common(sub.add_parser("density", help="heat kernel on a circle"), "t", "r")
    _common(sub.add_parser("cdf", help="P(|X_t| <= p^a)"), "t", "a")
    _common(sub.add_parser("exit-exact", help="closed-form stay probability"), "T", "a")
    _common(sub.add_parser("grid-sup", help="stay probability on an m-point grid"), "T", "a", "m")
    _common(sub.add_parser("exit-mc", help="Monte Carlo stay probability"),
            "T", "a", "m", "n", "seed", "depth", "workers", "x")
    bmc = sub.add_parser("bridge-mc", help="Monte Carlo stay probability of a bridge")
    _common(bmc, "T", "t", "a", "m", "n", "seed", "depth", "workers", "x", "y")
    conv = sub.add_parser("convergence", help="grid value against the closed form")
    _common(conv, "T", "a")
    conv.add_argument("--m-list", default="64,128,256,512,1024")

    ver = sub.add_parser("verify", help="verification reports")
    vsub = ver.add_subparsers(dest="check", required=True, parser_class=_Parser)
    _common(vsub.add_parser("prop3", help="ball convolution lower bounds"))
    _common(vsub.add_parser("semigroup", help="convolution over a large ball"))
    p4 = vsub.add_parser("prop4", help="nested inequality for two and three steps")
    _common(p4, "a")
    cond = vsub.add_parser("conditionals", help="conditioning raises both probabilities")
    _common(cond, "t", "a", "r", "m", "n", "seed", "depth", "workers")
    cond.add_argument("--n-cond", type=int, default=2, help="target ball B_{-n}(y)")
    _common(vsub.add_parser("thm6", help="bridge exit bound"),
            "T", "a", "m", "n", "seed", "depth", "workers", "x")
    tr = vsub.add_parser("translation", help="center invariance of exit probability")
    _common(tr, "T", "a", "m", "n", "seed", "depth", "workers", "x")
    tr.add_argument("--x-prime", default=None, help="second center, format p:v:digits")
    return top


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required flag(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _point(text: Optional[str], p: int) -> PAdic:
    if text is None:
        return PAdic.zero(p)
    try:
        x = parse_padic(text)
    except ValueError as e:
        raise UsageError(f"bad p-adic literal {text!r}: {e}")
    if x.prime != p:
        raise UsageError(f"literal {text!r} is not over p = {p}")
    return x


def _validate(args) -> None:
    for name in ("T", "t", "t_prime"):
        v = getattr(args, name, None)
        if v is not None and not v > 0 and not (name == "T" and v == 0):
            raise UsageError(f"--{name} must be positive")
    if getattr(args, "n", None) is not None and args.n < 0:
        raise UsageError("--n must be >= 0")
    if getattr(args, "m", None) is not None and args.m < 1:
        raise UsageError("--m must be >= 1")
    if getattr(args, "depth", None) is not None and args.depth < 1:
        raise UsageError("--depth must be >= 1")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")


def _dispatch(args):
    """Returns ``(record, passed)``."""
    try:
        params = ProcessParams(args.p, args.b, args.sigma)
        tol = SeriesTolerance(eps=args.tol)
    except ValueError as e:
        raise UsageError(str(e))
    _validate(args)
    seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
    cmd = args.command
    pd = params.as_dict()

    if cmd == "alpha":
        return {"op": "alpha", "params": pd, "config": {}, "value": radial.alpha(params), "pass": True}, True
    if cmd == "density":
        _need(args, "t")
        rv = radial.density_radial(params, args.t, args.r, tol)
        return {"op": "density", "params": pd, "config": {"t": args.t, "r": args.r},
                "value": rv.value, "attained_tolerance": rv.attained_tolerance, "pass": True}, True
    if cmd == "cdf":
        _need(args, "t", "a")
        rv = radial.ball_mass(params, args.t, args.a, tol)
        return {"op": "cdf", "params": pd, "config": {"t": args.t, "a": args.a},
                "value": rv.value, "attained_tolerance": rv.attained_tolerance, "pass": True}, True
    if cmd == "exit-exact":
        _need(args, "T", "a")
        return {"op": "exit-exact", "params": pd, "config": {"T": args.T, "a": args.a},
                "value": radial.exact_exit_prob(params, args.T, args.a), "pass": True}, True
    if cmd == "grid-sup":
        _need(args, "T", "a")
        return {"op": "grid-sup", "params": pd, "config": {"T": args.T, "a": args.a, "m": args.m},
                "value": radial.grid_sup_prob(params, args.T, args.a, args.m, tol), "pass": True}, True
    if cmd == "convergence":
        _need(args, "T", "a")
        try:
            m_list = [int(s) for s in args.m_list.split(",") if s.strip()]
        except ValueError:
            raise UsageError("--m-list must be comma separated integers")
        rows = ex.convergence_table(params, args.T, args.a, m_list, tol)
        return {"op": "convergence", "params": pd, "config": {"T": args.T, "a": args.a},
                "rows": rows, "pass": True}, True
    if cmd == "exit-mc":
        _need(args, "T", "a", "n")
        x = _point(args.x, params.p)
        est = ex.mc_exit_prob(params, args.T, args.a, args.m, args.n, seed, origin=x, depth=args.depth,
                              workers=args.workers)
        target = radial.grid_sup_prob(params, args.T, args.a, args.m, tol)
        passed = abs(est.estimate - target) <= ex.MC_SIGMAS * max(est.std_error, 1.0 / est.n)
        cfg = {"T": args.T, "a": args.a, "m_points": args.m, "x": args.x, "depth": args.depth,
               "grid_target": target, "closed_form": radial.exact_exit_prob(params, args.T, args.a)}
        return ex.estimate_record("exit-mc", params, cfg, est, passed), passed
    if cmd == "bridge-mc":
        _need(args, "T", "t", "a", "n")
        x = _point(args.x, params.p)
        y = _point(args.y, params.p) if args.y is not None else x
        est = ex.mc_bridge_exit(params, BridgeSpec(args.t, x, y), args.T, args.a, args.m, args.n, seed,
                                args.depth, args.workers)
        closed = radial.exact_exit_prob(params, args.T, args.a)
        passed = est.estimate >= closed - ex.INEQ_SIGMAS * est.std_error
        cfg = {"T": args.T, "t": args.t, "a": args.a, "m_points": args.m, "x": args.x, "y": args.y,
               "depth": args.depth, "closed_form": closed}
        return ex.estimate_record("bridge-mc", params, cfg, est, passed), passed
    if cmd == "verify":
        return _verify(args, params, tol, seed)
    raise UsageError(f"unknown command {cmd!r}")


def _verify(args, params, tol, seed):
    chk = args.check
    if chk == "prop3":
        rep, cfg = ex.verify_prop3(params, tol=tol), {"grid": "default"}
    elif chk == "semigroup":
        rep, cfg = ex.verify_semigroup(params, tol=tol), {"grid": "default"}
    elif chk == "prop4":
        a = 0 if args.a is None else args.a
        rep, cfg = ex.verify_prop4_grid(params, a, tol=tol), {"a": a}
    elif chk == "conditionals":
        _need(args, "t", "a", "n")
        rep = ex.verify_conditional_props(params, args.t, args.a, args.r, args.n_cond, args.n, seed,
                                          args.m, args.depth, args.workers)
        cfg = {"t": args.t, "a": args.a, "y_exp": args.r, "n_cond": args.n_cond, "m_points": args.m}
    elif chk == "thm6":
        _need(args, "T", "a", "n")
        x = _point(args.x, params.p)
        rep = ex.verify_thm6(params, args.T, args.a, x, args.m, args.n, seed, depth=args.depth,
                             workers=args.workers)
        cfg = {"T": args.T, "a": args.a, "x": args.x, "m_points": args.m}
    elif chk == "translation":
        _need(args, "T", "a", "n")
        x = _point(args.x, params.p)
        xp = _point(args.x_prime, params.p) if args.x_prime is not None else None
        rep = ex.mc_translation_check(params, args.T, args.a, x, args.m, args.n, seed, xp, args.depth,
                                      args.workers)
        cfg = {"T": args.T, "a": args.a, "x": args.x, "x_prime": args.x_prime, "m_points": args.m}
    else:
        raise UsageError(f"unknown check {chk!r}")
    return ex.report_record(rep, params, cfg), rep.all_pass


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        record, passed = _dispatch(args)
        text = ex.format_record(record, args.format)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"padic-exit: error: {e}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
