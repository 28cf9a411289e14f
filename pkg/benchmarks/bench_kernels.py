"""Compiled kernels against the numpy fallback on the Monte Carlo hot paths.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 3]

Both backends consume identical random blocks, so the script also checks that
their outputs agree bit for bit.
"""
import argparse
import time

import numpy as np

from padic_exit import _backend
from padic_exit.batch import Window, bridge_step, bridge_step_law, free_increments
from padic_exit.radial import ProcessParams
from padic_exit.rng import RandomStream


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="paths per case")
    ap.add_argument("--m", type=int, default=64, help="grid points")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        compiled = _backend.get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    numpy_k = _backend.get_kernels("python")

    print(f"{'kernel':<34}{'numpy s':>10}{'compiled s':>12}{'speedup':>9}  equal")
    for p, b, s, a in [(2, 1.0, 1.0, 0), (3, 2.0, 0.5, 1), (5, 1.0, 2.0, -1)]:
        params = ProcessParams(p, b, s)
        win = Window.for_level(p, a)
        dt = 1.0 / args.m

        incr, over = free_increments(params, dt, (args.n, args.m), win, 24, RandomStream(1))
        start = np.zeros(args.n, dtype=np.int64)
        cases = {
            f"free_increments p={p}": lambda k: free_increments(params, dt, (args.n, args.m), win, 24,
                                                                RandomStream(1), k),
            f"walk p={p}": lambda k: k.walk(incr, over, start, 0, p, win.L, win.W, a),
        }
        law = bridge_step_law(params, dt, 0.5, win)
        law.flat_tables()
        w = incr[:, 0].copy()
        cases[f"bridge step p={p}"] = lambda k: bridge_step(law, w, 24, RandomStream(2), k)

        for name, fn in cases.items():
            t_np, out_np = _best(lambda: fn(numpy_k), args.repeat)
            t_c, out_c = _best(lambda: fn(compiled), args.repeat)
            print(f"{name:<34}{t_np:>10.3f}{t_c:>12.3f}{t_np / t_c:>8.1f}x  {_same(out_np, out_c)}")


if __name__ == "__main__":
    main()
