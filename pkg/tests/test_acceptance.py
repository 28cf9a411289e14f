"""One test per acceptance criterion, at the stated sample sizes and tolerances.

Each test prints a single ``ACCEPTANCE <id> PASS|FAIL`` line (also collected
into the terminal summary) before asserting.
"""
import io
import itertools
import math
import time

import pytest

from conftest import ACCEPTANCE_LINES
from padic_exit import experiments as ex
from padic_exit.cli import run
from padic_exit.padic import PAdic
from padic_exit.radial import (
    ProcessParams,
    ball_mass,
    ball_mass_lemma1,
    bridge_ball_prob,
    density_radial,
    exact_exit_prob,
    grid_sup_prob,
)
from padic_exit.rng import RandomStream
from padic_exit.sampler import sample_bridge_point, sample_increment
from test_sampler import radius_chisquare


def report(cid, passed, detail):
    line = f"ACCEPTANCE {cid} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


EXIT_CONFIGS = [(2, 1.0, 1.0, 1.0, 0), (3, 2.0, 0.5, 2.0, 1), (5, 1.0, 2.0, 1.0, -1)]


@pytest.mark.parametrize("cfg", EXIT_CONFIGS, ids=["p2", "p3", "p5"])
def test_criterion_1_closed_form_vs_mc(cfg):
    p, b, s, T, a = cfg
    params = ProcessParams(p, b, s)
    t0 = time.perf_counter()
    est = ex.mc_exit_prob(params, T, a, 64, 200_000, seed=20240917)
    grid = grid_sup_prob(params, T, a, 64)
    closed = exact_exit_prob(params, T, a)
    fine = grid_sup_prob(params, T, a, 2 ** 10)
    elapsed = time.perf_counter() - t0
    z = abs(est.estimate - grid) / est.std_error
    rel = abs(fine - closed) / closed
    ok_ref = cfg != EXIT_CONFIGS[0] or abs(closed - math.exp(-2 / 3)) < 1e-12
    passed = z <= 4 and rel <= 0.005 and elapsed <= 60 and ok_ref
    report(f"1[{cfg}]", passed,
           f"mc={est.estimate:.5f} grid64={grid:.5f} |z|={z:.2f} (<=4); "
           f"fine-grid rel err={rel:.4%} (<=0.5%); {elapsed:.1f}s (<=60s)")


def test_criterion_2_series_oracles():
    pbs = itertools.product([2, 3, 5, 7, 13], [0.5, 2.0], [0.5, 2.0])
    ta = [(0.01, -2), (0.3, 0), (1.0, 3), (10.0, 1), (100.0, 5)]
    grid = [(p, b, s, t, a) for (p, b, s), (t, a) in itertools.product(pbs, ta)]
    assert len(grid) == 100
    worst = max(abs(ball_mass(ProcessParams(p, b, s), t, a).value
                    - ball_mass_lemma1(ProcessParams(p, b, s), t, a).value) for p, b, s, t, a in grid)
    norm_err = 0.0
    for p, b, s in [(2, 1.0, 1.0), (3, 2.0, 0.5), (5, 1.0, 2.0), (7, 0.5, 1.0)]:
        params = ProcessParams(p, b, s)
        # circle masses from the kernel values, so the sum does not telescope
        tot = ball_mass(params, 1.0, -81).value + sum(
            density_radial(params, 1.0, r).value * float(p) ** r * (1 - 1 / p) for r in range(-80, 150))
        norm_err = max(norm_err, abs(tot - 1.0))
    report(2, worst <= 1e-12 and norm_err <= 1e-10,
           f"max |ball_mass - lemma1| = {worst:.2e} (<=1e-12) on 100 points; "
           f"max normalization error {norm_err:.2e} (<=1e-10)")


def test_criterion_3_semigroup():
    worst = 0.0
    count = 0
    for params in (ProcessParams(2, 1.0, 1.0), ProcessParams(3, 2.0, 0.5), ProcessParams(5, 1.0, 2.0)):
        rep = ex.verify_semigroup(params)
        count = len(rep.cases)
        worst = max(worst, max(c.margin for c in rep.cases))
    report(3, count == 27 and worst <= 1e-8, f"max error {worst:.2e} (<=1e-8) on 27-point grids")


def test_criterion_4_deterministic_inequalities():
    eps = 1e-14
    min_margin = math.inf
    all_ok = True
    for params in (ProcessParams(2, 1.0, 1.0), ProcessParams(3, 2.0, 0.5), ProcessParams(5, 1.0, 2.0)):
        rep = ex.verify_prop3(params)
        base = {(c.config["t"], c.config["t_prime"], c.config["z_exp"], c.config["a"]) for c in rep.cases}
        all_ok &= len(base) == 81 and rep.all_pass
        min_margin = min(min_margin, min(c.margin for c in rep.cases))
        p4 = ex.verify_prop4_grid(params)
        all_ok &= p4.all_pass and {c.config["m"] for c in p4.cases} == {1, 2}
    report(4, all_ok and min_margin > 10 * eps,
           f"81-point grid: min margin {min_margin:.2e} (>10 eps); nested check at m=1,2 strict")


@pytest.mark.parametrize("cfg", [(2, 1.0, 1.0, 1.0, 0), (3, 2.0, 0.5, 2.0, 1)], ids=["p2", "p3"])
def test_criterion_5_bridge_exit(cfg):
    p, b, s, T, a = cfg
    rep = ex.verify_thm6(ProcessParams(p, b, s), T, a, n=100_000, seed=20240917)
    worst = min(c.margin / c.std_error if c.std_error else math.inf for c in rep.cases)
    report(f"5[{cfg}]", len(rep.cases) == 6 and rep.all_pass,
           f"6 cases, min (mc - closed)/SE = {worst:.1f} (>=-3)")


def test_criterion_6_conditionals():
    rep = ex.verify_conditional_props(ProcessParams(2, 1.0, 1.0), 1.0, 0, None, 2, 1_000_000, seed=20240917)
    margins = [c.margin / c.std_error for c in rep.cases]
    report(6, rep.all_pass, "margins in SE: " + ", ".join(f"{c.config['claim']} {m:.0f}"
                                                           for c, m in zip(rep.cases, margins)))


def test_criterion_7_convergence_rate():
    rows = ex.convergence_table(ProcessParams(2, 1.0, 1.0), 1.0, 0, [64, 128, 256, 512, 1024])
    ratios = [r["ratio"] for r in rows[1:]]
    report(7, all(1.5 <= q <= 2.5 for q in ratios), "error ratios " + ", ".join(f"{q:.3f}" for q in ratios))


def test_criterion_8_sampler_fidelity():
    params = ProcessParams(2, 1.0, 1.0)
    rng = RandomStream(20240917)
    radii = [sample_increment(params, 1.0, 8, rng).radius_exponent() for _ in range(100_000)]
    pval = radius_chisquare(params, 1.0, radii)

    bp = ProcessParams(3, 1.0, 1.0)
    w = PAdic.from_int(4, 3, 20)
    n = 100_000
    draws = [sample_bridge_point(bp, 0.4, 0.6, w, 8, rng) for _ in range(n)]
    balls = [(0, 0), (0, -1), (0, -2), (1, -1), (4, -1), (4, -2), (5, -1), (2, 0)]
    worst = 0.0
    for c_int, k in balls:
        c = PAdic.from_int(c_int, 3, 20) if c_int else PAdic.zero(3)
        prob = bridge_ball_prob(bp, 0.4, 0.6, w, c, k)
        hits = sum(1 for z in draws if (z - c).is_zero or -(z - c).valuation <= k)
        worst = max(worst, abs(hits / n - prob) / math.sqrt(prob * (1 - prob) / n))
    report(8, pval > 0.001 and worst <= 4,
           f"radius chi-square p={pval:.3f} (>0.001, n=1e5); bridge balls max |z|={worst:.2f} (<=4) on 8 balls, n=1e5")


def test_criterion_9_determinism():
    threaded = [
        ["exit-mc", "--p", "2", "--T", "1", "--a", "0", "--n", "50000", "--seed", "7"],
        ["bridge-mc", "--p", "3", "--b", "2", "--sigma", "0.5", "--T", "2", "--t", "1", "--a", "1",
         "--n", "30000", "--seed", "7", "--format", "csv"],
        ["verify", "conditionals", "--p", "2", "--t", "1", "--a", "0", "--n", "40000", "--seed", "7"],
    ]
    plain = [["verify", "prop3", "--p", "5", "--sigma", "2"], ["density", "--p", "3", "--t", "0.5", "--r", "2"]]
    same = True
    for argv in threaded + plain:
        outs = []
        extras = ([], [], ["--workers", "4"], ["--workers", "2"]) if argv in threaded else ([], [])
        for extra in extras:
            buf = io.StringIO()
            code = run(argv + extra, buf)
            outs.append((code, buf.getvalue().encode()))
        same &= all(o == outs[0] for o in outs)
    report(9, same, f"{len(threaded) + len(plain)} commands repeated, MC ones also with --workers 2/4: "
                    "byte-identical")
