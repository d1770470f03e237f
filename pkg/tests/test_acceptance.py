"""Acceptance criteria 1-9. Each test prints one PASS/FAIL line."""

import csv
import os
import time

import numpy as np
import pytest

from bssc import capacity as cap
from bssc import cli
from bssc.channel import BsscParams, FeedbackPolicy, bssc_kernel, canonicalize
from bssc.errors import MarkovInfeasibleError, MarkovSingularityError
from bssc.oracles import finite_horizon_bruteforce, grid_capacity, verify_nofb_equivalence
from bssc.probability import binary_entropy
from bssc.simulator import estimate, simulate

ARMS = [0.5, 0.6, 0.7, 0.8, 0.9, 0.92]
ALPHAS = [0.6, 0.7, 0.8, 0.9, 0.92]
KAPPAS = [round(0.1 * i, 1) for i in range(1, 10)]
PAIRS = [(a, b) for a in ALPHAS for b in ARMS if b <= a]

# frozen from 30-digit mpmath evaluations, cross-checked by the grid oracle
ANCHOR_C_071 = 0.362788727982966077
ANCHOR_C_STAR = 0.416803934240255800
ANCHOR_KAPPA_STAR = 0.524032987404900288


def test_criterion_1_constrained_oracle(acceptance_log):
    worst = 0.0
    for a, b in PAIRS:
        kernel = bssc_kernel(BsscParams(a, b))
        for k in KAPPAS:
            rep = grid_capacity(kernel, kappa=k, refine_rounds=3)
            ref = cap.capacity_fb_cost(BsscParams(a, b), k).capacity
            worst = max(worst, abs(rep.best_value - ref))
    ok = worst <= 1e-4
    acceptance_log(1, ok, f"{len(PAIRS)} pairs x {len(KAPPAS)} kappas, max |grid - closed form| = {worst:.2e} (tol 1e-4)")
    assert ok


def test_criterion_2_unconstrained_oracle(acceptance_log):
    worst_val = worst_pol = 0.0
    for a, b in PAIRS:
        p = BsscParams(a, b)
        rep = grid_capacity(bssc_kernel(p), refine_rounds=3)
        fb = cap.capacity_fb(p)
        ks = fb.kappa
        target = np.array([[ks, 1 - ks], [1 - ks, ks]])
        worst_val = max(worst_val, abs(rep.best_value - fb.capacity))
        worst_pol = max(worst_pol, float(np.abs(rep.best_policy.as_array() - target).max()))
    ok = worst_val <= 1e-4 and worst_pol <= 1e-3
    acceptance_log(2, ok, f"max value gap {worst_val:.2e} (tol 1e-4), max policy gap {worst_pol:.2e} (tol 1e-3)")
    assert ok


def test_criterion_3_anchors(acceptance_log):
    p = BsscParams(0.92, 0.79)
    kernel = bssc_kernel(p)
    c071 = cap.capacity_fb_cost(p, 0.71).capacity
    fb = cap.capacity_fb(p)
    # the grid oracle agrees with the frozen anchors independently of the closed form
    g071 = grid_capacity(kernel, kappa=0.71).best_value
    gstar = grid_capacity(kernel).best_value
    gaps = [
        abs(c071 - ANCHOR_C_071),
        abs(fb.capacity - ANCHOR_C_STAR),
        abs(fb.kappa - ANCHOR_KAPPA_STAR),
    ]
    ok = max(gaps) <= 1e-6 and abs(g071 - ANCHOR_C_071) <= 1e-4 and abs(gstar - ANCHOR_C_STAR) <= 1e-4
    acceptance_log(3, ok, f"C(0.71)={c071:.6f}, C*={fb.capacity:.6f} at kappa*={fb.kappa:.5f}, "
                          f"max anchor gap {max(gaps):.1e} (tol 1e-6)")
    assert ok


def test_criterion_4_feedback_does_not_help(acceptance_log):
    axis = np.linspace(0.5, 0.98, 21)
    kappas = np.linspace(0.0, 1.0, 11)
    worst = 0.0
    checked = infeasible = singular = 0
    for a in axis:
        for b in axis:
            p = canonicalize(float(a), float(b))
            assert p.is_canonical
            for k in kappas:
                try:
                    eq = verify_nofb_equivalence(p, float(k))
                except MarkovInfeasibleError:
                    infeasible += 1
                    continue
                except MarkovSingularityError:
                    singular += 1
                    continue
                checked += 1
                worst = max(worst, eq.max_residual)
    total = len(axis) ** 2 * len(kappas)
    ok = worst <= 1e-9 and checked > 0 and checked + infeasible + singular == total
    acceptance_log(4, ok, f"{checked} feasible cells max residual {worst:.1e} (tol 1e-9); "
                          f"reported {infeasible} infeasible, {singular} singular of {total}")
    assert ok


def test_criterion_5_finite_horizon(acceptance_log):
    kernel = bssc_kernel(BsscParams(0.92, 0.79))
    workers = os.cpu_count() or 1
    t0 = time.perf_counter()
    hist = finite_horizon_bruteforce(kernel, 2, "output_history", 11, workers=workers)
    out = finite_horizon_bruteforce(kernel, 2, "output", 11, workers=workers)
    elapsed = time.perf_counter() - t0
    gap = abs(hist.best_value - out.best_value)
    ok = gap <= 0.01 and elapsed <= 600 and out.best_value <= hist.best_value + 1e-12
    acceptance_log(5, ok, f"n=2, 11 points: history {hist.best_value:.6f} vs output {out.best_value:.6f}, "
                          f"gap {gap:.1e} (tol 0.01), {elapsed:.0f}s on {workers} worker(s)")
    assert ok


def test_criterion_6_concavity_monotonicity(acceptance_log):
    axis = np.linspace(0.55, 0.95, 5)
    grid = np.linspace(0.0, 1.0, 1000)
    worst_concave = worst_mono = worst_fd = 0.0
    h = 1e-5
    for a in axis:
        for b in axis:
            p = BsscParams(float(a), float(b))
            c = np.array([cap.rate_at(p, float(k)) for k in grid])
            worst_concave = max(worst_concave, float(np.max(c[2:] - 2 * c[1:-1] + c[:-2])))
            ks = cap.kappa_star(p)
            head = c[grid <= ks]
            if head.size > 1:
                worst_mono = max(worst_mono, float(np.max(-np.diff(head))))
            fd = (cap.rate_at(p, ks + h) - cap.rate_at(p, ks - h)) / (2 * h)
            worst_fd = max(worst_fd, abs(fd))
    ok = worst_concave <= 1e-10 and worst_mono <= 1e-10 and worst_fd <= 1e-6
    acceptance_log(6, ok, f"25 pairs: max second difference {worst_concave:.1e}, max decrease on [0,kappa*] "
                          f"{worst_mono:.1e}, max |dC/dkappa(kappa*)| {worst_fd:.1e} (tol 1e-6)")
    assert ok


def test_criterion_7_degenerate_cases(acceptance_log):
    failures = []
    for a in (0.55, 0.7, 0.79, 0.92, 0.99):
        p = BsscParams(a, a)
        fb = cap.capacity_fb(p)
        if fb.kappa != 0.5:
            failures.append(f"kappa* {fb.kappa} at alpha=beta={a}")
        if abs(fb.capacity - (1 - binary_entropy(a))) > 1e-14:
            failures.append(f"BSC capacity at {a}")
    for a in (0.3, 0.5, 0.79, 0.9):
        res = cap.capacity_fb(BsscParams(a, 1 - a))
        if not (res.capacity == 0.0 and res.degenerate):
            failures.append(f"singular pair ({a}, {1 - a})")
    for a, b in [(0.92, 0.79), (0.6, 0.95), (0.3, 0.2), (0.55, 0.55)]:
        for k in (0.0, 1.0):
            if abs(cap.capacity_fb_cost(BsscParams(a, b), k).capacity) > 1e-15:
                failures.append(f"endpoint kappa={k} at ({a}, {b})")
    for a, b, k in [(0.5 + 1e-9, 0.5, 0.3), (0.7, 0.3 + 1e-10, 0.5)]:
        try:
            cap.markov_nofb_policy(BsscParams(a, b), k)
            failures.append(f"no singularity error at gamma={cap.gamma_of(BsscParams(a, b), k)}")
        except MarkovSingularityError:
            pass
    ok = not failures
    acceptance_log(7, ok, "alpha=beta, alpha+beta=1, kappa endpoints, gamma->1/2" + ("" if ok else f": {failures}"))
    assert ok


def test_criterion_8_monte_carlo(acceptance_log):
    p = BsscParams(0.92, 0.79)
    kernel = bssc_kernel(p)
    k = 0.71
    ref = cap.capacity_fb_cost(p, k).capacity
    t0 = time.perf_counter()
    parts = []
    ok = True
    for name, pol in (("feedback", FeedbackPolicy.symmetric(k)), ("markov", cap.markov_nofb_policy(p, k))):
        t1 = simulate(kernel, pol, 1_000_000, seed=20251015)
        t2 = simulate(kernel, pol, 1_000_000, seed=20251015)
        est = estimate(t1, seed=1)
        zr = (est.rate_hat - ref) / est.stderr_rate
        zc = (est.cost_hat - k) / est.stderr_cost
        same = t1.to_bytes() == t2.to_bytes()
        ok &= abs(zr) <= 3 and abs(zc) <= 3 and same
        parts.append(f"{name} rate z={zr:+.2f} cost z={zc:+.2f} identical={same}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 60
    acceptance_log(8, ok, "; ".join(parts) + f"; {elapsed:.1f}s (limit 60s)")
    assert ok


def test_criterion_9_sweep(acceptance_log, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = cli.main(["sweep", "--alpha", "0.92", "--beta", "0.79", "--output", str(out)])
    capsys.readouterr()
    rows = list(csv.DictReader(out.read_text().splitlines()))
    kap = [float(r["kappa"]) for r in rows]
    c = [float(r["capacity"]) for r in rows]
    ks = cap.kappa_star(BsscParams(0.92, 0.79))
    nearest = min(kap, key=lambda x: abs(x - ks))
    argmax = kap[int(np.argmax(c))]
    ok = (code == 0 and len(rows) == 41 and c[0] == 0.0 and c[-1] == 0.0
          and argmax == nearest and 0 < kap.index(argmax) < 40)
    acceptance_log(9, ok, f"{len(rows)} rows, endpoints {c[0]}, {c[-1]}, max at kappa={argmax} "
                          f"(nearest grid point to kappa*={ks:.5f} is {nearest})")
    assert ok
