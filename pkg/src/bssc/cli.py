"""Command line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import capacity as cap
from .channel import BsscParams, FeedbackPolicy, bssc_kernel, canonicalize
from .errors import (
    BsscError,
    MarkovInfeasibleError,
    MarkovSingularityError,
)
from .oracles import (
    finite_horizon_bruteforce,
    grid_capacity,
    verify_nofb_equivalence,
)
from .simulator import estimate, simulate

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "BSSC_OUTPUT_DIR"
SWEEP_COLUMNS = ["kappa", "capacity", "lambda", "p_a0_given_b0", "markov_feasible"]

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

GRID_TOL = 1e-4
POLICY_TOL = 1e-3
NOFB_TOL = 1e-9


class VerificationFailed(Exception):
    pass


def _fmt(x: float, digits: int = 10) -> str:
    s = f"{x:.{digits}f}"
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def _write(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _params(args) -> BsscParams:
    return BsscParams(args.alpha, args.beta)


def _markov_entry(params: BsscParams, kappa: float) -> dict:
    try:
        return {"feasible": True, **cap.markov_nofb_policy(params, kappa).to_dict()}
    except (MarkovInfeasibleError, MarkovSingularityError) as exc:
        return {"feasible": False, "reason": str(exc)}


# ---------------------------------------------------------------------------
# capacity


def capacity_record(params: BsscParams, kappa: float | None) -> dict:
    canon = canonicalize(params.alpha, params.beta)
    fb = cap.capacity_fb(params)
    rec = {
        "schema_version": SCHEMA_VERSION,
        "command": "capacity",
        "params": params.to_dict(),
        "canonical": canon.to_dict(),
        "degenerate": fb.degenerate,
        "feedback": {
            "capacity": fb.capacity,
            "kappa_star": fb.kappa,
            "lambda_star": fb.lambda_,
            "input": fb.input.to_dict(),
            "output_kernel": fb.output_kernel.to_list(),
        },
        "no_feedback": {"capacity": fb.capacity, "markov": _markov_entry(params, fb.kappa)},
    }
    if kappa is not None:
        res = cap.capacity_fb_cost(params, kappa)
        ineq = cap.capacity_fb_ineq(params, kappa)
        rec["with_cost"] = {
            "kappa": kappa,
            "capacity": res.capacity,
            "lambda": res.lambda_,
            "input": res.input.to_dict(),
            "output_kernel": res.output_kernel.to_list(),
            "capacity_inequality": ineq.capacity,
            "no_feedback_markov": _markov_entry(params, kappa),
        }
    return rec


def cmd_capacity(args) -> int:
    rec = capacity_record(_params(args), args.kappa)
    if args.format == "csv":
        cols = ["alpha", "beta", "capacity_fb", "kappa_star", "lambda_star"]
        row = [rec["params"]["alpha"], rec["params"]["beta"], rec["feedback"]["capacity"],
               rec["feedback"]["kappa_star"], rec["feedback"]["lambda_star"]]
        if args.kappa is not None:
            cols += ["kappa", "capacity_fb_cost", "lambda"]
            wc = rec["with_cost"]
            row += [wc["kappa"], wc["capacity"], wc["lambda"]]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerow([_fmt(v) for v in row])
        _write(buf.getvalue(), args.output)
    else:
        _write(json.dumps(rec, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def kappa_grid(step: float) -> list[float]:
    if not 0.0 < step <= 1.0:
        raise BsscError(f"step must lie in (0, 1], got {step}")
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise BsscError(f"step {step} does not divide [0, 1] evenly")
    return [round(i / n, 12) for i in range(n + 1)]


def sweep_rows(params: BsscParams, step: float = 0.025) -> list[list]:
    rows = []
    for k in kappa_grid(step):
        res = cap.capacity_fb_cost(params, k)
        rows.append([k, res.capacity, res.lambda_, res.input.m[0, 0],
                     int(cap.markov_feasible(params, k))])
    return rows


def cmd_sweep(args) -> int:
    rows = sweep_rows(_params(args), args.step)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for k, c, lam, p00, feas in rows:
        w.writerow([_fmt(k, 4), _fmt(c), _fmt(lam), _fmt(p00, 4), feas])
    _write(buf.getvalue(), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _check(name, params, value, reference, tol, **extra) -> dict:
    residual = abs(value - reference)
    return {
        "name": name,
        "alpha": params.alpha,
        "beta": params.beta,
        "value": value,
        "reference": reference,
        "residual": residual,
        "tolerance": tol,
        "passed": bool(residual <= tol),
        **extra,
    }


def verify_params(params: BsscParams, kappas=(0.1, 0.5, 0.9), resolution=0.01,
                  refine_rounds=3, horizon=1, grid_points=11) -> list[dict]:
    """Closed forms against the grid, brute-force and no-feedback oracles."""
    kernel = bssc_kernel(params)
    checks = []
    fb = cap.capacity_fb(params)
    g = grid_capacity(kernel, resolution=resolution, refine_rounds=refine_rounds)
    checks.append(_check("grid_unconstrained", params, g.best_value, fb.capacity, GRID_TOL))
    if not fb.degenerate:
        dev = float(np.abs(g.best_policy.as_array() - fb.input.as_array()).max())
        checks.append(_check("grid_argmax_policy", params, dev, 0.0, POLICY_TOL))
    for k in kappas:
        gc = grid_capacity(kernel, kappa=k, resolution=resolution, refine_rounds=refine_rounds)
        ref = cap.capacity_fb_cost(params, k).capacity
        checks.append(_check("grid_constrained", params, gc.best_value, ref, GRID_TOL, kappa=k))

    # finite horizon: each term is at most C, and the stationary symmetric
    # policies on the grid are admissible from step 1 on
    bf = finite_horizon_bruteforce(kernel, horizon, "output", grid_points)
    grid = np.linspace(0.0, 1.0, grid_points)
    best_sym = max(cap.rate_at(params, k) for k in grid)
    lower = horizon / (horizon + 1) * max(best_sym, 0.0) - 1e-9
    upper = fb.capacity + 1e-9
    ok = lower <= bf.best_value <= upper
    checks.append({
        "name": "bruteforce_horizon", "alpha": params.alpha, "beta": params.beta,
        "value": bf.best_value, "lower": lower, "upper": upper, "horizon": horizon,
        "grid_points": grid_points, "passed": bool(ok),
    })

    nofb_kappas = list(kappas) + ([] if fb.degenerate else [fb.kappa])
    for k in nofb_kappas:
        try:
            eq = verify_nofb_equivalence(params, k)
        except (MarkovInfeasibleError, MarkovSingularityError) as exc:
            checks.append({"name": "nofb_equivalence", "alpha": params.alpha,
                           "beta": params.beta, "kappa": k, "skipped": str(exc),
                           "passed": True})
            continue
        checks.append(_check("nofb_equivalence", params, eq.max_residual, 0.0, NOFB_TOL, kappa=k))
    return checks


def cmd_verify(args) -> int:
    if args.grid:
        vals = np.linspace(0.55, 0.95, args.grid)
        pairs = [BsscParams(float(a), float(b)) for a in vals for b in vals]
    else:
        pairs = [_params(args)]
    checks = []
    for p in pairs:
        checks.extend(verify_params(p, kappas=args.kappas, resolution=args.resolution,
                                    refine_rounds=args.refine_rounds, horizon=args.horizon,
                                    grid_points=args.grid_points))
    breaches = [c for c in checks if not c["passed"]]
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "passed": not breaches,
        "n_checks": len(checks),
        "checks": checks,
        "breaches": breaches,
    }
    _write(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
    if breaches:
        for b in breaches:
            print(f"breach: {b['name']} alpha={b['alpha']} beta={b['beta']} "
                  f"{ {k: v for k, v in b.items() if k in ('kappa', 'value', 'reference', 'residual')} }",
                  file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate and bruteforce


def cmd_simulate(args) -> int:
    params = _params(args)
    kappa = args.kappa if args.kappa is not None else cap.capacity_fb(params).kappa
    if args.steps < 1000:
        raise BsscError(f"need at least 1000 steps for an estimate, got {args.steps}")
    policy = (FeedbackPolicy.symmetric(kappa) if args.policy == "feedback"
              else cap.markov_nofb_policy(params, kappa))
    trace = simulate(bssc_kernel(params), policy, args.steps, seed=args.seed, burn_in=args.burn_in)
    est = estimate(trace, seed=args.seed)
    ref = cap.capacity_fb_cost(params, kappa).capacity
    out_dir = Path(args.output_dir or os.environ.get(OUTPUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.prefix}_{args.policy}"
    if args.trace_format == "csv":
        (out_dir / f"{stem}_trace.csv").write_text(trace.to_csv())
    else:
        (out_dir / f"{stem}_trace.bin").write_bytes(trace.to_bytes())
    d = est.to_dict()
    d.update({
        "schema_version": SCHEMA_VERSION,
        "params": params.to_dict(),
        "kappa": kappa,
        "policy": policy.to_dict(),
        "closed_form_rate": ref,
        "rate_z": (est.rate_hat - ref) / est.stderr_rate if est.stderr_rate > 0 else None,
        "cost_z": (est.cost_hat - kappa) / est.stderr_cost if est.stderr_cost > 0 else None,
    })
    text = json.dumps(d, indent=2, sort_keys=True) + "\n"
    (out_dir / f"{stem}_estimate.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_bruteforce(args) -> int:
    rep = finite_horizon_bruteforce(bssc_kernel(_params(args)), args.horizon, args.conditioning,
                                    args.grid_points, budget=args.budget, workers=args.workers)
    d = rep.to_dict()
    d["closed_form"] = cap.capacity_fb(_params(args)).capacity
    _write(json.dumps(d, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bssc", description="Binary state symmetric channel capacity")
    sub = p.add_subparsers(dest="command", required=True)

    def add_params(sp, required=True):
        sp.add_argument("--alpha", type=float, required=required, help="P(b=a) in state 0")
        sp.add_argument("--beta", type=float, required=required, help="P(b=a) in state 1")

    sp = sub.add_parser("capacity", help="closed-form capacities and achieving inputs")
    add_params(sp)
    sp.add_argument("--kappa", type=float, default=None, help="cost level (state-0 frequency)")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("sweep", help="capacity-cost curve as CSV")
    add_params(sp)
    sp.add_argument("--step", type=float, default=0.025)
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="check closed forms against the numerical oracles")
    add_params(sp, required=False)
    sp.add_argument("--grid", type=int, default=0,
                    help="verify an N x N grid over [0.55, 0.95]^2 instead of one pair")
    sp.add_argument("--kappas", type=float, nargs="*", default=[0.1, 0.5, 0.9])
    sp.add_argument("--resolution", type=float, default=0.01)
    sp.add_argument("--refine-rounds", type=int, default=3)
    sp.add_argument("--horizon", type=int, default=1)
    sp.add_argument("--grid-points", type=int, default=11)
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="Monte Carlo run with trace and estimate files")
    add_params(sp)
    sp.add_argument("--kappa", type=float, default=None, help="defaults to kappa*")
    sp.add_argument("--policy", choices=["feedback", "markov"], default="feedback")
    sp.add_argument("--steps", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=1000)
    sp.add_argument("--trace-format", choices=["csv", "bin"], default="csv")
    sp.add_argument("--output-dir", default=None, help=f"defaults to ${OUTPUT_DIR_ENV} or .")
    sp.add_argument("--prefix", default="bssc")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bruteforce", help="finite-horizon directed-information search")
    add_params(sp)
    sp.add_argument("--horizon", type=int, default=2)
    sp.add_argument("--conditioning", choices=["output", "output_history", "full"],
                    default="output")
    sp.add_argument("--grid-points", type=int, default=11)
    sp.add_argument("--budget", type=int, default=10**8)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--output", default=None)
    sp.set_defaults(func=cmd_bruteforce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and not args.grid and (args.alpha is None or args.beta is None):
        parser.error("verify needs --alpha and --beta, or --grid N")
    try:
        return args.func(args)
    except BsscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
