"""Command-line front end: simulate, tune-gamma, analyze, validate."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis
from .experiments import ExperimentPlan, db_to_linear, run_experiment, \
    tune_gamma_out


def _cmd_simulate(args) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    if args.output:
        plan.output_csv = args.output
    results = run_experiment(plan, progress=lambda row: print(
        json.dumps(row), file=sys.stderr))
    if plan.output_csv is None:
        writer = __import__("csv").DictWriter(
            sys.stdout, fieldnames=list(results.rows[0].keys()))
        writer.writeheader()
        writer.writerows(results.rows)
    else:
        print(f"wrote {len(results.rows)} rows to {plan.output_csv}")
    return 2 if results.flagged else 0


def _cmd_tune_gamma(args) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    res = tune_gamma_out(plan, args.b, args.snr_db, tolerance=args.tolerance,
                         trials=args.trials)
    print(json.dumps({
        "b": args.b, "snr_db": args.snr_db, "gamma_star": res.gamma_star,
        "fer_at_star": res.fer_at_star, "fer_unlimited": res.fer_unlimited,
        "throughput_at_star": res.throughput_at_star,
        "trials": res.trials, "flagged": res.flagged,
    }))
    return 2 if res.flagged else 0


def _parse_zeta(text, M):
    if text is None:
        return analysis.uniform_zeta(M)
    return np.array([float(v) for v in text.split(",")])


def _cmd_analyze(args) -> int:
    if args.what == "dmt":
        curve = analysis.dmt_curve(args.M, args.N,
                                   _parse_zeta(args.zeta, args.M), args.ell)
        doc = {"breakpoints": curve.breakpoints,
               "optimal_arq": {
                   "long-term": analysis.optimal_arq_tradeoff(
                       args.M, args.N, args.L, args.re, "long-term"),
                   "short-term": analysis.optimal_arq_tradeoff(
                       args.M, args.N, args.L, args.re, "short-term")}}
    elif args.what == "gamma":
        rho = db_to_linear(args.snr_db) if args.snr_db is not None else args.rho
        doc = {"rho": rho,
               "avg_gamma_out": analysis.avg_gamma_out_asymptotic(
                   args.M, args.N, args.T, args.L, rho, args.re)}
    else:   # ratio
        rho = db_to_linear(args.snr_db) if args.snr_db is not None else args.rho
        doc = {"rho": rho,
               "complexity_ratio": analysis.complexity_ratio(
                   args.M, args.N, args.T, args.L, rho)}
    print(json.dumps(doc))
    return 0


def _cmd_validate(_args) -> int:
    """Fast oracle suite: closed forms plus small search equivalences."""
    from . import treesearch
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    g = analysis.avg_gamma_out_asymptotic(2, 2, 3, 2, 100.0, 0.0)
    check("avg gamma_out (2,2,3,2) at 20 dB in [96, 100]", 96 <= g <= 100)
    r = analysis.complexity_ratio(2, 2, 3, 2, 1e8)
    check("complexity ratio at 80 dB in [6.9, 7.9]", 6.9 <= r <= 7.9)
    curve = analysis.dmt_curve(2, 2, analysis.uniform_zeta(2), 1)
    check("2x2 DMT breakpoints (0,4),(1,1),(2,0)",
          curve.breakpoints == [(0.0, 4.0), (1.0, 1.0), (2.0, 0.0)])
    check("ARQ tradeoff long/short at r_e=1",
          analysis.optimal_arq_tradeoff(2, 2, 2, 1.0) == 2.25
          and analysis.optimal_arq_tradeoff(2, 2, 2, 1.0, "short-term") == 4.5)

    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(200):
        basis = rng.standard_normal((4, 4))
        while abs(np.linalg.det(basis)) < 0.3:
            basis = rng.standard_normal((4, 4))
        q, rr = np.linalg.qr(basis)
        signs = np.sign(np.diag(rr))
        rr = rr * signs[:, None]
        z_true = rng.integers(-4, 5, size=4)
        y = rr @ z_true + 0.2 * rng.standard_normal(4)
        z_hat = treesearch.closest_point(rr, y)
        # reference by box enumeration around the Babai seed
        zb, dist_b, _ = treesearch.babai_nearest(rr, y)
        radius = np.sqrt(dist_b) + 1e-9
        span = np.abs(np.linalg.inv(rr)) @ np.full(4, radius)
        center = np.linalg.solve(rr, y)
        axes = [np.arange(int(np.floor(c - s)), int(np.ceil(c + s)) + 1)
                for c, s in zip(center, span)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 4)
        d = np.linalg.norm(grid @ rr.T - y, axis=1)
        z_ref = grid[int(np.argmin(d))]
        if not np.array_equal(np.asarray(z_hat), z_ref):
            mismatches += 1
    check("stack search matches brute-force closest point (200 cases)",
          mismatches == 0)

    print(f"{failures} failure(s)" if failures else "all checks passed")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lastseq",
        description="Lattice-coded MIMO ARQ link simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run an experiment plan")
    p_sim.add_argument("plan")
    p_sim.add_argument("--output", default=None, help="results CSV path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_tune = sub.add_parser("tune-gamma",
                            help="search the smallest usable node budget")
    p_tune.add_argument("plan")
    p_tune.add_argument("--b", type=float, required=True)
    p_tune.add_argument("--snr-db", type=float, required=True)
    p_tune.add_argument("--tolerance", type=float, default=0.1)
    p_tune.add_argument("--trials", type=int, default=None)
    p_tune.set_defaults(func=_cmd_tune_gamma)

    p_an = sub.add_parser("analyze", help="closed-form evaluations as JSON")
    p_an.add_argument("what", choices=["dmt", "gamma", "ratio"])
    p_an.add_argument("--M", type=int, default=2)
    p_an.add_argument("--N", type=int, default=2)
    p_an.add_argument("--T", type=int, default=3)
    p_an.add_argument("--L", type=int, default=2)
    p_an.add_argument("--ell", type=int, default=1)
    p_an.add_argument("--re", type=float, default=0.0)
    p_an.add_argument("--zeta", default=None,
                      help="comma-separated, defaults to uniform")
    p_an.add_argument("--rho", type=float, default=100.0)
    p_an.add_argument("--snr-db", type=float, default=None)
    p_an.set_defaults(func=_cmd_analyze)

    p_val = sub.add_parser("validate", help="run the fast oracle suite")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
