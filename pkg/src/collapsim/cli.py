"""collapsim command line.

Exit status: 0 success, 1 usage or input error, 2 numerical validation failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from collapsim import oracle, percept, rates, sweep
from collapsim.dynamics import GaussianState, SystemSpec, evolve, spread
from collapsim.errors import CollapsimError
from collapsim.params import CollapseParams, QmuplCoupling, cm, cm3_per_s, qmupl_from_csl

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_collapse_args(p, need_lambda=True):
    g = p.add_argument_group("collapse parameters (SI unless suffixed -cgs)")
    g.add_argument("--lambda", dest="lambda_csl", type=float, help="CSL rate [s^-1]")
    g.add_argument("--gamma", type=float, help="coupling gamma [m^3 s^-1]")
    g.add_argument("--gamma-cgs", type=float, help="coupling gamma [cm^3 s^-1]")
    g.add_argument("--rc", type=float, help="correlation length r_C [m]")
    g.add_argument("--rc-cgs", type=float, help="correlation length r_C [cm]")


def _collapse_params(args, default=True) -> CollapseParams:
    gamma = args.gamma if args.gamma is not None else (
        cm3_per_s(args.gamma_cgs) if args.gamma_cgs is not None else None
    )
    r_C = args.rc if args.rc is not None else (cm(args.rc_cgs) if args.rc_cgs is not None else None)
    lam = args.lambda_csl
    given = sum(v is not None for v in (gamma, r_C, lam))
    if given == 3:
        params = CollapseParams(lam, r_C, gamma)
    elif gamma is not None and r_C is not None:
        params = CollapseParams.from_gamma(gamma, r_C)
    elif lam is not None and r_C is not None:
        params = CollapseParams.from_lambda(lam, r_C)
    elif lam is not None and gamma is not None:
        params = CollapseParams.from_lambda_gamma(lam, gamma)
    elif default:
        base = CollapseParams.conventional()
        if lam is not None:
            return base.with_lambda(lam)
        if r_C is not None:
            return CollapseParams.from_gamma(base.gamma_coupling, r_C)
        return base
    else:
        raise UsageError("give two of --lambda, --gamma[-cgs], --rc[-cgs]")
    return params


def _write(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_params(args):
    p = _collapse_params(args, default=False)
    print(f"lambda = {p.lambda_csl:.4g} s^-1")
    print(f"gamma = {p.gamma_coupling:.4g} m^3 s^-1 ({p.gamma_coupling * 1e6:.4g} cm^3 s^-1)")
    print(f"r_C = {p.r_C:.4g} m ({p.r_C * 100:.4g} cm)")
    print(f"lambda_q = {qmupl_from_csl(p.lambda_csl, p.r_C):.4g} m^-2 s^-1")
    return EXIT_OK


def cmd_rate(args):
    params = _collapse_params(args)
    if args.configuration is not None:
        config = rates.load_configuration(args.configuration)
        gamma = rates.gamma_pairwise(config, params, use_cutoff=args.cutoff)
        print(f"particles = {config.size}")
        print(f"Gamma_pairwise = {gamma:.6g} s^-1")
        try:
            report = rates.gamma_consistency_report(config, params)
            print(f"Gamma_clusters = {report.cluster_estimate:.6g} s^-1 "
                  f"(clusters {list(report.cluster_sizes)}, ratio {report.ratio:.4g})")
        except CollapsimError as exc:
            print(f"cluster estimate not applicable: {exc}")
    elif args.clusters is not None:
        n, N = args.clusters
        gamma = rates.gamma_clusters(rates.ClusterSpec(n, N), params.lambda_csl)
        print(f"Gamma_clusters = {gamma:.6g} s^-1")
    else:
        raise UsageError("rate: give a configuration file or --clusters n N")
    if args.time is not None:
        print(f"decay factor after {args.time:g} s = {rates.offdiagonal_decay(gamma, args.time):.6g}")
    return EXIT_OK


def cmd_spread(args):
    params = _collapse_params(args)
    model = sweep.parse_model(args.model)
    sys_ = SystemSpec(args.n, QmuplCoupling(qmupl_from_csl(params.lambda_csl, params.r_C)),
                      args.rate_exponent)
    alpha = evolve(GaussianState.from_spread(args.sigma0), sys_, model, args.t)
    print(f"alpha_t = {alpha.real:.9e} {alpha.imag:+.9e}j m^-2")
    print(f"sigma_t = {spread(alpha):.9e} m")
    return EXIT_OK


def cmd_sweep(args):
    config = {}
    if args.config:
        config = json.loads(Path(args.config).read_text())
    overrides = {
        "n_min": args.n_min, "n_max": args.n_max, "n_points": args.n_points,
        "lambda_min": args.lambda_min, "lambda_max": args.lambda_max,
        "lambda_points": args.lambda_points, "sigma0": args.sigma0, "t": args.t,
        "model_a": args.model, "model_b": args.compare, "rate_exponent": args.rate_exponent,
    }
    config.update({k: v for k, v in overrides.items() if v is not None})
    jobs = args.jobs if args.jobs is not None else config.pop("jobs", None)
    config.pop("jobs", None)
    r_C = config.pop("r_C", None)
    grid = sweep.grid_from_config(config)
    params = _collapse_params(args)
    if r_C is not None and args.rc is None and args.rc_cgs is None:
        params = CollapseParams.from_lambda(params.lambda_csl, float(r_C))
    result = sweep.run_sweep(grid, params, jobs=jobs)
    fmt = args.format or ("json" if args.out and args.out.endswith(".json") else "csv")
    _write(sweep.to_json(result) if fmt == "json" else sweep.to_csv(result), args.out)
    if args.contour_out:
        _write(sweep.contour_csv(result), args.contour_out)
    flagged = result.flagged()
    if flagged:
        print(f"warning: {len(flagged)} cells flagged singular", file=sys.stderr)
    return EXIT_OK


def cmd_percept(args):
    sc = percept.load_scenario(args.scenario)
    changes = {k: v for k, v in (("cells", args.cells), ("photons", args.photons)) if v is not None}
    if changes:
        sc = sc.replace(**changes)
    bound = percept.lambda_lower_bound(sc)
    print(f"{'stage':<32} {'variant':<8} {'n':>10} {'N':>8} {'n^2 N':>10}")
    for s in sc.stages:
        print(f"{s.label:<32} {s.variant or '-':<8} {s.n:>10.4g} {s.N:>8.4g} "
              f"{percept.stage_contribution(s):>10.2e}")
    print(f"photons = {sc.photons:g}, cells = {sc.cells:g}, "
          f"t = {sc.reaction_time:g} s, Gamma t = {sc.collapse_criterion:g}")
    for v in bound.variants:
        lo, hi = v.band
        print(f"{v.variant}: n^2 N total = {v.total:.3e}, lambda >= {v.lambda_bound:.2e} s^-1 "
              f"(band {lo:.1e} .. {hi:.1e})")
    lo, hi = bound.interval
    print(f"lambda interval: {lo:.2e} .. {hi:.2e} s^-1")
    return EXIT_OK


def validation_suite(rel_tol=1e-9) -> list:
    """The oracle checks run by ``collapsim validate``; each report has 'passed'."""
    grid = list(itertools.product(np.logspace(-10, 5, 5), np.logspace(0, 8, 5),
                                  np.linspace(0.0, 1.0, 5)))
    reports = []
    for T in (None, 2.73):
        r = oracle.riccati_agreement(grid, rel_tol=rel_tol, T=T)
        r["tolerance"] = 1e-6
        r["passed"] = r["max_rel_deviation"] < 1e-6
        reports.append(r)
    reports.append(oracle.limit_check_colored(oracle.LimitGrid.fig2()))
    return reports


def cmd_validate(args):
    reports = validation_suite()
    _write(oracle.to_json(reports) + "\n", args.out)
    ok = all(r["passed"] for r in reports)
    print("validation " + ("passed" if ok else "FAILED"), file=sys.stderr)
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="collapsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("params", help="convert between lambda, gamma and r_C")
    _add_collapse_args(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("rate", help="collapse rate of a configuration or of clusters")
    p.add_argument("configuration", nargs="?", help="file of x' y' z' x'' y'' z'' rows (m)")
    p.add_argument("--clusters", nargs=2, type=float, metavar=("n", "N"))
    p.add_argument("--cutoff", action="store_true", help="drop pairs beyond 8 r_C")
    p.add_argument("--time", type=float, help="also print exp(-Gamma t)")
    _add_collapse_args(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("spread", help="evolve one Gaussian packet")
    p.add_argument("--n", type=float, required=True, help="nucleon count")
    p.add_argument("--sigma0", type=float, default=5e-7)
    p.add_argument("--t", type=float, default=1e-2)
    p.add_argument("--model", default="white", help="white | thermal:K | colored:Hz")
    p.add_argument("--rate-exponent", type=float, default=2.0)
    _add_collapse_args(p)
    p.set_defaults(func=cmd_spread)

    p = sub.add_parser("sweep", help="spread maps over (n, lambda)")
    p.add_argument("--config", help="JSON file of grid settings")
    p.add_argument("--model", help="model_a (default white)")
    p.add_argument("--compare", help="model_b to difference against")
    for axis in ("n", "lambda"):
        p.add_argument(f"--{axis}-min", type=float)
        p.add_argument(f"--{axis}-max", type=float)
        p.add_argument(f"--{axis}-points", type=int)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--rate-exponent", type=float)
    p.add_argument("--jobs", type=int, help=f"worker processes (env {sweep.JOBS_ENV})")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--contour-out", help="write the half-spread contour as CSV")
    _add_collapse_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("percept", help="lambda bound from the visual process")
    p.add_argument("--scenario", default="default", help="'default' or a JSON file")
    p.add_argument("--cells", type=float)
    p.add_argument("--photons", type=float)
    p.set_defaults(func=cmd_percept)

    p = sub.add_parser("validate", help="run the oracle suite, print a JSON report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (CollapsimError, OSError, json.JSONDecodeError) as exc:
        print(f"collapsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
