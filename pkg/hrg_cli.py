#!/usr/bin/env python3
"""
Command-line driver for the hyperbolic random graph experiments.

    hrg_cli.py gen      sample a graph and write it (or its point set)
    hrg_cli.py analyze  run measurements on one graph
    hrg_cli.py certify  flow certificate for the center component
    hrg_cli.py sweep    measurements over (alpha, n, seed) cells -> CSV
    hrg_cli.py fit      exponent of a measurement against n
    hrg_cli.py plot     log-log SVG of a measurement
    hrg_cli.py draw     SVG of the native representation

Exit codes: 0 ok, 2 configuration or input error, 3 partial failure.
"""

import argparse
import logging
import sys

from components import center_component
from errors import (CertificateError, ConfigError, DomainError, HRGError,
                    SchemaVersionError)
from flowcert import build_flow, certificate_levels, sinclair_bound
from geometry import MODES, ModelParams, derive_levels
from graphgen import build_graph, read_graph, write_graph
from hrg_config import CONFIG_FILE, Config
from plotting import draw_native, emit_plot
from sampler import sample, write_point_set
from scaling_fit import fit_exponent, read_rows, write_rows
from spectral import spectral_gap
from sweep import MEASUREMENTS, OK_STATUSES, CellState, SweepConfig, measure, run_sweep

logger = logging.getLogger("hrg_cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
SOUNDNESS_SLACK = 1e-6
ANALYZE_DEFAULT = ("components", "gap", "halfdisk", "diameter", "bisection", "cuts")


def _model_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--alpha", type=float, help="radial density exponent in (1/2, 1)")
    p.add_argument("--bigc", type=float, help="radius offset C (R = 2 ln n + C)")
    p.add_argument("--n", type=int, help="number of points (Poisson mean in poisson mode)")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--exact-cap", type=int, dest="exact_cap")
    p.add_argument("--tol", type=float)
    p.add_argument("--nu-prime", type=float, dest="nu_prime")
    p.add_argument("--workers", type=int)
    p.add_argument("--graph", help="read this graph file instead of sampling")
    return p


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=CONFIG_FILE, help="JSON configuration file")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING, ...")
    common.add_argument("--quiet", action="store_true", help="no progress bars")
    common.add_argument("--save-config", dest="save_config", metavar="PATH",
                        help="write the effective configuration (file plus flags) to PATH")
    model = _model_flags()

    parser = argparse.ArgumentParser(prog="hrg_cli.py",
                                     description="Hyperbolic random graph experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common, model], help="sample and build a graph")
    p.add_argument("--out", help="graph file (summary only when omitted)")
    p.add_argument("--points-only", action="store_true", help="write the point set, no edges")

    p = sub.add_parser("analyze", parents=[common, model], help="measurements on one graph")
    p.add_argument("--measurements", nargs="*", default=list(ANALYZE_DEFAULT),
                   choices=MEASUREMENTS, metavar="NAME")
    p.add_argument("--out", help="CSV file for the rows")

    p = sub.add_parser("certify", parents=[common, model], help="flow certificate of lambda_1")
    p.add_argument("--out", help="CSV file for the summary rows")
    p.add_argument("--edges", help="CSV dump of f_bar per edge")

    p = sub.add_parser("sweep", parents=[common, model], help="measurement sweep to CSV")
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--ns", type=int, nargs="+")
    p.add_argument("--seeds", type=int, default=5, help="replicates per (alpha, n)")
    p.add_argument("--measurements", nargs="*", default=["gap"], choices=MEASUREMENTS,
                   metavar="NAME")
    p.add_argument("--out", required=True, help="CSV file")

    p = sub.add_parser("fit", parents=[common], help="exponent fit from a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("--correction", type=float, default=0.0, help="divide by (ln n)^p first")
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-seeds", type=int, default=5, dest="min_seeds")

    p = sub.add_parser("plot", parents=[common], help="log-log SVG from a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("--correction", type=float, default=0.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", required=True, help="SVG file")

    p = sub.add_parser("draw", parents=[common, model], help="native representation SVG")
    p.add_argument("--out", required=True, help="SVG file")
    p.add_argument("--no-edges", action="store_true")
    return parser


def load_settings(args):
    keys = ("alpha", "bigc", "n", "seed", "mode", "exact_cap", "tol", "nu_prime", "workers")
    overrides = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "log_level", None):
        overrides["log_level"] = args.log_level.upper()
    return Config(args.config, overrides)


def load_graph(args, config):
    if getattr(args, "graph", None):
        g = read_graph(args.graph)
        print("Loaded graph:", args.graph)
    else:
        params = ModelParams(config.alpha, config.bigc, config.n, config.mode, config.seed)
        g = build_graph(sample(params), workers=config.workers)
    p = g.params
    print(f"Graph: alpha={p.alpha:g} C={p.C:g} n={p.n} mode={p.mode} seed={p.seed} "
          f"R={p.R:.4f} -> {g.n} vertices, {g.edge_count} edges")
    return g


def cmd_gen(args, config):
    params = ModelParams(config.alpha, config.bigc, config.n, config.mode, config.seed)
    points = sample(params)
    if args.points_only:
        if not args.out:
            raise DomainError("--points-only needs --out")
        write_point_set(points, args.out)
        print(f"Wrote {points.actual_count} points to {args.out}")
        return EXIT_OK
    g = build_graph(points, workers=config.workers)
    levels = derive_levels(params, nu_prime=config.nu_prime, nu=config.nu, strict=False)
    print(f"Graph: n={g.n} edges={g.edge_count} R={params.R:.4f}")
    print(f"Levels: low={levels.ell_low} min={levels.ell_min} mid={levels.ell_mid} "
          f"max={levels.ell_max} bdr={levels.ell_bdr}")
    for v in levels.violations:
        print("  violated:", v)
    if args.out:
        write_graph(g, args.out)
        print("Wrote", args.out)
    return EXIT_OK


def _sweep_config(config, args, **overrides):
    return SweepConfig.from_config(config, alphas=getattr(args, "alphas", None),
                                   ns=getattr(args, "ns", None), **overrides)


def cmd_analyze(args, config):
    g = load_graph(args, config)
    settings = SweepConfig.from_config(config, alphas=(g.params.alpha,), ns=(g.params.n,))
    state = CellState(settings, g)
    base = {"alpha": g.params.alpha, "bigc": g.params.C, "n": g.params.n, "seed": g.params.seed}
    rows = [dict(base, **r) for _, _, r in measure(state, args.measurements)]
    print(f"Center component: {state.h.k} vertices ({state.h_method})")
    for row in rows:
        print(f"  {row['measurement']:<24} {row['value']!s:<24} {row['method']} {row['status']}")
    if args.out:
        write_rows(rows, args.out)
        print("Wrote", args.out)
    return EXIT_OK if all(r["status"] in OK_STATUSES for r in rows) else EXIT_PARTIAL


def cmd_certify(args, config):
    g = load_graph(args, config)
    h = center_component(g)
    nu_prime = config.flow_nu_prime if args.nu_prime is None else args.nu_prime
    levels = certificate_levels(h, nu_prime=nu_prime)
    cert = build_flow(h, levels, cap=config.exact_cap, nu_prime=nu_prime, seed=config.seed)
    gap = spectral_gap(h, tol=config.tol, max_iter=config.max_iter, seed=config.seed)
    print(f"Center component: {h.k} vertices, vol {h.vol}")
    print(f"rho_bar = {cert.rho_bar:.6g}, 1/rho_bar = {cert.lower_bound:.6g}, "
          f"lambda_1 = {gap.lambda1:.6g} ({gap.method})")
    print(f"Pairs: Q' {cert.qprime_pairs}, Q'' {cert.qdoubleprime_pairs}, "
          f"fallback {cert.fallback_pairs}; longest path {cert.max_path_length} "
          f"(cap {cert.path_length_cap})")

    base = {"alpha": g.params.alpha, "bigc": g.params.C, "n": g.params.n, "seed": g.params.seed,
            "runtime_s": 0.0, "status": "ok"}
    rows = [dict(base, **r) for r in cert.summary_rows()]
    rows.append(dict(base, **gap.as_row(), measurement="lambda1"))
    if args.out:
        write_rows(rows, args.out)
        print("Wrote", args.out)
    if args.edges:
        cert.write_edge_dump(args.edges)
        print("Wrote", args.edges)

    try:
        bound = sinclair_bound(cert)
    except CertificateError as e:
        print("Certificate rejected:", e)
        return EXIT_PARTIAL
    if bound > gap.lambda1 * (1.0 + SOUNDNESS_SLACK):
        logger.error("certified bound %.9g exceeds the computed gap %.9g", bound, gap.lambda1)
        return EXIT_PARTIAL
    print(f"Certified: lambda_1 >= {bound:.6g}")
    return EXIT_OK


def cmd_sweep(args, config):
    settings = _sweep_config(config, args, seeds=args.seeds, measurements=tuple(args.measurements),
                             out=args.out)
    result = run_sweep(settings, progress=not args.quiet)
    print(f"Wrote {len(result.rows)} rows to {args.out} ({result.failures} failed)")
    return EXIT_PARTIAL if result.partial else EXIT_OK


def cmd_fit(args, config):
    rows = read_rows(args.csv)
    fit = fit_exponent(rows, args.measurement, correction=args.correction, alpha=args.alpha,
                       min_seeds=args.min_seeds)
    print(f"{args.measurement}: {fit}")
    if fit.excluded:
        print(f"  {fit.excluded} nonpositive values excluded")
    return EXIT_OK


def cmd_plot(args, config):
    rows = read_rows(args.csv)
    slope = emit_plot(rows, args.out, args.measurement, correction=args.correction, alpha=args.alpha)
    print("Wrote", args.out, "" if slope is None else f"(slope {slope:.4f})")
    return EXIT_OK


def cmd_draw(args, config):
    g = load_graph(args, config)
    try:
        h = center_component(g)
    except HRGError as e:
        print("No center component:", e)
        h = None
    draw_native(g, h, args.out, draw_edges=not args.no_edges)
    print("Wrote", args.out)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "analyze": cmd_analyze,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "plot": cmd_plot,
    "draw": cmd_draw,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_settings(args)
    except ConfigError as e:
        print("Configuration error:", e, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=getattr(logging, str(config.log_level).upper(), logging.INFO),
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    try:
        if args.save_config:
            config.save_config(args.save_config)
            print("Saved configuration to", args.save_config)
        return COMMANDS[args.command](args, config)
    except (ConfigError, DomainError, SchemaVersionError, FileNotFoundError) as e:
        print("Error:", e, file=sys.stderr)
        return EXIT_CONFIG
    except HRGError as e:
        logger.error("%s failed: %s", args.command, e)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
