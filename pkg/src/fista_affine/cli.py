"""Command-line driver: ``solve``, ``validate`` and ``sweep``.

Exit codes: 0 when every certification passes, 2 when a run completes but a
certification fails, 1 on configuration or build errors. ``solve`` prints
only the path of the summary JSON on stdout; logging goes to stderr at the
level named by ``FISTA_AFFINE_LOG`` (``error``, ``info`` or ``debug``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    build_problem,
    load_config,
    resolve_t_sequence,
    resolve_x0,
)
from .diagnostics import certify_rate, certify_strong_convergence
from .fista import fista_run, picard_run
from .linalg import spectral_norm_sq_upper, power_iteration, SAFETY_FACTOR
from .problem import build_prox_grad, solve_oracle

logger = logging.getLogger("fista_affine")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERT = 2

TRACE_HEADER = ["n", "t_n", "objective_gap", "dist_to_psx0_x", "dist_to_psx0_y",
                "fixed_point_residual", "xy_residual", "momentum_ratio"]


def _fmt(v):
    v = float(v)
    return repr(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_trace_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        cols = (trace.t, trace.objective_gap, trace.dist_x, trace.dist_y,
                trace.fixed_point_residual, trace.xy_residual, trace.momentum_ratio)
        for i in range(len(trace)):
            w.writerow([str(int(trace.n[i]))] + [_fmt(c[i]) for c in cols])


def write_iterates_csv(path, trace):
    d = trace.x.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n"] + [f"x{i}" for i in range(d)] + [f"y{i}" for i in range(d)])
        for i in range(len(trace)):
            w.writerow([str(i)] + [_fmt(v) for v in trace.x[i]] + [_fmt(v) for v in trace.y[i]])


def _resolve_prefix(config, config_path, out_prefix):
    if out_prefix is not None:
        return Path(out_prefix)
    if config.output_prefix is not None:
        p = Path(config.output_prefix)
        return p if p.is_absolute() else Path(config_path).parent / p
    return Path(config_path).with_suffix("")


def _beta_hat(problem):
    if problem.kind == "quadratic_form":
        return SAFETY_FACTOR * power_iteration(problem.A)
    return spectral_norm_sq_upper(problem.A)


def prepare(config):
    """Build everything a run needs; raises :class:`ConfigError`."""
    problem = build_problem(config)
    x0 = resolve_x0(config, problem.dim)
    ts = resolve_t_sequence(config)
    return problem, x0, ts


def run_experiment(config, config_path, out_prefix=None, dump_iterates=False):
    """Run one experiment and write its artifacts.

    Returns ``(exit_status, summary_path)``.
    """
    problem, x0, ts = prepare(config)
    prefix = _resolve_prefix(config, config_path, out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)

    T = build_prox_grad(problem)
    oracle = solve_oracle(problem)
    logger.info("solving %s problem of dimension %d with beta=%r",
                problem.kind, problem.dim, problem.beta)
    trace = fista_run(T, x0, ts, config.max_iter, config.residual_tol, oracle=oracle,
                      store_iterates=dump_iterates)
    psx0 = trace.psx0
    strong = certify_strong_convergence(trace, config.convergence_tol)
    rate = certify_rate(trace, problem.beta, x0, psx0)
    passed = strong.passed and rate.passed and trace.terminated_reason != "diverged"

    name = prefix.name
    trace_path = prefix.parent / f"{name}.trace.csv"
    write_trace_csv(trace_path, trace)
    files = {"trace": trace_path.name}
    if dump_iterates:
        it_path = prefix.parent / f"{name}.iterates.csv"
        write_iterates_csv(it_path, trace)
        files["iterates"] = it_path.name

    baseline = None
    if config.baseline:
        ptrace = picard_run(T, x0, config.max_iter, config.residual_tol, oracle=oracle,
                            store_iterates=False)
        bpath = prefix.parent / f"{name}.baseline.trace.csv"
        write_trace_csv(bpath, ptrace)
        files["baseline_trace"] = bpath.name
        pstrong = certify_strong_convergence(ptrace, config.convergence_tol)
        baseline = {
            "method": "picard",
            "iterations": ptrace.iterations,
            "terminated_reason": ptrace.terminated_reason,
            "final_dist": pstrong.final_dist_x,
            "converged": pstrong.passed,
        }

    summary = {
        "schema": config.schema,
        "passed": passed,
        "problem": {
            "kind": config.problem["kind"],
            "model": problem.kind,
            "dim": problem.dim,
            "constraint_dim": problem.V.dim,
            "beta": problem.beta,
            "beta_hat": _beta_hat(problem),
        },
        "t_sequence": config.t_sequence["family"],
        "iterations": trace.iterations,
        "terminated_reason": trace.terminated_reason,
        "mu": oracle.mu,
        "solution_set_dim": int(oracle.basis.shape[0]),
        "limit": psx0,
        "final_x": trace.final_x,
        "final_y": trace.final_y,
        "strong_convergence": strong.to_dict(),
        "rate_certificate": rate.to_dict(),
        "baseline": baseline,
        "files": files,
    }
    summary_path = prefix.parent / f"{name}.summary.json"
    summary_path.write_text(json.dumps(_json_safe(summary), indent=2, allow_nan=False) + "\n",
                            encoding="utf-8")
    status = EXIT_OK if passed else EXIT_CERT
    if not passed:
        logger.error("certification failed for %s", config_path)
    return status, summary_path


def validate_config(path):
    """Dry run: schema and builder checks, no iterations. Returns a report dict."""
    config = load_config(path)
    problem, x0, ts = prepare(config)
    return {
        "valid": True,
        "kind": config.problem["kind"],
        "model": problem.kind,
        "dim": problem.dim,
        "constraint_dim": problem.V.dim,
        "beta": problem.beta,
        "beta_hat": _beta_hat(problem),
        "t_sequence": config.t_sequence["family"],
        "max_iter": config.max_iter,
    }


def _solve_path(path, out_prefix=None, dump_iterates=False):
    try:
        config = load_config(path)
        status, summary = run_experiment(config, path, out_prefix, dump_iterates)
        return status, str(summary), None
    except ConfigError as exc:
        return EXIT_CONFIG, None, f"{path}: config error: {exc}"


def _configure_logging():
    level = os.environ.get("FISTA_AFFINE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_solve(args):
    status, summary, err = _solve_path(args.config, args.out_prefix, args.dump_iterates)
    if err:
        print(err, file=sys.stderr)
    else:
        print(summary)
    return status


def cmd_validate(args):
    try:
        report = validate_config(args.config)
    except ConfigError as exc:
        print(f"{args.config}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(_json_safe(report), indent=2))
    return EXIT_OK


def cmd_sweep(args):
    paths = sorted(Path(args.config_dir).glob("*.json"))
    if not paths:
        print(f"no *.json configs in {args.config_dir}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_solve_path, paths))
    else:
        results = [_solve_path(p) for p in paths]
    statuses = []
    for status, summary, err in results:
        statuses.append(status)
        if err:
            print(err, file=sys.stderr)
        else:
            print(summary)
    if EXIT_CONFIG in statuses:
        return EXIT_CONFIG
    return EXIT_CERT if EXIT_CERT in statuses else EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="fista-affine",
                                 description="FISTA for affinely constrained quadratic problems")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--dump-iterates", action="store_true",
                   help="also write full iterates to <prefix>.iterates.csv")
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a config without iterating")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="run every *.json config in a directory")
    p.add_argument("--config-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
