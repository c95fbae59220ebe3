"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are also
collected into a terminal summary section named "acceptance criteria".
"""

import math
import shutil
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from acceptance_report import report
from fista_affine.affine import (
    AffineMap,
    AffineSubspace,
    fixed_point_decompose,
    principal_angle_deviation,
    range_complement_check,
)
from fista_affine.diagnostics import (
    certify_rate,
    certify_strong_convergence,
    residual_decay,
)
from fista_affine.fista import LOWER, GROWTH, START, UPPER, fista_run, lower_bound, make_t_sequence, upper_bound
from fista_affine.instances import build_diagonal, build_friedrichs, build_shift, default_suite
from fista_affine.linalg import Compose, Dense
from fista_affine.problem import build_prox_grad, solve_oracle

FAMILIES = ("nesterov_recursive", "linear_half")
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="module")
def suite():
    cases = default_suite()
    prepared = []
    for case in cases:
        T = build_prox_grad(case.problem)
        prepared.append((case, T, solve_oracle(case.problem)))
    return prepared


@pytest.fixture(scope="module")
def suite_runs(suite):
    """Nesterov runs for criteria 1 and 4, timed as a whole."""
    ts = make_t_sequence("nesterov_recursive")
    start = time.perf_counter()
    runs = [fista_run(T, case.x0, ts, 20000, oracle=oracle) for case, T, oracle in suite]
    return runs, time.perf_counter() - start


def test_criterion_1_strong_convergence(suite, suite_runs):
    runs, elapsed = suite_runs
    # the oracle build is part of the workload
    start = time.perf_counter()
    for case, _, _ in suite:
        solve_oracle(case.problem)
    elapsed += time.perf_counter() - start
    finals = [certify_strong_convergence(tr, 1e-6).final_dist_x for tr in runs]
    worst = max(finals)
    dims = [case.problem.dim for case, _, _ in suite]
    conds = [case.condition for case, _, _ in suite]
    codims = [case.problem.V.codim for case, _, _ in suite]
    shape_ok = (len(suite) >= 20 and min(dims) >= 2 and max(dims) <= 50 and max(conds) <= 1e3
                and min(codims) >= 0 and max(codims) <= 3)
    passed = shape_ok and worst <= 1e-6 and elapsed <= 60.0
    report(1, "strong convergence to P_S x0", passed,
           f"{len(suite)} problems (dims {min(dims)}-{max(dims)}, codim {min(codims)}-{max(codims)}, "
           f"reduced condition <= {max(conds):.0f}), worst final distance {worst:.2e} <= 1e-6, "
           f"max iterations {max(tr.iterations for tr in runs)}, runtime {elapsed:.1f}s <= 60s")
    assert passed


def _example_start(dim):
    # full-support start: every mode of the operator is excited
    return np.ones(dim) / math.sqrt(dim)


def test_criterion_2_examples_converge_to_zero():
    ts = make_t_sequence("nesterov_recursive")
    gamma = np.maximum(0.1, 0.8 ** np.arange(30))
    problems = {
        "friedrichs(m=25)": build_friedrichs(25, {"kind": "geometric", "ratio": 0.8}),
        "shift(m=50)": build_shift(50),
        "diagonal(m=30)": build_diagonal(30, list(gamma)),
    }
    start = time.perf_counter()
    details, ok = [], True
    for name, p in problems.items():
        oracle = solve_oracle(p)
        assert np.all(oracle.anchor == 0.0) and oracle.basis.shape[0] == 0
        tr = fista_run(build_prox_grad(p), _example_start(p.dim), ts, 50000, oracle=oracle,
                       store_iterates=False)
        d = certify_strong_convergence(tr, 1e-5).final_dist_x
        ok &= d <= 1e-5
        details.append(f"{name} {d:.2e} after {tr.iterations}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 120.0
    report(2, "pathological examples converge to 0", ok,
           "; ".join(details) + f" (threshold 1e-5, runtime {elapsed:.1f}s)")
    assert ok


def test_criterion_3_rate_certificate(suite):
    worst_ratio, failures = 0.0, []
    for family in FAMILIES:
        ts = make_t_sequence(family)
        for case, T, oracle in suite:
            tr = fista_run(T, case.x0, ts, 20000, oracle=oracle, store_iterates=False)
            cert = certify_rate(tr, case.problem.beta, case.x0, tr.psx0)
            if cert.bound_constant > 0:
                worst_ratio = max(worst_ratio, cert.sup_scaled_gap / cert.bound_constant)
            if not cert.passed:
                failures.append(f"{case.name}/{family}")
    passed = not failures
    report(3, "rate certificate", passed,
           f"{2 * len(suite)} runs (both families), max sup/bound = {worst_ratio:.3f} "
           f"<= 1+1e-6" + (f"; failing: {failures}" if failures else ""))
    assert passed


def test_criterion_4_fejer_bound(suite, suite_runs):
    runs, _ = suite_runs
    rng = np.random.default_rng(4)
    worst = -math.inf
    for (case, _, oracle), tr in zip(suite, runs):
        for s in oracle.sample(rng, 10):
            excess = np.linalg.norm(tr.x - s, axis=1) - np.linalg.norm(case.x0 - s)
            worst = max(worst, float(excess.max()))
    passed = worst <= 1e-8
    report(4, "Fejer bound", passed,
           f"max over n and 10 points of S per problem of ||x_n-s|| - ||x_0-s|| = {worst:.2e} <= 1e-8")
    assert passed


def test_criterion_5_residual_decay(suite):
    ts = make_t_sequence("nesterov_recursive")
    keys = ("xy_residual", "fixed_point_residual", "successive_difference")
    failures, worst = [], 0.0
    for case, T, _ in suite:
        tr = fista_run(T, case.x0, ts, 2000, store_iterates=False)
        rep = residual_decay(tr)
        ratio = max(rep.ratio(k) for k in keys)
        worst = max(worst, ratio)
        if ratio > 1e-3:
            failures.append(f"{case.name} (condition {case.condition:.0f}, tail/head {ratio:.1e})")
    passed = not failures
    report(5, "residual decay", passed,
           f"max tail/head median ratio {worst:.1e} vs 1e-3 over {len(suite)} runs of at most "
           f"2000 iterations" + (f"; failing: {', '.join(failures)}" if failures else ""))
    assert passed


def _t_violation(ts, count):
    t = ts.values(count + 1).tolist()
    if t[0] != 1.0:
        return 0, START
    for n in range(count):
        if t[n] < lower_bound(n):
            return n, LOWER
        if t[n] > upper_bound(n) + 1e-9:
            return n, UPPER
        a, b = Fraction(t[n]), Fraction(t[n + 1])
        if a * a < b * b - b - Fraction(1, 10**9):
            return n, GROWTH
    return None


def test_criterion_6_t_sequence_invariants():
    horizon = 10**5
    details, ok = [], True
    for family in FAMILIES:
        ts = make_t_sequence(family)
        violation = _t_violation(ts, horizon + 1)
        t = ts.values(horizon + 2)
        ratio = (t[1000:horizon + 1] - 1.0) / t[1001:horizon + 2]
        dev = float(np.max(np.abs(ratio - 1.0)))
        ok &= violation is None and dev <= 0.01
        details.append(f"{family}: bounds {'hold' if violation is None else violation}, "
                       f"max |ratio-1| for n>=1000 = {dev:.2e}")
    report(6, "t-sequence invariants up to n=1e5", ok, "; ".join(details))
    assert ok


def _random_nonexpansive_linear(rng, n):
    kind = rng.integers(3)
    if kind == 0:
        U = AffineSubspace.from_spanning(np.zeros(n), list(rng.standard_normal((rng.integers(0, n + 1), n))))
        V = AffineSubspace.from_spanning(np.zeros(n), list(rng.standard_normal((rng.integers(0, n + 1), n))))
        return Compose(V.parallel_projector(), U.parallel_projector())
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    if kind == 1:
        d = rng.uniform(-1, 1, n)
        d[: rng.integers(0, n + 1)] = 1.0
        return Dense(Q @ np.diag(d) @ Q.T)
    return Dense(0.5 * (np.eye(n) + Q))


def test_criterion_7_structural_equalities(suite):
    worst_angle, worst_member = 0.0, 0.0
    for case, T, oracle in suite:
        fix = fixed_point_decompose(T)
        n = case.problem.dim
        worst_angle = max(worst_angle, principal_angle_deviation(fix.fix_basis, oracle.basis, n))
        a_in_S = np.linalg.norm(fix.point - oracle.project(fix.point))
        s_in_fix = np.linalg.norm(T(oracle.anchor) - oracle.anchor)
        worst_member = max(worst_member, a_in_S / (1 + np.linalg.norm(fix.point)),
                           s_in_fix / (1 + np.linalg.norm(oracle.anchor)))
    rng = np.random.default_rng(7)
    worst_formula = 0.0
    for m in (1, 5, 25):
        p = build_friedrichs(m)
        X = rng.standard_normal((2 * m, 100))
        diff = build_prox_grad(p)(X) - build_prox_grad(p, via_formula=True)(X)
        worst_formula = max(worst_formula, float(np.max(np.abs(diff))))
    worst_range = 0.0
    for _ in range(50):
        L = _random_nonexpansive_linear(rng, int(rng.integers(1, 11)))
        worst_range = max(worst_range, range_complement_check(L).deviation)
    passed = (worst_angle <= 1e-7 and worst_member <= 1e-8 and worst_formula <= 1e-12
              and worst_range <= 1e-8)
    report(7, "structural equalities", passed,
           f"Fix T vs S angle {worst_angle:.1e} <= 1e-7, cross-membership {worst_member:.1e} <= 1e-8; "
           f"prox-grad formula vs P_V P_U {worst_formula:.1e} <= 1e-12; "
           f"range/complement deviation {worst_range:.1e} <= 1e-8 on 50 maps")
    assert passed


def test_criterion_8_exact_commutation(suite):
    ts = make_t_sequence("nesterov_recursive")
    rng = np.random.default_rng(8)
    worst_lin, worst_shift, worst_abs = 0.0, 0.0, 0.0
    for case, T, _ in suite:
        L = T.linear_part()
        n = case.problem.dim
        x, xp = rng.standard_normal((2, n))
        alpha = float(rng.uniform(-3, 3))
        run = lambda z: fista_run(L, z, ts, 50, -1.0).x[50]
        rhs = alpha * run(x) + run(xp)
        worst_lin = max(worst_lin, np.linalg.norm(run(alpha * x + xp) - rhs) / (1 + np.linalg.norm(rhs)))
        a = fixed_point_decompose(T).point
        full = fista_run(T, case.x0, ts, 50, -1.0)
        lin = fista_run(L, case.x0 - a, ts, 50, -1.0)
        scale = 1 + np.linalg.norm(case.x0) + np.linalg.norm(a)
        gap = float(np.max(np.abs((full.x - a) - lin.x)))
        worst_abs = max(worst_abs, gap)
        worst_shift = max(worst_shift, gap / scale)
    passed = worst_lin <= 1e-9 and worst_shift <= 1e-12
    report(8, "exact commutation", passed,
           f"linearity of x0 -> x_50 {worst_lin:.1e} <= 1e-9; "
           f"translation replay over 50 steps {worst_shift:.1e} <= 1e-12 relative to "
           f"1+||x0||+||a|| (absolute {worst_abs:.1e})")
    assert passed


def test_criterion_9_cli_determinism(tmp_path):
    configs = sorted(CONFIGS.glob("*.json"))
    snapshots = []
    for run in ("first", "second"):
        d = tmp_path / run
        d.mkdir()
        for cfg in configs:
            shutil.copy(cfg, d / cfg.name)
        for cfg in configs:
            proc = subprocess.run([sys.executable, "-m", "fista_affine", "solve", "--config",
                                   str(d / cfg.name), "--dump-iterates"],
                                  capture_output=True, text=True, check=False)
            assert proc.returncode == 0, proc.stderr
        snapshots.append({p.relative_to(d / "out").as_posix(): p.read_bytes()
                          for p in sorted((d / "out").iterdir())})
    identical = snapshots[0] == snapshots[1]
    passed = identical and len(configs) >= 5
    report(9, "CLI determinism", passed,
           f"{len(configs)} golden configs, {len(snapshots[0])} CSV/JSON artifacts, "
           f"byte-identical across two runs: {identical}")
    assert passed
