import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fista_affine.affine import AffineMap, fixed_point_decompose, identity_map
from fista_affine.fista import (
    GROWTH,
    LOWER,
    TSequenceError,
    fista_run,
    make_t_sequence,
    picard_run,
)
from fista_affine.instances import build_friedrichs, build_shift, random_dense_problem
from fista_affine.linalg import Dense, Diagonal
from fista_affine.problem import build_prox_grad, solve_oracle

NESTEROV = make_t_sequence("nesterov_recursive")
LINEAR = make_t_sequence("linear_half")


def _constant_map(c):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return AffineMap(Dense(np.zeros((c.size, c.size))), c, nonexpansive=True)


def test_nesterov_first_terms():
    assert NESTEROV[0] == 1.0
    assert NESTEROV[1] == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-15)
    assert NESTEROV[1] == pytest.approx(1.6180339887, abs=1e-10)


def test_linear_half_terms():
    np.testing.assert_array_equal(LINEAR.values(3), [1.0, 1.5, 2.0])


def test_nesterov_satisfies_growth_with_equality():
    # exact rational arithmetic on the stored doubles; a float evaluation of
    # t^2 - t near t = 5e4 carries round-off far above 1e-9
    t = NESTEROV.values(100001)
    for a, b in zip(t[:-1].tolist(), t[1:].tolist()):
        lhs = Fraction(a) ** 2
        rhs = Fraction(b) ** 2 - Fraction(b)
        assert lhs >= rhs - Fraction(1, 10**9)
        assert lhs - rhs <= Fraction(1, 10**12) * lhs


def test_custom_constant_sequence_rejected_at_index_one():
    with pytest.raises(TSequenceError) as exc:
        make_t_sequence("custom_explicit", [1.0, 1.0])
    assert exc.value.index == 1 and exc.value.condition == LOWER


def test_custom_growth_violation():
    with pytest.raises(TSequenceError) as exc:
        make_t_sequence("custom_explicit", [1.0, 1.5, 2.6])
    assert exc.value.index == 1 and exc.value.condition == GROWTH


def test_custom_start_must_be_one():
    with pytest.raises(TSequenceError) as exc:
        make_t_sequence("custom_explicit", [1.5, 2.0])
    assert exc.value.index == 0


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 10**6))
def test_linear_half_symbolic_growth(n):
    # (n+2)^2 >= (n+3)^2 - 2(n+3) simplifies to 4n + 4 >= 2n + 3
    assert (n + 2) ** 2 >= (n + 3) ** 2 - 2 * (n + 3)


def test_start_in_fixed_set_is_stationary():
    T = identity_map(3)
    x0 = np.array([1.0, 2.0, 3.0])
    tr = fista_run(T, x0, NESTEROV, max_iter=20, residual_tol=0.0)
    assert np.all(tr.x == x0) and np.all(tr.y == x0)
    assert tr.fixed_point_residual[0] == 0.0 and tr.xy_residual[0] == 0.0


def test_constant_map_hand_recursion():
    tr = fista_run(_constant_map(2.0), np.zeros(1), NESTEROV, max_iter=5, residual_tol=-1.0)
    np.testing.assert_array_equal(tr.x[:, 0], [0.0, 2.0, 2.0, 2.0, 2.0, 2.0])
    np.testing.assert_array_equal(tr.y[1:, 0], [2.0] * 5)
    assert tr.terminated_reason == "max_iter"
    assert list(tr.n) == list(range(6))


def test_constant_map_stops_on_residual():
    tr = fista_run(_constant_map(2.0), np.zeros(1), NESTEROV, max_iter=50)
    assert tr.terminated_reason == "residual_tol" and tr.iterations == 1


def test_friedrichs_two_dimensional_replay():
    # independent 2-D iteration written out with scalar formulas
    c = s = math.cos(math.pi / 4)
    x, y, t = (1.0, 0.0), (1.0, 0.0), 1.0
    expected = [x]
    for _ in range(40):
        tn = (1 + math.sqrt(1 + 4 * t * t)) / 2
        d = y[0] * c
        xn = (d * c, d * s)
        y = (xn[0] + (t - 1) / tn * (xn[0] - x[0]), xn[1] + (t - 1) / tn * (xn[1] - x[1]))
        x, t = xn, tn
        expected.append(x)
    p = build_friedrichs(1, [math.pi / 4])
    T = build_prox_grad(p)
    tr = fista_run(T, np.array([1.0, 0.0]), NESTEROV, max_iter=200, residual_tol=0.0,
                   oracle=solve_oracle(p))
    np.testing.assert_allclose(tr.x[:41], np.array(expected), rtol=1e-12, atol=1e-300)
    hits = np.flatnonzero(tr.dist_x < 1e-6)
    assert hits.size and hits[0] <= 200
    assert hits[0] == 28   # frozen from the scalar replay above


def test_divergence_detected_for_expansive_map():
    T = AffineMap(Diagonal([3.0]), np.zeros(1))
    tr = fista_run(T, np.ones(1), NESTEROV, max_iter=1000)
    assert tr.terminated_reason == "diverged"


def test_custom_sequence_too_short_for_run():
    ts = make_t_sequence("custom_explicit", [1.0, 1.5, 2.0])
    with pytest.raises(ValueError):
        fista_run(identity_map(1), np.ones(1), ts, max_iter=5)


def test_picard_examples():
    tr = picard_run(_constant_map([1.0, -1.0]), np.zeros(2), max_iter=10)
    assert tr.iterations == 1 and tr.terminated_reason == "residual_tol"
    tr = picard_run(identity_map(2), np.array([3.0, 4.0]), max_iter=10)
    assert tr.iterations == 0
    half = AffineMap(Diagonal([0.5]), np.zeros(1))
    tr = picard_run(half, np.array([8.0]), max_iter=30, residual_tol=0.0)
    np.testing.assert_array_equal(tr.x[:, 0], 8.0 * 0.5 ** np.arange(31))
    assert np.all(tr.momentum_ratio == 0.0)


def test_momentum_ratio_close_to_one_after_100():
    for ts in (NESTEROV, LINEAR):
        tr = fista_run(_constant_map(0.0), np.ones(1), ts, max_iter=300, residual_tol=-1.0)
        assert np.all(np.abs(tr.momentum_ratio[100:] - 1.0) <= 0.05)


def _problem(seed):
    problem, x0, _ = random_dense_problem(seed)
    return problem, x0, build_prox_grad(problem), solve_oracle(problem)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_fejer_bound(seed):
    problem, x0, T, oracle = _problem(seed)
    tr = fista_run(T, x0, NESTEROV, max_iter=500, residual_tol=0.0, oracle=oracle)
    rng = np.random.default_rng(seed)
    for s in oracle.sample(rng, 11):
        d = np.linalg.norm(tr.x - s, axis=1)
        assert np.all(d <= np.linalg.norm(x0 - s) + 1e-8)


def test_objective_gap_nonnegative_and_trace_consistent():
    problem, x0, T, oracle = _problem(3)
    tr = fista_run(T, x0, NESTEROV, max_iter=400, oracle=oracle)
    assert np.all(tr.objective_gap >= -1e-9 * (1 + abs(oracle.mu)))
    np.testing.assert_allclose(tr.dist_x, np.linalg.norm(tr.x - tr.psx0, axis=1))
    np.testing.assert_allclose(tr.xy_residual, np.linalg.norm(tr.x - tr.y, axis=1))
    rec = tr.records[5]
    assert rec["n"] == 5 and rec["t_n"] == NESTEROV[5]


def test_residuals_decay_on_shift_example():
    p = build_shift(20)
    T = build_prox_grad(p)
    x0 = np.zeros(20)
    x0[0] = 1.0
    tr = fista_run(T, x0, NESTEROV, max_iter=2000, residual_tol=-1.0, oracle=solve_oracle(p))
    w = 200
    for series in (tr.xy_residual, tr.fixed_point_residual, tr.successive_difference[1:]):
        assert np.median(series[-w:]) <= np.median(series[:w])


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.floats(-3, 3))
def test_linearity_of_iteration_map(seed, alpha):
    problem, _, T, _ = _problem(seed)
    L = T.linear_part()
    rng = np.random.default_rng(seed)
    x0, x1 = rng.standard_normal((2, problem.dim))
    def run(z):
        return fista_run(L, z, NESTEROV, max_iter=50, residual_tol=-1.0).x[50]
    lhs = run(alpha * x0 + x1)
    rhs = alpha * run(x0) + run(x1)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1 + np.linalg.norm(rhs))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_translation_reduction(seed):
    problem, x0, T, _ = _problem(seed)
    a, _ = fixed_point_decompose(T)
    full = fista_run(T, x0, NESTEROV, max_iter=50, residual_tol=-1.0)
    lin = fista_run(T.linear_part(), x0 - a, NESTEROV, max_iter=50, residual_tol=-1.0)
    scale = 1 + np.linalg.norm(x0) + np.linalg.norm(a)
    assert np.max(np.abs((full.x - a) - lin.x)) <= 1e-12 * scale
