"""Concrete problem instances: finite truncations of the classic pathological
sequence-space examples, and a seeded generator of random dense problems.

Truncations replace sequence spaces by ``R^m`` with the standard basis and
0-based indexing. They illustrate the infinite-dimensional behaviour; no
quantitative truncation error is claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .affine import AffineSubspace, fixed_point_decompose, principal_angle_deviation
from .linalg import (
    AxpyForm,
    Dense,
    Diagonal,
    RightShift,
    min_norm_least_squares,
    rank_cutoff,
)
from .problem import (
    alternating_projections,
    build_prox_grad,
    least_squares,
    quadratic_form,
    solve_oracle,
)

__all__ = [
    "gamma_values",
    "build_friedrichs",
    "build_shift",
    "build_diagonal",
    "build_alternating",
    "smallest_nonzero_singular_value",
    "reduced_condition_number",
    "SuiteCase",
    "random_dense_problem",
    "default_suite",
    "FRIEDRICHS_START",
    "DIAGONAL_START",
    "DEFAULT_RATIO",
]

FRIEDRICHS_START = math.pi / 4
DIAGONAL_START = 1.0
DEFAULT_RATIO = 0.8


def gamma_values(schedule, m, start):
    """Expand a schedule description into ``m`` values.

    `schedule` is ``None`` (geometric, ratio 0.8), a plain sequence of
    values, or a mapping with ``kind`` in ``{"geometric", "harmonic",
    "explicit"}``. Geometric and harmonic schedules begin at `start` unless
    the mapping overrides it.
    """
    if schedule is None:
        schedule = {"kind": "geometric", "ratio": DEFAULT_RATIO}
    if not isinstance(schedule, dict):
        schedule = {"kind": "explicit", "values": list(schedule)}
    kind = schedule.get("kind")
    s0 = float(schedule.get("start", start))
    if kind == "geometric":
        vals = s0 * float(schedule["ratio"]) ** np.arange(m)
    elif kind == "harmonic":
        vals = s0 / np.arange(1, m + 1)
    elif kind == "explicit":
        vals = np.asarray(schedule["values"], dtype=np.float64)
        if vals.shape != (m,):
            raise ValueError(f"explicit schedule has {vals.size} values, expected {m}")
    else:
        raise ValueError(f"unknown gamma schedule kind {kind!r}")
    return np.asarray(vals, dtype=np.float64)


def build_friedrichs(m, gamma_schedule=None):
    """Alternating projections between ``U = span{e_0, e_2, ...}`` and
    ``V = span{cos(g_k) e_{2k} + sin(g_k) e_{2k+1}}`` in ``R^{2m}``.

    The angles must lie in ``]0, pi/2[`` and decrease strictly; the solution
    set is ``{0}`` for every ``m``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    g = gamma_values(gamma_schedule, m, FRIEDRICHS_START)
    if np.any(g <= 0) or np.any(g >= math.pi / 2):
        raise ValueError("Friedrichs angles must lie strictly between 0 and pi/2")
    if np.any(np.diff(g) >= 0):
        raise ValueError("Friedrichs angles must be strictly decreasing")
    n = 2 * m
    Ub = np.zeros((m, n))
    Vb = np.zeros((m, n))
    for k in range(m):
        Ub[k, 2 * k] = 1.0
        Vb[k, 2 * k] = math.cos(g[k])
        Vb[k, 2 * k + 1] = math.sin(g[k])
    U = AffineSubspace(np.zeros(n), Ub)
    V = AffineSubspace(np.zeros(n), Vb)
    return alternating_projections(U, V)


def build_shift(m, beta="auto"):
    """``A = Id - R`` with the truncated right shift ``R``, ``b = 0``, ``V = R e_0``."""
    if m < 2:
        raise ValueError("m must be at least 2")
    A = AxpyForm(1.0, RightShift(m))
    e0 = np.zeros(m)
    e0[0] = 1.0
    V = AffineSubspace(np.zeros(m), e0[None, :])
    return least_squares(A, np.zeros(m), V, beta)


def build_diagonal(m, gamma_schedule=None, beta="auto"):
    """Unconstrained least squares with ``A = Diag(gamma)`` and ``b = 0``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    g = gamma_values(gamma_schedule, m, DIAGONAL_START)
    if np.any(g <= 0):
        raise ValueError("diagonal weights must be positive")
    if np.any(np.diff(g) > 0):
        raise ValueError("diagonal weights must be non-increasing")
    return least_squares(Diagonal(g), np.zeros(m), None, beta)


def _intersection(U, V):
    """Minimum-norm point of ``U ∩ V`` and a basis of its direction, or ``None``."""
    n = U.ambient_dim
    ImPU = np.eye(n) - U.basis.T @ U.basis
    ImPV = np.eye(n) - V.basis.T @ V.basis
    M = np.vstack([ImPU, ImPV])
    rhs = np.concatenate([U.anchor, V.anchor])
    x, K = min_norm_least_squares(Dense(M), rhs)
    if np.linalg.norm(M @ x - rhs) > 1e-9 * (1 + np.linalg.norm(rhs)):
        return None
    return x, K


def build_alternating(U, V, tol=1e-9):
    """Alternating projections ``T = P_V P_U`` for affine subspaces `U` and `V`.

    The fixed-point set of ``P_V P_U`` is computed up front (raising
    :class:`~fista_affine.affine.NoFixedPointError` when empty) and, when
    ``U`` and ``V`` intersect, checked against the intersection.
    """
    problem = alternating_projections(U, V)
    fix = fixed_point_decompose(build_prox_grad(problem), tol)
    inter = _intersection(U, V)
    if inter is not None:
        x, K = inter
        n = U.ambient_dim
        if (principal_angle_deviation(K, fix.fix_basis, n) > 1e-7
                or np.linalg.norm(x - fix.point) > 1e-7 * (1 + np.linalg.norm(x))):
            raise ArithmeticError("Fix(P_V P_U) disagrees with the intersection of U and V")
    return problem


def smallest_nonzero_singular_value(A):
    s = np.linalg.svd(A.to_dense(), compute_uv=False)
    s = s[s > rank_cutoff(A.shape, s[0])]
    return float(s[-1])


def reduced_condition_number(problem):
    """``beta / lambda_min^+`` of the Hessian restricted to ``par V``.

    This ratio is what governs the speed of the iteration on the problem.
    """
    M = problem.V.basis.T
    if M.shape[1] == 0:
        return 1.0
    if problem.kind == "quadratic_form":
        H = M.T @ problem.A.apply(M)
    else:
        AM = problem.A.apply(M)
        H = AM.T @ AM
    ev = np.linalg.eigvalsh(0.5 * (H + H.T))
    pos = ev[ev > rank_cutoff(H.shape, max(ev.max(), 0.0))] if ev.max() > 0 else ev[:0]
    if pos.size == 0:
        return 1.0
    return float(problem.beta / pos.min())


@dataclass(frozen=True, eq=False)
class SuiteCase:
    name: str
    problem: object
    x0: np.ndarray
    condition: float


def _random_orthonormal(rng, n, k):
    Q, R = np.linalg.qr(rng.standard_normal((n, k)))
    return Q * np.sign(np.diag(R))


def _draw(rng, kind, max_condition):
    n = int(rng.integers(2, 51))
    codim = int(rng.integers(0, min(3, n - 1) + 1))
    kappa = 10 ** rng.uniform(0, math.log10(max_condition))
    scale = 10 ** rng.uniform(-1, 1)
    if codim == 0:
        V = None
    else:
        basis = _random_orthonormal(rng, n, n - codim).T
        V = AffineSubspace.from_spanning(rng.standard_normal(n), basis)
    if kind == "quadratic_form":
        r = n - int(rng.integers(0, 3)) if n > 2 else n
        ev = scale * kappa ** (-np.linspace(0, 1, r)) if r > 1 else np.array([scale])
        Q = _random_orthonormal(rng, n, r)
        A = Dense(Q @ np.diag(ev) @ Q.T)
        b = rng.standard_normal(n)
        if r < n:
            # keep the linear term in ran A so the objective stays bounded below
            b = Q @ (Q.T @ b)
        problem = quadratic_form(A, b, V)
    else:
        m = int(rng.integers(1, n + 11))
        r = min(m, n)
        if r > 1 and rng.random() < 0.3:
            r -= int(rng.integers(1, min(3, r - 1) + 1))
        s = scale * kappa ** (-np.linspace(0, 0.5, r)) if r > 1 else np.array([scale])
        A = Dense(_random_orthonormal(rng, m, r) @ np.diag(s) @ _random_orthonormal(rng, n, r).T)
        problem = least_squares(A, rng.standard_normal(m), V)
    return problem, n


def random_dense_problem(seed, kind="least_squares", max_condition=1e3):
    """A random dense problem whose reduced condition number is at most `max_condition`.

    Draws are repeated (deterministically) until the condition holds.
    Returns ``(problem, x0, condition)``.
    """
    rng = np.random.default_rng(seed)
    while True:
        problem, n = _draw(rng, kind, max_condition)
        cond = reduced_condition_number(problem)
        if cond <= max_condition:
            x0 = rng.standard_normal(n)
            return problem, x0, cond


def default_suite(count=24, seed=20260402, quadratic_every=6):
    """The randomized benchmark suite; every `quadratic_every`-th case is a quadratic form."""
    cases = []
    for i in range(count):
        kind = "quadratic_form" if quadratic_every and i % quadratic_every == quadratic_every - 1 \
            else "least_squares"
        problem, x0, cond = random_dense_problem(seed + i, kind)
        cases.append(SuiteCase(f"{kind}-{i:02d}", problem, x0, cond))
    return cases


def oracle_for(case):
    return solve_oracle(case.problem)
