"""Affinely constrained convex quadratic problems and their exact solution sets.

A problem is ``minimize f(x) subject to x in V`` where ``f`` is either the
least-squares objective ``1/2 ||Ax - b||^2`` or the quadratic form
``1/2 <x, Ax> + <x, b>`` with ``A`` symmetric positive semidefinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .affine import AffineMap, AffineSubspace, project_affine
from .linalg import (
    AxpyForm,
    Compose,
    Dense,
    DimensionError,
    LinearMap,
    Projector,
    as_vector,
    min_norm_least_squares,
    power_iteration,
    spectral_norm_sq_upper,
    SAFETY_FACTOR,
)

__all__ = [
    "KINDS",
    "SmoothnessError",
    "AffineQuadraticProblem",
    "Oracle",
    "least_squares",
    "alternating_projections",
    "quadratic_form",
    "smoothness_floor",
    "build_prox_grad",
    "solve_oracle",
    "project_solution_set",
    "evaluate_objective",
    "objective_values",
    "smooth_value",
    "gradient",
    "FEASIBILITY_TOL",
]

KINDS = (
    "constrained_least_squares",
    "unconstrained_least_squares",
    "alternating_projections",
    "quadratic_form",
)

FEASIBILITY_TOL = 1e-8
_BETA_SLACK = 1e-9


class SmoothnessError(ValueError):
    """Raised when beta is below the smoothness constant of the objective."""

    def __init__(self, beta, rayleigh_quotient):
        self.beta = beta
        self.rayleigh_quotient = rayleigh_quotient
        super().__init__(
            f"beta={beta!r} is below the curvature {rayleigh_quotient!r} "
            "attained by a Rayleigh quotient; f would not be beta-smooth")


def smoothness_floor(A, kind, seed=0):
    """Curvature lower bound (a Rayleigh quotient) that beta must dominate."""
    op = A if kind == "quadratic_form" else A.gram()
    return power_iteration(op, seed=seed)


@dataclass(frozen=True, eq=False)
class AffineQuadraticProblem:
    A: LinearMap
    b: np.ndarray
    V: AffineSubspace
    beta: float
    kind: str
    U: AffineSubspace | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        object.__setattr__(self, "b", as_vector(self.b, self.A.out_dim, "b"))
        if self.V.ambient_dim != self.A.in_dim:
            raise DimensionError(self.A.in_dim, self.V.ambient_dim, "constraint set")
        if self.kind == "alternating_projections" and self.U is None:
            raise ValueError("alternating projections need the subspace U")
        if self.kind == "quadratic_form":
            M = self.A.to_dense()
            if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, rtol=0, atol=1e-12):
                raise ValueError("quadratic form matrix must be symmetric")
            if np.linalg.eigvalsh(M).min() < -1e-10:
                raise ValueError("quadratic form matrix must be positive semidefinite")
        beta = float(self.beta)
        if not math.isfinite(beta) or beta <= 0:
            raise ValueError("beta must be positive and finite (A must be nonzero)")
        object.__setattr__(self, "beta", beta)
        rq = smoothness_floor(self.A, self.kind)
        if beta < rq - _BETA_SLACK:
            raise SmoothnessError(beta, rq)

    @property
    def dim(self):
        return self.A.in_dim


def _resolve_beta(A, kind, beta):
    if isinstance(beta, str):
        if beta != "auto":
            raise ValueError(f"beta must be a number or 'auto', got {beta!r}")
        if kind == "quadratic_form":
            est = SAFETY_FACTOR * power_iteration(A)
        else:
            est = spectral_norm_sq_upper(A)
        if est <= 0:
            raise ValueError("A must be nonzero")
        return est
    return float(beta)


def least_squares(A, b, V=None, beta="auto"):
    """``1/2 ||Ax - b||^2`` over `V` (the whole space when `V` is None)."""
    if V is None:
        V = AffineSubspace.whole_space(A.in_dim)
        kind = "unconstrained_least_squares"
    else:
        kind = "constrained_least_squares"
    return AffineQuadraticProblem(A, b, V, _resolve_beta(A, kind, beta), kind)


def alternating_projections(U, V):
    """``1/2 d_U^2`` over `V`, i.e. ``A = P_{(par U)^perp}``, ``b = u_0``, ``beta = 1``."""
    if U.ambient_dim != V.ambient_dim:
        raise DimensionError(V.ambient_dim, U.ambient_dim, "subspace U")
    A = AxpyForm(1.0, U.parallel_projector())
    return AffineQuadraticProblem(A, U.anchor, V, 1.0, "alternating_projections", U=U)


def quadratic_form(A, b, V=None, beta="auto"):
    """``1/2 <x, Ax> + <x, b>`` over `V`; beta must dominate ``||A||``."""
    if V is None:
        V = AffineSubspace.whole_space(A.in_dim)
    return AffineQuadraticProblem(A, b, V, _resolve_beta(A, "quadratic_form", beta),
                                  "quadratic_form")


def _is_whole_space(V):
    return V.codim == 0


def _least_squares_operator(A, b, V, beta):
    grad_step = AxpyForm(1.0 / beta, A.gram())
    Atb = A.rapply(b)
    if _is_whole_space(V):
        return AffineMap(grad_step, Atb / beta, nonexpansive=True)
    P = V.parallel_projector()
    return AffineMap(Compose(P, grad_step), P.apply(Atb) / beta + V.anchor, nonexpansive=True)


def build_prox_grad(problem, via_formula=False, probes=20, seed=0):
    """The proximal gradient operator ``T = P_V (Id - grad f / beta)`` as an affine map.

    For the alternating-projections kind the operator is assembled as
    ``P_V P_U`` directly unless `via_formula` is set, in which case the
    generic least-squares expression with ``A = P_{(par U)^perp}`` is used.
    The result is probed for nonexpansiveness on random pairs.
    """
    p = problem
    V = p.V
    if p.kind == "quadratic_form":
        grad_step = AxpyForm(1.0 / p.beta, p.A)
        if _is_whole_space(V):
            T = AffineMap(grad_step, -p.b / p.beta, nonexpansive=True)
        else:
            P = V.parallel_projector()
            T = AffineMap(Compose(P, grad_step), -P.apply(p.b) / p.beta + V.anchor,
                          nonexpansive=True)
    elif p.kind == "alternating_projections" and not via_formula:
        PV = V.parallel_projector()
        PU = p.U.parallel_projector()
        T = AffineMap(Compose(PV, PU), PV.apply(p.U.anchor) + V.anchor, nonexpansive=True)
    else:
        T = _least_squares_operator(p.A, p.b, V, p.beta)
    _probe_nonexpansive(T, probes, seed)
    return T


def _probe_nonexpansive(T, probes, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T.dim, probes))
    Y = rng.standard_normal((T.dim, probes))
    num = np.linalg.norm(T(X) - T(Y), axis=0)
    den = np.linalg.norm(X - Y, axis=0)
    worst = float(np.max(num / den))
    if worst > 1 + 1e-10:
        raise ValueError(f"operator failed the nonexpansiveness probe (ratio {worst!r})")


def smooth_value(problem, x):
    """The smooth part ``f`` at `x` (columns of a 2-D `x` are evaluated separately)."""
    x = np.asarray(x, dtype=np.float64)
    if problem.kind == "quadratic_form":
        Ax = problem.A.apply(x)
        b = problem.b if x.ndim == 1 else problem.b[:, None]
        return 0.5 * np.sum(x * Ax, axis=0) + np.sum(x * b, axis=0)
    b = problem.b if x.ndim == 1 else problem.b[:, None]
    r = problem.A.apply(x) - b
    return 0.5 * np.sum(r * r, axis=0)


def gradient(problem, x):
    x = np.asarray(x, dtype=np.float64)
    if problem.kind == "quadratic_form":
        return problem.A.apply(x) + problem.b
    return problem.A.rapply(problem.A.apply(x) - problem.b)


def objective_values(problem, X):
    """``F = f + indicator_V`` at each column of `X`; infeasible columns give ``inf``."""
    X = np.asarray(X, dtype=np.float64)
    dist = np.linalg.norm(X - project_affine(problem.V, X), axis=0)
    feasible = dist <= FEASIBILITY_TOL * (1.0 + np.linalg.norm(X, axis=0))
    vals = np.asarray(smooth_value(problem, X), dtype=np.float64)
    return np.where(feasible, vals, np.inf)


def evaluate_objective(problem, x):
    x = as_vector(x, problem.dim, "x")
    return float(objective_values(problem, x[:, None])[0])


@dataclass(frozen=True, eq=False)
class Oracle:
    """The solution set ``S = anchor + span(basis)`` and the optimal value ``mu``."""

    anchor: np.ndarray
    basis: np.ndarray
    mu: float
    problem: AffineQuadraticProblem | None = None

    def project(self, x0):
        return project_solution_set(self, x0)

    def as_subspace(self):
        return AffineSubspace(self.anchor, self.basis)

    def objective(self, X):
        return objective_values(self.problem, X)

    def sample(self, rng, count):
        """`count` random points of S (the anchor first)."""
        pts = [np.array(self.anchor)]
        for _ in range(count - 1):
            c = rng.standard_normal(self.basis.shape[0])
            pts.append(self.anchor + self.basis.T @ c)
        return pts


def _data_scale(problem):
    # A reduced matrix that is pure round-off (e.g. U = V for alternating
    # projections) must be ranked against the curvature scale of the problem,
    # not against its own size: sqrt(beta) bounds ||A M|| and beta bounds the
    # reduced Hessian of a quadratic form.
    return problem.beta if problem.kind == "quadratic_form" else math.sqrt(problem.beta)


def solve_oracle(problem):
    """Solve the problem exactly by reducing it to an unconstrained least-squares
    problem over ``par V`` and taking the SVD pseudoinverse.

    The solution set is returned as the minimum-norm reduced solution plus
    the image of the reduced kernel.
    """
    p = problem
    V = p.V
    n = p.dim
    M = V.basis.T
    k = M.shape[1]
    if k == 0:
        anchor = np.array(V.anchor)
        basis = np.zeros((0, n))
    elif p.kind == "quadratic_form":
        H = M.T @ p.A.apply(M)
        H = 0.5 * (H + H.T)
        g = M.T @ (p.A.apply(V.anchor) + p.b)
        z, K = min_norm_least_squares(Dense(H), -g, _data_scale(p))
        if np.linalg.norm(H @ z + g) > 1e-9 * (1.0 + np.linalg.norm(g)):
            raise ValueError("quadratic form is unbounded below on V; no minimizer")
        anchor = V.anchor + M @ z
        basis = K @ M.T
    else:
        AM = p.A.apply(M)
        z, K = min_norm_least_squares(Dense(AM), p.b - p.A.apply(V.anchor), _data_scale(p))
        anchor = V.anchor + M @ z
        basis = K @ M.T
    mu = float(smooth_value(p, anchor))
    anchor.flags.writeable = False
    basis = np.ascontiguousarray(basis)
    basis.flags.writeable = False
    return Oracle(anchor, basis, mu, p)


def project_solution_set(oracle, x0):
    x0 = np.asarray(x0, dtype=np.float64)
    B = oracle.basis
    return oracle.anchor + B.T @ (B @ (x0 - oracle.anchor))
