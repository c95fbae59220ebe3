"""FISTA with admissible momentum sequences, plus an unaccelerated baseline."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "FAMILIES",
    "TSequence",
    "TSequenceError",
    "make_t_sequence",
    "lower_bound",
    "upper_bound",
    "SolveTrace",
    "fista_run",
    "picard_run",
    "DEFAULT_MAX_ITER",
    "DEFAULT_RESIDUAL_TOL",
    "DIVERGENCE_FACTOR",
]

logger = logging.getLogger(__name__)

FAMILIES = ("nesterov_recursive", "linear_half", "custom_explicit")

DEFAULT_MAX_ITER = 10000
DEFAULT_RESIDUAL_TOL = 1e-10
DIVERGENCE_FACTOR = 1e12

LOWER = "lower bound t_n >= (n+2)/2"
GROWTH = "growth bound t_n^2 >= t_{n+1}^2 - t_{n+1}"
START = "start t_0 = 1"
UPPER = "upper bound t_n <= (n+1+sqrt(n+1))/2"


class TSequenceError(ValueError):
    """A parameter sequence violates an admissibility condition."""

    def __init__(self, index, condition, value=None):
        self.index = index
        self.condition = condition
        msg = f"t-sequence violates the {condition} at index {index}"
        if value is not None:
            msg += f" (t_{index} = {value!r})"
        super().__init__(msg)


def lower_bound(n):
    return (n + 2) / 2


def upper_bound(n):
    return (n + 1 + math.sqrt(n + 1)) / 2


def _growth_ok(t_n, t_next):
    """Exact rational check of ``t_n^2 >= t_next^2 - t_next`` on the stored doubles."""
    a, b = Fraction(t_n), Fraction(t_next)
    return a * a >= b * b - b


# Shared cache of the Nesterov recursion; values are deterministic so growing it
# in place is safe.
_NESTEROV = [1.0]


def _grow_nesterov(count):
    vals = _NESTEROV
    while len(vals) < count:
        t = vals[-1]
        nxt = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        # Round-off may push the stored value just past the recursion's root;
        # step down until the growth bound holds exactly.
        while not _growth_ok(t, nxt):
            nxt = math.nextafter(nxt, 0.0)
        vals.append(nxt)


@dataclass(frozen=True)
class TSequence:
    """Momentum parameters ``t_0, t_1, ...``.

    ``nesterov_recursive`` uses ``t_{n+1} = (1 + sqrt(1 + 4 t_n^2)) / 2``;
    ``linear_half`` uses ``t_n = (n + 2) / 2``; ``custom_explicit`` holds a
    finite, user-supplied list.
    """

    family: str
    explicit: tuple = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown t-sequence family {self.family!r}")
        object.__setattr__(self, "explicit", tuple(float(v) for v in self.explicit))

    @property
    def length(self):
        """Number of available terms (``None`` if unbounded)."""
        return len(self.explicit) if self.family == "custom_explicit" else None

    def values(self, count):
        if self.family == "nesterov_recursive":
            _grow_nesterov(count)
            return np.array(_NESTEROV[:count])
        if self.family == "linear_half":
            return (np.arange(count, dtype=np.float64) + 2.0) / 2.0
        if count > len(self.explicit):
            raise ValueError(f"custom t-sequence has {len(self.explicit)} terms, "
                             f"{count} needed")
        return np.array(self.explicit[:count])

    def __getitem__(self, n):
        return float(self.values(n + 1)[n])


def validate_terms(values):
    """Raise :class:`TSequenceError` at the first index violating admissibility."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("empty t-sequence")
    if vals[0] != 1.0:
        raise TSequenceError(0, START, vals[0])
    for n, t in enumerate(vals):
        if not math.isfinite(t) or t < lower_bound(n):
            raise TSequenceError(n, LOWER, t)
        if n + 1 < len(vals) and not _growth_ok(t, vals[n + 1]):
            raise TSequenceError(n, GROWTH, t)


def make_t_sequence(family, params=None):
    """Build a validated parameter sequence.

    `params` is only used by ``custom_explicit``: either the list of values
    or a mapping with key ``"values"``.
    """
    if family == "custom_explicit":
        values = params.get("values") if isinstance(params, dict) else params
        if values is None:
            raise ValueError("custom_explicit needs a list of values")
        validate_terms(values)
        return TSequence(family, tuple(values))
    return TSequence(family)


@dataclass
class SolveTrace:
    """Per-iteration diagnostics of a run, stored column-wise.

    Index ``n`` of every array refers to ``(x_n, y_n)``. Iterates themselves
    are kept in `x` and `y` (shape ``(len, dim)``) unless the run was asked
    not to store them.
    """

    n: np.ndarray
    t: np.ndarray
    objective_gap: np.ndarray
    dist_x: np.ndarray
    dist_y: np.ndarray
    fixed_point_residual: np.ndarray
    xy_residual: np.ndarray
    momentum_ratio: np.ndarray
    successive_difference: np.ndarray
    terminated_reason: str
    final_x: np.ndarray
    final_y: np.ndarray
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    psx0: np.ndarray | None = None
    mu: float | None = None
    method: str = "fista"

    def __len__(self):
        return len(self.n)

    @property
    def iterations(self):
        return int(self.n[-1])

    @property
    def has_oracle(self):
        return self.psx0 is not None

    def record(self, i):
        rec = {
            "n": int(self.n[i]),
            "t_n": float(self.t[i]),
            "objective_gap": float(self.objective_gap[i]),
            "dist_to_oracle_projection": float(self.dist_x[i]),
            "dist_y_to_oracle_projection": float(self.dist_y[i]),
            "fixed_point_residual": float(self.fixed_point_residual[i]),
            "xy_residual": float(self.xy_residual[i]),
            "momentum_ratio": float(self.momentum_ratio[i]),
        }
        if self.x is not None:
            rec["x_n"] = self.x[i]
            rec["y_n"] = self.y[i]
        return rec

    @property
    def records(self):
        return [self.record(i) for i in range(len(self))]


def _finish(T, xs, ys, t, momentum, reason, oracle, store_iterates, method, x0):
    X = np.array(xs)
    Y = np.array(ys)
    count = X.shape[0]
    TX = T(X.T).T
    fpr = np.linalg.norm(X - TX, axis=1)
    xy = np.linalg.norm(X - Y, axis=1)
    step = np.full(count, np.nan)
    step[1:] = np.linalg.norm(np.diff(X, axis=0), axis=1)
    if oracle is not None:
        psx0 = oracle.project(x0)
        dist_x = np.linalg.norm(X - psx0, axis=1)
        dist_y = np.linalg.norm(Y - psx0, axis=1)
        if oracle.problem is not None:
            gap = oracle.objective(X.T) - oracle.mu
        else:
            gap = np.full(count, np.nan)
        mu = oracle.mu
    else:
        psx0 = None
        mu = None
        dist_x = dist_y = gap = np.full(count, np.nan)
    return SolveTrace(
        n=np.arange(count),
        t=np.asarray(t[:count], dtype=np.float64),
        objective_gap=gap,
        dist_x=dist_x,
        dist_y=dist_y,
        fixed_point_residual=fpr,
        xy_residual=xy,
        momentum_ratio=np.asarray(momentum[:count], dtype=np.float64),
        successive_difference=step,
        terminated_reason=reason,
        final_x=X[-1].copy(),
        final_y=Y[-1].copy(),
        x=X if store_iterates else None,
        y=Y if store_iterates else None,
        psx0=psx0,
        mu=mu,
        method=method,
    )


def _check_inputs(T, x0, max_iter):
    x0 = np.array(x0, dtype=np.float64)
    if x0.shape != (T.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, operator acts on dimension {T.dim}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 has non-finite entries")
    if int(max_iter) < 1:
        raise ValueError("max_iter must be at least 1")
    return x0


def _converged(T, x, y, tol):
    if np.linalg.norm(x - y) > tol:
        return False
    return np.linalg.norm(x - T(x)) <= tol


def fista_run(T, x0, ts, max_iter=DEFAULT_MAX_ITER, residual_tol=DEFAULT_RESIDUAL_TOL,
              oracle=None, store_iterates=True):
    """Run FISTA on the affine operator `T` from `x0`.

    The recursion is ``y_0 = x_0``, ``x_{n+1} = T y_n`` and
    ``y_{n+1} = x_{n+1} + (t_n - 1)/t_{n+1} (x_{n+1} - x_n)``, evaluated in
    exactly that order. The run stops after `max_iter` steps, when both
    ``||x_n - y_n||`` and ``||x_n - T x_n||`` drop to `residual_tol`, or when an
    iterate becomes non-finite or exceeds ``1e12 (1 + ||x_0||)`` in norm
    (``terminated_reason == "diverged"``; usually a sign that beta is too small).

    Parameters
    ----------
    T : AffineMap
    x0 : array_like
    ts : TSequence
    max_iter : int
    residual_tol : float
    oracle : Oracle, optional
        Enables objective gaps and distances to ``P_S x0`` in the trace.
    store_iterates : bool
        Keep the full iterate history in the returned trace.

    Returns
    -------
    SolveTrace
    """
    x0 = _check_inputs(T, x0, max_iter)
    max_iter = int(max_iter)
    t = ts.values(max_iter + 2) if ts.length is None else ts.values(min(ts.length, max_iter + 2))
    if len(t) < max_iter + 1:
        raise ValueError(f"t-sequence provides {len(t)} terms, the run needs {max_iter + 1}")
    ratios = np.zeros(len(t))
    ratios[:-1] = (t[:-1] - 1.0) / t[1:]
    if len(t) < max_iter + 2:
        ratios[-1] = np.nan

    bound = DIVERGENCE_FACTOR * (1.0 + np.linalg.norm(x0))
    x = x0.copy()
    y = x0.copy()
    xs, ys = [x], [y]
    reason = "max_iter"
    if _converged(T, x, y, residual_tol):
        reason = "residual_tol"
    else:
        for n in range(max_iter):
            x_next = T(y)
            y = x_next + ratios[n] * (x_next - x)
            x = x_next
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                reason = "diverged"
                break
            xs.append(x)
            ys.append(y)
            if np.linalg.norm(x) > bound:
                reason = "diverged"
                break
            if _converged(T, x, y, residual_tol):
                reason = "residual_tol"
                break
    if reason == "diverged":
        logger.warning("FISTA diverged after %d steps; check beta", len(xs) - 1)
    logger.debug("FISTA stopped after %d steps (%s)", len(xs) - 1, reason)
    return _finish(T, xs, ys, t, ratios, reason, oracle, store_iterates, "fista", x0)


def picard_run(T, x0, max_iter=DEFAULT_MAX_ITER, residual_tol=DEFAULT_RESIDUAL_TOL,
               oracle=None, store_iterates=True):
    """Plain fixed-point iteration ``x_{n+1} = T x_n`` with the same trace layout.

    ``y_n`` equals ``x_n``, ``t_n`` is recorded as 1 and the momentum ratio as 0.
    """
    x0 = _check_inputs(T, x0, max_iter)
    max_iter = int(max_iter)
    bound = DIVERGENCE_FACTOR * (1.0 + np.linalg.norm(x0))
    x = x0.copy()
    xs = [x]
    reason = "max_iter"
    if _converged(T, x, x, residual_tol):
        reason = "residual_tol"
    else:
        for _ in range(max_iter):
            x = T(x)
            if not np.all(np.isfinite(x)):
                reason = "diverged"
                break
            xs.append(x)
            if np.linalg.norm(x) > bound:
                reason = "diverged"
                break
            if _converged(T, x, x, residual_tol):
                reason = "residual_tol"
                break
    count = len(xs)
    return _finish(T, xs, xs, np.ones(count), np.zeros(count), reason, oracle,
                   store_iterates, "picard", x0)
