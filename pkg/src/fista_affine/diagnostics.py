"""Post-hoc certificates computed from solve traces."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .fista import (
    GROWTH,
    LOWER,
    START,
    UPPER,
    TSequence,
    _growth_ok,
    lower_bound,
    upper_bound,
)

__all__ = [
    "MissingOracleError",
    "RateCertificate",
    "StrongConvergenceReport",
    "TAsymptoticsReport",
    "DecayReport",
    "certify_rate",
    "certify_strong_convergence",
    "check_t_asymptotics",
    "residual_decay",
    "tail_window",
]

RATE_SLACK = 1e-6
MONOTONE_SLACK = 1e-12
TAIL_FRACTION = 0.1


class MissingOracleError(ValueError):
    pass


def tail_window(count, fraction=TAIL_FRACTION):
    """Number of records in a head or tail window (at least one)."""
    return max(1, int(math.ceil(fraction * count)))


@dataclass(frozen=True)
class RateCertificate:
    sup_scaled_gap: float
    bound_constant: float
    passed: bool
    worst_index: int

    def to_dict(self):
        return asdict(self)


def certify_rate(trace, beta, x0, psx0):
    """Check ``(n+1)^2 (F(x_n) - mu) <= 2 beta ||x0 - P_S x0||^2`` for all ``n >= 1``.

    The constant is the classical accelerated-gradient bound; a trace that
    exceeds it gets ``passed=False`` but no exception is raised.
    """
    gaps = np.asarray(trace.objective_gap, dtype=np.float64)
    if not trace.has_oracle or np.isnan(gaps).any():
        raise MissingOracleError("rate certification needs a trace run with an oracle")
    bound = 2.0 * float(beta) * float(np.sum((np.asarray(x0) - np.asarray(psx0)) ** 2))
    if len(gaps) < 2:
        return RateCertificate(0.0, bound, True, 0)
    n = trace.n[1:].astype(np.float64)
    scaled = (n + 1.0) ** 2 * gaps[1:]
    worst = int(np.argmax(scaled))
    sup = max(0.0, float(scaled[worst]))
    return RateCertificate(sup, bound, sup <= bound * (1 + RATE_SLACK), int(trace.n[1 + worst]))


@dataclass(frozen=True)
class StrongConvergenceReport:
    final_dist_x: float
    final_dist_y: float
    tol: float
    passed: bool
    first_index: int | None
    tail_monotone_fraction: float

    def to_dict(self):
        return asdict(self)


def certify_strong_convergence(trace, tol):
    """Final distances of ``x_n`` and ``y_n`` to ``P_S x0`` against `tol`.

    `first_index` is the first ``n`` from which both distances stay within
    `tol` until the end of the trace. The monotone fraction is the share of
    steps where ``||x_n - P_S x0||`` did not grow by more than 1e-12.
    """
    if not trace.has_oracle:
        raise MissingOracleError("strong-convergence certification needs an oracle")
    dx = np.asarray(trace.dist_x)
    dy = np.asarray(trace.dist_y)
    ok = (dx <= tol) & (dy <= tol)
    passed = bool(ok[-1])
    first = None
    if passed:
        bad = np.flatnonzero(~ok)
        first = int(trace.n[bad[-1] + 1]) if bad.size else int(trace.n[0])
    if len(dx) > 1:
        monotone = float(np.mean(np.diff(dx) <= MONOTONE_SLACK))
    else:
        monotone = 1.0
    return StrongConvergenceReport(float(dx[-1]), float(dy[-1]), float(tol), passed, first,
                                   monotone)


@dataclass(frozen=True)
class TAsymptoticsReport:
    passed: bool
    horizon: int
    first_violation: int | None
    condition: str | None
    max_tail_ratio_deviation: float

    def to_dict(self):
        return asdict(self)


def check_t_asymptotics(ts, horizon):
    """Verify admissibility and the upper bound over ``n < horizon`` and measure
    how close ``(t_n - 1)/t_{n+1}`` is to 1 over the last 10% of indices.

    `ts` may be a :class:`TSequence` or a plain list of values (which is not
    validated up front, so violations are reported rather than raised).
    """
    if horizon < 10:
        raise ValueError("horizon must be at least 10")
    if isinstance(ts, TSequence):
        avail = ts.length
        t = ts.values(horizon + 1 if avail is None else min(avail, horizon + 1))
    else:
        t = np.asarray(list(ts)[: horizon + 1], dtype=np.float64)
    count = min(horizon, len(t))

    violation = None
    if t[0] != 1.0:
        violation = (0, START)
    else:
        for n in range(count):
            tn = float(t[n])
            if tn < lower_bound(n) - 1e-12:
                violation = (n, LOWER)
            elif tn > upper_bound(n) + 1e-9:
                violation = (n, UPPER)
            elif n + 1 < len(t) and not _growth_ok(tn, float(t[n + 1])):
                violation = (n, GROWTH)
            if violation:
                break

    ratio = (t[:-1] - 1.0) / t[1:]
    ratio = ratio[:count]
    w = tail_window(len(ratio)) if len(ratio) else 0
    dev = float(np.max(np.abs(ratio[-w:] - 1.0))) if w else math.nan
    return TAsymptoticsReport(
        passed=violation is None,
        horizon=int(count),
        first_violation=None if violation is None else violation[0],
        condition=None if violation is None else violation[1],
        max_tail_ratio_deviation=dev,
    )


@dataclass(frozen=True)
class DecayReport:
    """Head and tail medians of the vanishing residual sequences."""

    head: dict
    tail: dict

    def ratio(self, key):
        h, t = self.head[key], self.tail[key]
        if h == 0.0:
            return 0.0 if t == 0.0 else math.inf
        return t / h

    def to_dict(self):
        return {"head": dict(self.head), "tail": dict(self.tail)}


def residual_decay(trace, fraction=TAIL_FRACTION):
    """Medians of ``||x_n - y_n||``, ``||x_n - T x_n||`` and ``||x_{n+1} - x_n||``
    over the first and last `fraction` of a trace."""
    series = {
        "xy_residual": np.asarray(trace.xy_residual),
        "fixed_point_residual": np.asarray(trace.fixed_point_residual),
        "successive_difference": np.asarray(trace.successive_difference)[1:],
    }
    head, tail = {}, {}
    for key, s in series.items():
        w = tail_window(len(s), fraction)
        head[key] = float(np.median(s[:w]))
        tail[key] = float(np.median(s[-w:]))
    return DecayReport(head, tail)
