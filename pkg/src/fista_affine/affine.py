"""Affine subspaces, affine maps, and fixed-point sets of affine nonexpansive maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    AxpyForm,
    DimensionError,
    Identity,
    LinearMap,
    Projector,
    as_vector,
    min_norm_least_squares,
    orthogonal_complement,
    orthonormalize,
    rank_cutoff,
)

__all__ = [
    "AffineSubspace",
    "AffineMap",
    "NoFixedPointError",
    "FixedPointSet",
    "RangeComplementReport",
    "project_affine",
    "fixed_point_decompose",
    "project_fixed_set",
    "range_complement_check",
    "principal_angle_deviation",
    "DEFAULT_FIX_TOL",
]

DEFAULT_FIX_TOL = 1e-9


def _rows(basis, dim):
    b = np.array(basis, dtype=np.float64).reshape(-1, dim)
    b.flags.writeable = False
    return b


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``anchor + span(basis)`` with `anchor` the minimum-norm point.

    `basis` is a ``(k, ambient_dim)`` array of orthonormal rows spanning the
    parallel linear subspace. Use :meth:`from_spanning` to build one from an
    arbitrary point and spanning set.
    """

    anchor: np.ndarray
    basis: np.ndarray
    ambient_dim: int = field(init=False)

    def __post_init__(self):
        anchor = as_vector(self.anchor, name="anchor")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "ambient_dim", anchor.size)
        object.__setattr__(self, "basis", _rows(self.basis, anchor.size))

    @classmethod
    def from_spanning(cls, point, directions=()):
        point = as_vector(point, name="point")
        basis = orthonormalize(list(directions), point.size)
        anchor = point - basis.T @ (basis @ point)
        return cls(anchor, basis)

    @classmethod
    def whole_space(cls, dim):
        return cls(np.zeros(dim), np.eye(dim))

    @classmethod
    def point(cls, p):
        p = as_vector(p, name="point")
        return cls(p, np.zeros((0, p.size)))

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def codim(self):
        return self.ambient_dim - self.dim

    def parallel_projector(self):
        return Projector(self.basis, self.ambient_dim)

    def project(self, x):
        return project_affine(self, x)

    def distance(self, x):
        return float(np.linalg.norm(x - project_affine(self, x)))

    def __eq__(self, other):
        if not isinstance(other, AffineSubspace):
            return NotImplemented
        return (np.array_equal(self.anchor, other.anchor)
                and np.array_equal(self.basis, other.basis))

    def __hash__(self):
        return hash((self.anchor.tobytes(), self.basis.tobytes()))


def project_affine(V, x):
    """Orthogonal projection of `x` (or of the columns of a 2-D `x`) onto `V`."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != V.ambient_dim:
        raise DimensionError(V.ambient_dim, x.shape[0])
    v0 = V.anchor if x.ndim == 1 else V.anchor[:, None]
    return v0 + V.basis.T @ (V.basis @ (x - v0))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> linear(x) + translation``."""

    linear: LinearMap
    translation: np.ndarray
    nonexpansive: bool = False

    def __post_init__(self):
        if self.linear.in_dim != self.linear.out_dim:
            raise ValueError("affine map needs a square linear part")
        object.__setattr__(self, "translation",
                           as_vector(self.translation, self.linear.in_dim, "translation"))

    @property
    def dim(self):
        return self.linear.in_dim

    def evaluate(self, x):
        t = self.translation
        if np.ndim(x) == 2:
            t = t[:, None]
        return self.linear.apply(x) + t

    __call__ = evaluate

    def linear_part(self):
        return AffineMap(self.linear, np.zeros(self.dim), self.nonexpansive)


class NoFixedPointError(ValueError):
    """The affine map has no fixed point (numerically)."""

    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"no fixed point: least-squares residual {residual:.3e}")


@dataclass(frozen=True)
class FixedPointSet:
    """``Fix T = point + span(fix_basis)``."""

    point: np.ndarray
    fix_basis: np.ndarray

    def __iter__(self):
        # unpacks as (a, fix_L_basis)
        return iter((self.point, self.fix_basis))


def difference_scale(L):
    """Size of the round-off carried by ``Id - L``: ``1 + ||L||_F``."""
    return 1.0 + float(np.linalg.norm(L.to_dense()))


def fixed_point_decompose(T, tol=DEFAULT_FIX_TOL):
    """Split ``Fix T`` into the minimum-norm fixed point and a basis of ``Fix L``.

    Solves ``(Id - L) a = q`` in the minimum-norm least-squares sense and
    declares the system consistent when the residual is at most
    ``tol * (1 + ||q||)``.

    Raises
    ------
    NoFixedPointError
        If the system is inconsistent.
    """
    ImL = AxpyForm(1.0, T.linear)
    a, kernel = min_norm_least_squares(ImL, T.translation, difference_scale(T.linear))
    residual = float(np.linalg.norm(ImL.apply(a) - T.translation))
    if residual > tol * (1.0 + np.linalg.norm(T.translation)):
        raise NoFixedPointError(residual)
    return FixedPointSet(a, kernel)


def project_fixed_set(T, x, tol=DEFAULT_FIX_TOL, decomposition=None):
    """``P_{Fix T} x = a + P_{Fix L}(x - a)``."""
    a, K = decomposition if decomposition is not None else fixed_point_decompose(T, tol)
    x = np.asarray(x, dtype=np.float64)
    return a + K.T @ (K @ (x - a))


def principal_angle_deviation(B1, B2, dim):
    """Largest principal angle between ``span(B1)`` and ``span(B2)`` (orthonormal rows).

    Subspaces of different dimension are at angle ``pi/2``. The sine of the
    largest angle is taken from the residual of one basis against the other,
    which stays accurate for tiny angles where ``arccos`` of the cross-Gram
    singular values would not.
    """
    B1 = np.asarray(B1, dtype=np.float64).reshape(-1, dim)
    B2 = np.asarray(B2, dtype=np.float64).reshape(-1, dim)
    if B1.shape[0] != B2.shape[0]:
        return float(np.pi / 2)
    if B1.shape[0] == 0:
        return 0.0
    s1 = np.linalg.norm(B2 - (B2 @ B1.T) @ B1, 2)
    s2 = np.linalg.norm(B1 - (B1 @ B2.T) @ B2, 2)
    return float(np.arcsin(min(1.0, max(s1, s2))))


@dataclass(frozen=True)
class RangeComplementReport:
    fix_complement_basis: np.ndarray
    range_basis: np.ndarray
    deviation: float


def range_complement_check(L):
    """Compare ``(Fix L)^perp`` with ``ran(Id - L)`` for a square linear map."""
    if L.in_dim != L.out_dim:
        raise ValueError("range/complement check needs a square map")
    n = L.in_dim
    ImL = AxpyForm(1.0, L)
    scale = difference_scale(L)
    _, fix_basis = min_norm_least_squares(ImL, np.zeros(n), scale)
    complement = orthogonal_complement(fix_basis, n)
    M = ImL.to_dense()
    U, s, _ = np.linalg.svd(M)
    rank = int(np.count_nonzero(s > rank_cutoff(M.shape, max(s[0], scale)))) if s[0] > 0 else 0
    range_basis = np.array(U[:, :rank].T)
    return RangeComplementReport(complement, range_basis,
                                 principal_angle_deviation(complement, range_basis, n))


def identity_map(dim):
    return AffineMap(Identity(dim), np.zeros(dim), nonexpansive=True)
