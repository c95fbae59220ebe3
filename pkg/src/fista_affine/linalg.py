"""Dense linear algebra substrate.

Vectors are plain 1-D ``float64`` numpy arrays. Linear maps are small
immutable objects that know how to apply themselves and their adjoints to a
vector, or to a stack of vectors laid out as columns of a 2-D array.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "DimensionError",
    "ZeroOperatorWarning",
    "as_vector",
    "LinearMap",
    "Dense",
    "Diagonal",
    "Identity",
    "RightShift",
    "Projector",
    "Compose",
    "Adjoint",
    "AxpyForm",
    "apply",
    "rank_cutoff",
    "power_iteration",
    "spectral_norm_sq_upper",
    "min_norm_least_squares",
    "orthonormalize",
    "orthogonal_complement",
    "POWER_ITERATIONS",
    "SAFETY_FACTOR",
]

EPS = np.finfo(np.float64).eps

POWER_ITERATIONS = 200
SAFETY_FACTOR = 1.01


class DimensionError(ValueError):
    """Raised when an operand does not have the dimension an operator expects."""

    def __init__(self, expected, got, what="vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class ZeroOperatorWarning(UserWarning):
    pass


def as_vector(x, dim=None, name="vector"):
    """Return `x` as a finite, read-only 1-D float64 array."""
    arr = np.array(x, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and arr.size != dim:
        raise DimensionError(dim, arr.size, name)
    arr.flags.writeable = False
    return arr


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


class LinearMap:
    """Base class for finite-dimensional linear operators.

    Subclasses implement ``_apply`` and ``_rapply`` (the adjoint action). Both
    receive arrays whose first axis has the right length; trailing axes index
    independent columns.
    """

    in_dim: int
    out_dim: int

    def _apply(self, x):
        raise NotImplementedError

    def _rapply(self, y):
        raise NotImplementedError

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[0] != self.in_dim:
            raise DimensionError(self.in_dim, x.shape[0] if x.ndim else 0, "operand")
        return self._apply(x)

    def rapply(self, y):
        """Apply the adjoint."""
        y = np.asarray(y, dtype=np.float64)
        if y.ndim == 0 or y.shape[0] != self.out_dim:
            raise DimensionError(self.out_dim, y.shape[0] if y.ndim else 0, "operand")
        return self._rapply(y)

    __call__ = apply

    @property
    def adjoint(self):
        return Adjoint(self)

    @property
    def shape(self):
        return (self.out_dim, self.in_dim)

    def to_dense(self):
        return self._apply(np.eye(self.in_dim))

    def gram(self):
        """The operator ``A* A``."""
        return Compose(Adjoint(self), self)


class Dense(LinearMap):
    def __init__(self, matrix):
        m = np.array(matrix, dtype=np.float64, copy=True)
        if m.ndim != 2 or min(m.shape) < 1:
            raise ValueError(f"dense map needs a non-empty 2-D matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("dense map has non-finite entries")
        m.flags.writeable = False
        self.matrix = m
        self.out_dim, self.in_dim = m.shape

    def _apply(self, x):
        return self.matrix @ x

    def _rapply(self, y):
        return self.matrix.T @ y

    def to_dense(self):
        return np.array(self.matrix)

    def __repr__(self):
        return f"Dense({self.out_dim}x{self.in_dim})"


class Diagonal(LinearMap):
    def __init__(self, weights):
        self.weights = as_vector(weights, name="weights")
        self.in_dim = self.out_dim = self.weights.size

    def _scale(self, x):
        w = self.weights.reshape((-1,) + (1,) * (x.ndim - 1))
        return w * x

    _apply = _scale
    _rapply = _scale

    def __repr__(self):
        return f"Diagonal({list(self.weights)})"


class Identity(LinearMap):
    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.in_dim = self.out_dim = int(dim)

    def _apply(self, x):
        return np.array(x, dtype=np.float64, copy=True)

    _rapply = _apply

    def __repr__(self):
        return f"Identity({self.in_dim})"


class RightShift(LinearMap):
    """Truncated right shift: ``e_i -> e_{i+1}``, the last basis vector is annihilated."""

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.in_dim = self.out_dim = int(dim)

    def _apply(self, x):
        out = np.zeros_like(x, dtype=np.float64)
        out[1:] = x[:-1]
        return out

    def _rapply(self, y):
        out = np.zeros_like(y, dtype=np.float64)
        out[:-1] = y[1:]
        return out

    def __repr__(self):
        return f"RightShift({self.in_dim})"


class Projector(LinearMap):
    """Orthogonal projector onto the span of an orthonormal basis.

    ``basis`` is a ``(k, dim)`` array whose rows are orthonormal; ``k == 0``
    gives the zero projector.
    """

    def __init__(self, basis, dim=None):
        b = np.array(basis, dtype=np.float64)
        if b.ndim == 1 and b.size == 0:
            if dim is None:
                raise ValueError("an empty basis needs an explicit dim")
            b = np.zeros((0, dim))
        if b.ndim != 2:
            raise ValueError("basis must be a 2-D array of row vectors")
        if dim is not None and b.shape[1] != dim:
            raise DimensionError(dim, b.shape[1], "basis vector")
        self.basis = _frozen(b)
        self.in_dim = self.out_dim = b.shape[1]

    def _apply(self, x):
        return self.basis.T @ (self.basis @ x)

    _rapply = _apply

    def __repr__(self):
        return f"Projector(rank={self.basis.shape[0]}, dim={self.in_dim})"


class Compose(LinearMap):
    """``outer ∘ inner``."""

    def __init__(self, outer, inner):
        if outer.in_dim != inner.out_dim:
            raise DimensionError(outer.in_dim, inner.out_dim, "composed operator")
        self.outer = outer
        self.inner = inner
        self.in_dim = inner.in_dim
        self.out_dim = outer.out_dim

    def _apply(self, x):
        return self.outer._apply(self.inner._apply(x))

    def _rapply(self, y):
        return self.inner._rapply(self.outer._rapply(y))

    def __repr__(self):
        return f"Compose({self.outer!r}, {self.inner!r})"


class Adjoint(LinearMap):
    def __init__(self, inner):
        self.inner = inner
        self.in_dim = inner.out_dim
        self.out_dim = inner.in_dim

    def _apply(self, x):
        return self.inner._rapply(x)

    def _rapply(self, y):
        return self.inner._apply(y)

    def __repr__(self):
        return f"Adjoint({self.inner!r})"


class AxpyForm(LinearMap):
    """``Id - alpha * inner`` for a square ``inner``."""

    def __init__(self, alpha, inner):
        if inner.in_dim != inner.out_dim:
            raise ValueError("AxpyForm needs a square inner operator")
        self.alpha = float(alpha)
        self.inner = inner
        self.in_dim = self.out_dim = inner.in_dim

    def _apply(self, x):
        return x - self.alpha * self.inner._apply(x)

    def _rapply(self, y):
        return y - self.alpha * self.inner._rapply(y)

    def __repr__(self):
        return f"AxpyForm({self.alpha!r}, {self.inner!r})"


def apply(map_, x):
    return map_.apply(x)


def rank_cutoff(shape, smax):
    """Singular values at or below this are treated as zero."""
    return max(shape) * EPS * smax


def power_iteration(op, seed=0, iterations=POWER_ITERATIONS):
    """Estimate the top eigenvalue of a symmetric positive semidefinite operator.

    Returns the Rayleigh quotient at the final iterate, which never exceeds
    the true top eigenvalue.
    """
    if op.in_dim != op.out_dim:
        raise ValueError("power iteration needs a square operator")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.in_dim)
    x /= np.linalg.norm(x)
    rq = 0.0
    for _ in range(iterations):
        y = op._apply(x)
        rq = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
    return max(rq, float(x @ op._apply(x)))


def spectral_norm_sq_upper(A, seed=0):
    """Upper estimate of ``||A* A||`` by power iteration with a 1.01 safety factor.

    A zero operator yields ``0.0`` and a :class:`ZeroOperatorWarning`.
    """
    est = power_iteration(A.gram(), seed=seed)
    if est <= 0.0:
        warnings.warn("nonzero A required: operator appears to be zero",
                      ZeroOperatorWarning, stacklevel=2)
        return 0.0
    return SAFETY_FACTOR * est


def min_norm_least_squares(A, b, scale=None):
    """Minimum-norm minimizer of ``||Az - b||`` and an orthonormal basis of ``ker A``.

    Parameters
    ----------
    A : LinearMap
    b : array_like
        Right-hand side with ``A.out_dim`` entries.
    scale : float, optional
        Magnitude of the data `A` was computed from. The rank cutoff uses
        ``max(sigma_max, scale)`` so that round-off in a difference such as
        ``Id - L`` is not mistaken for a genuine small singular value.

    Returns
    -------
    particular : ndarray
        The pseudoinverse solution ``A^+ b``.
    kernel_basis : ndarray
        ``(k, A.in_dim)`` array whose rows form an orthonormal basis of the
        numerical kernel of `A`.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.out_dim,):
        raise DimensionError(A.out_dim, b.shape[0] if b.ndim else 0, "right-hand side")
    M = A.to_dense()
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    ref = max(smax, scale or 0.0)
    rank = int(np.count_nonzero(s > rank_cutoff(M.shape, ref))) if smax > 0 else 0
    coeffs = (U[:, :rank].T @ b) / s[:rank]
    particular = Vt[:rank].T @ coeffs
    kernel = np.array(Vt[rank:])
    return particular, kernel


def orthonormalize(vectors, dim=None):
    """Orthonormal basis of the span of `vectors` (two-pass Gram-Schmidt).

    Vectors whose residual after orthogonalization falls below the rank
    cutoff are dropped. Returns a ``(k, dim)`` array.
    """
    vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not vecs:
        return np.zeros((0, dim or 0))
    n = vecs[0].size
    if any(v.shape != (n,) for v in vecs):
        raise ValueError("all vectors must share one dimension")
    scale = max(np.linalg.norm(v) for v in vecs)
    if scale == 0.0:
        return np.zeros((0, n))
    tol = rank_cutoff((n, len(vecs)), scale)
    basis = []
    for v in vecs:
        r = v.copy()
        for _ in range(2):
            for q in basis:
                r -= (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol and nr > 8 * EPS * np.linalg.norm(v):
            basis.append(r / nr)
    if not basis:
        return np.zeros((0, n))
    return np.array(basis)


def orthogonal_complement(basis, dim):
    """Orthonormal basis (rows) of the orthogonal complement of an orthonormal row basis."""
    basis = np.asarray(basis, dtype=np.float64).reshape(-1, dim)
    k = basis.shape[0]
    if k == 0:
        return np.eye(dim)
    if k >= dim:
        return np.zeros((0, dim))
    Q, _ = np.linalg.qr(basis.T, mode="complete")
    comp = Q[:, k:].T
    # QR of a numerically rank-deficient basis could leak; one re-projection pass.
    comp = comp - (comp @ basis.T) @ basis
    return orthonormalize(list(comp), dim)
