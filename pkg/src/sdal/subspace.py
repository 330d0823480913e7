"""
Distances between linear subspaces of possibly different dimensions.

A subspace is carried around as an :class:`OrthonormalBasis`, i.e. a matrix
whose columns are orthonormal.  All measures below are invariant under a change
of basis ``X -> X @ Q`` with ``Q`` orthogonal.

Measures
--------
``distance_d1``
    2-norm of the principal angles.  Needs an SVD of ``X.T @ Y``.  Only a
    premetric when the dimensions differ (it vanishes on nested subspaces).
``similarity_dtilde``
    Frobenius norm of ``X.T @ Y``; no SVD.
``distance_d2``
    ``sqrt(max(p, q) - dtilde**2)``, a metric for any pair of dimensions.
``distance_d2_normalized``
    ``distance_d2 / sqrt(max(p, q))``, in ``[0, 1]``.  For ``p == q`` it is
    the normalized chordal distance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, NotOrthonormalError

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Matrix with orthonormal columns spanning a subspace of R^n.

    Orthonormality is checked on construction: ``||C^T C - I||_F <= tol``.
    Use :meth:`from_matrix` to orthonormalize an arbitrary full-rank matrix.
    """

    columns: NDArray[np.float64]
    tol: float = ORTHONORMALITY_TOL

    def __post_init__(self):
        cols = np.array(self.columns, dtype=np.float64, copy=True)
        if cols.ndim == 1:
            cols = cols[:, None]
        if cols.ndim != 2:
            raise DimensionError(f"basis must be a 2-D array, got shape {cols.shape}")
        n, p = cols.shape
        if p < 1 or p > n:
            raise DimensionError(f"need 1 <= p <= n, got n={n}, p={p}")
        if not np.all(np.isfinite(cols)):
            raise NotOrthonormalError("basis contains NaN or Inf")
        err = np.linalg.norm(cols.T @ cols - np.eye(p))
        if err > self.tol:
            raise NotOrthonormalError(
                f"columns are not orthonormal: ||C^T C - I||_F = {err:.3e} > {self.tol:.1e}"
            )
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_matrix(cls, matrix: ArrayLike) -> "OrthonormalBasis":
        """Orthonormalize the columns of ``matrix`` with a thin QR."""
        a = np.asarray(matrix, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        q, r = np.linalg.qr(a)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag.min() <= 1e-12 * max(diag.max(), 1.0):
            raise DimensionError("matrix is rank deficient, cannot build a basis")
        return cls(q)

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.columns.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.columns.shape

    def projector(self) -> NDArray[np.float64]:
        """Dense ``n x n`` orthogonal projector.  For tests and small n only."""
        return self.columns @ self.columns.T


BasisLike = Union[OrthonormalBasis, NDArray[np.float64]]


class Measure(str, enum.Enum):
    """Distance measure used to compare parameter-specific subspaces."""

    D1 = "D1"
    D2 = "D2"
    D2HAT = "D2hat"

    @classmethod
    def parse(cls, value: Union[str, "Measure"]) -> "Measure":
        if isinstance(value, Measure):
            return value
        key = str(value).strip().lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown measure {value!r}; expected one of {[m.value for m in cls]}")


def _cols(b: BasisLike) -> NDArray[np.float64]:
    # Raw arrays are trusted to be orthonormal; wrap in OrthonormalBasis to validate.
    if isinstance(b, OrthonormalBasis):
        return b.columns
    a = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _pair(x: BasisLike, y: BasisLike):
    X, Y = _cols(x), _cols(y)
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(f"ambient dimensions differ: {X.shape[0]} vs {Y.shape[0]}")
    return X, Y


def principal_angles(x: BasisLike, y: BasisLike) -> NDArray[np.float64]:
    """Principal angles between span(x) and span(y), sorted nondecreasing.

    The cosines are the singular values of ``x.T @ y``, clipped to ``[0, 1]``
    so that round-off cannot produce NaN.  ``arccos`` loses about half the
    digits near zero, so angles below ``pi/4`` are taken from the sines
    instead: the singular values of ``y - x (x.T y)`` (with ``y`` the smaller
    frame).  Returns ``min(p, q)`` angles in ``[0, pi/2]``.
    """
    X, Y = _pair(x, y)
    if X.shape[1] < Y.shape[1]:
        X, Y = Y, X
    m = X.T @ Y
    cos = np.clip(np.linalg.svd(m, compute_uv=False), 0.0, 1.0)
    # singular values come out descending, so the angles are ascending
    theta = np.arccos(cos)
    small = cos * cos > 0.5
    if np.any(small):
        sin = np.linalg.svd(Y - X @ m, compute_uv=False)[::-1]
        theta[small] = np.arcsin(np.clip(sin[small], 0.0, 1.0))
    return theta


def cosines_squared_sum(x: BasisLike, y: BasisLike) -> float:
    """``sum_k cos^2(theta_k)`` through the singular values of ``x.T @ y``."""
    X, Y = _pair(x, y)
    s = np.linalg.svd(X.T @ Y, compute_uv=False)
    return float(np.sum(s * s))


def distance_d1(x: BasisLike, y: BasisLike, zero_tol: float = 0.0) -> float:
    """2-norm of the principal angles.

    Exact nesting never holds in floating point, so callers that need a hard
    zero can pass ``zero_tol``: results ``<= zero_tol`` are returned as 0.
    """
    d = float(np.linalg.norm(principal_angles(x, y)))
    return 0.0 if d <= zero_tol else d


def similarity_dtilde(x: BasisLike, y: BasisLike) -> float:
    """Frobenius norm of ``x.T @ y``, computed without an SVD."""
    X, Y = _pair(x, y)
    return float(np.linalg.norm(X.T @ Y))


def _gap_sq(X, Y) -> tuple[float, int]:
    """``max(p, q) - ||X^T Y||_F^2`` without cancellation, and ``max(p, q)``.

    With ``Y`` the smaller frame, ``||X^T Y||_F^2 = q - ||Y - X X^T Y||_F^2``,
    so the gap is ``(p - q)`` plus a residual norm that stays accurate when the
    spans nearly coincide.
    """
    if X.shape[1] < Y.shape[1]:
        X, Y = Y, X
    r = Y - X @ (X.T @ Y)
    return float(X.shape[1] - Y.shape[1]) + float(np.vdot(r, r)), X.shape[1]


def distance_d2(x: BasisLike, y: BasisLike) -> float:
    """``sqrt(max(p, q) - ||x.T y||_F^2)``; a metric over subspaces of any dimension.  No SVD."""
    gap, _ = _gap_sq(*_pair(x, y))
    return float(np.sqrt(gap))


def distance_d2_normalized(x: BasisLike, y: BasisLike) -> float:
    """``sqrt(1 - ||x.T y||_F^2 / max(p, q))``, in ``[0, 1]``.  No SVD."""
    gap, k = _gap_sq(*_pair(x, y))
    return float(np.sqrt(min(gap / k, 1.0)))


_MEASURES = {
    Measure.D1: distance_d1,
    Measure.D2: distance_d2,
    Measure.D2HAT: distance_d2_normalized,
}


def measure_function(measure: Union[str, Measure]):
    return _MEASURES[Measure.parse(measure)]


def pairwise_distances(
    bases: Sequence[BasisLike],
    pairs: Sequence[tuple[int, int]],
    measure: Union[str, Measure] = Measure.D2HAT,
) -> list[float]:
    """Apply ``measure`` to each ``(i, j)`` in ``pairs``; element k matches pair k."""
    fn = measure_function(measure)
    n = len(bases)
    out = []
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"pair ({i}, {j}) out of range for {n} bases")
        out.append(fn(bases[i], bases[j]))
    return out
