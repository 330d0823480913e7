"""Kernel-based shallow networks: one hidden layer of radial kernels, linear output.

A network maps ``x in R^d`` to ``y in R^q`` via
``y_k(x) = sum_i W[i, k] * phi(||x - c_i|| / eps_i)``.
It is used for parameter interpolation of snapshots, time interpolation of
reduced coordinates and the error-estimator interpolant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import lapack
from scipy.spatial.distance import cdist

from .errors import DimensionError, InsufficientDataError, SingularSystemError

COND_LIMIT = 1e14
RIDGE_SCALE = 1e-12


class Kernel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    MULTIQUADRIC = "multiquadric"
    CUBIC = "cubic"

    @classmethod
    def parse(cls, value: Union[str, "Kernel"]) -> "Kernel":
        if isinstance(value, Kernel):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"cubicspline": "cubic", "mq": "multiquadric", "gauss": "gaussian"}
        key = aliases.get(key, key)
        for k in cls:
            if k.value == key:
                return k
        raise ValueError(f"unknown kernel {value!r}; expected one of {[k.value for k in cls]}")

    @property
    def code(self) -> int:
        return {"gaussian": 0, "multiquadric": 1, "cubic": 2}[self.value]

    @classmethod
    def from_code(cls, code: int) -> "Kernel":
        return [cls.GAUSSIAN, cls.MULTIQUADRIC, cls.CUBIC][code]


@dataclass(frozen=True)
class RbfKernelSpec:
    """Kernel type and uniform width ``eps`` (unused by the cubic kernel)."""

    kind: Kernel = Kernel.MULTIQUADRIC
    width: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "kind", Kernel.parse(self.kind))
        w = float(self.width)
        if self.kind is not Kernel.CUBIC and not (np.isfinite(w) and w > 0):
            raise ValueError(f"kernel width must be positive, got {self.width}")
        object.__setattr__(self, "width", w)


def kernel_values(kind: Kernel, dist: NDArray[np.float64], width) -> NDArray[np.float64]:
    """Apply the radial profile to a distance array; ``width`` broadcasts over the last axis."""
    if kind is Kernel.CUBIC:
        return dist**3
    z = dist / width
    if kind is Kernel.GAUSSIAN:
        return np.exp(-(z**2))
    return np.sqrt(z**2 + 1.0)


def _as_inputs(x: ArrayLike, dim: int | None = None) -> NDArray[np.float64]:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1) if dim in (None, 1) else a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionError(f"inputs must be 2-D (count x dim), got shape {a.shape}")
    if dim is not None and a.shape[1] != dim:
        raise DimensionError(f"expected input dimension {dim}, got {a.shape[1]}")
    return a


def gram_matrix(points: ArrayLike, centers: ArrayLike, kernel: RbfKernelSpec, widths=None) -> NDArray[np.float64]:
    """``G[j, i] = phi(||points_j - centers_i||; eps_i)``."""
    p = _as_inputs(points)
    c = _as_inputs(centers, p.shape[1])
    w = kernel.width if widths is None else np.asarray(widths, dtype=np.float64)
    return kernel_values(kernel.kind, cdist(p, c), w)


class FitStatus(str, enum.Enum):
    INTERPOLATION = "interpolation"
    REGRESSION = "regression"  # ridge fallback or n_c < l


@dataclass(frozen=True, eq=False)
class RbfNetwork:
    """Fitted kernel network.

    Attributes
    ----------
    centers : (n_c, d) array
    widths : (n_c,) array, one width per center (uniform after fitting)
    weights : (n_c, q) array
    kind : kernel type
    status : whether training data are reproduced exactly or only in a least-squares sense
    ridge : regularization added to the Gram diagonal, 0 for a plain solve
    """

    centers: NDArray[np.float64]
    widths: NDArray[np.float64]
    weights: NDArray[np.float64]
    kind: Kernel
    status: FitStatus = FitStatus.INTERPOLATION
    ridge: float = 0.0
    condition: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        # C order everywhere so that fitted and reloaded networks round identically
        c = np.array(self.centers, dtype=np.float64, order="C")
        c = c.reshape(-1, 1) if c.ndim == 1 else c
        w = np.array(self.weights, dtype=np.float64, order="C")
        w = w.reshape(-1, 1) if w.ndim == 1 else w
        e = np.array(self.widths, dtype=np.float64).reshape(-1)
        if c.ndim != 2 or w.ndim != 2 or w.shape[0] != c.shape[0] or e.size != c.shape[0]:
            raise DimensionError(
                f"inconsistent network shapes: centers {c.shape}, weights {w.shape}, widths {e.shape}"
            )
        for a in (c, w, e):
            a.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "widths", e)
        object.__setattr__(self, "kind", Kernel.parse(self.kind))
        object.__setattr__(self, "status", FitStatus(self.status))

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    @property
    def kernel(self) -> RbfKernelSpec:
        width = float(self.widths[0]) if self.widths.size else 1.0
        return RbfKernelSpec(self.kind, width if width > 0 else 1.0)

    def hidden(self, x: ArrayLike) -> NDArray[np.float64]:
        """Kernel activations, shape ``(count, n_c)``."""
        xs = _as_inputs(x, self.input_dim)
        return kernel_values(self.kind, cdist(xs, self.centers), self.widths)

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        """Network output for one point (shape ``(q,)``) or a batch (shape ``(count, q)``)."""
        a = np.asarray(x, dtype=np.float64)
        single = a.ndim == 0 or (a.ndim == 1 and (self.input_dim > 1 or a.size == 1))
        if a.ndim == 1 and self.input_dim > 1 and a.size != self.input_dim:
            raise DimensionError(f"expected input dimension {self.input_dim}, got {a.size}")
        out = self.hidden(a) @ self.weights
        return out[0] if single else out

    __call__ = evaluate

    def evaluate_columns(self, x: ArrayLike, start: int, stop: int) -> NDArray[np.float64]:
        """Output components ``start:stop`` only; bounds memory for very wide outputs."""
        return self.hidden(x) @ self.weights[:, start:stop]


def _sym_solve(a: NDArray[np.float64], b: NDArray[np.float64]):
    """Solve a symmetric system with Bunch-Kaufman pivoting.

    Returns ``(x, cond)`` where ``cond`` is LAPACK's 1-norm condition estimate
    from the same factorization; ``x`` is None when the factor is singular.
    """
    lu, piv, x, info = lapack.dsysv(a, b)
    if info > 0:
        return None, np.inf
    rcond, _ = lapack.dsycon(lu, piv, float(np.linalg.norm(a, 1)))
    cond = 1.0 / rcond if rcond > 0 else np.inf
    if not np.all(np.isfinite(x)):
        return None, cond
    return x, cond


def _check_distinct(points: NDArray[np.float64]) -> None:
    if len(points) > 1:
        d = cdist(points, points)
        np.fill_diagonal(d, np.inf)
        if np.min(d) == 0.0:
            i, j = np.unravel_index(np.argmin(d), d.shape)
            raise SingularSystemError(f"duplicate training points at rows {min(i, j)} and {max(i, j)}")


def _targets(targets: ArrayLike, count: int) -> NDArray[np.float64]:
    y = np.asarray(targets, dtype=np.float64)
    if y.ndim == 1:
        y = y.reshape(count, -1) if y.size != count else y.reshape(-1, 1)
    if y.ndim != 2 or y.shape[0] != count:
        raise DimensionError(f"targets must have {count} rows, got shape {np.shape(targets)}")
    return y


@dataclass(frozen=True, eq=False)
class InterpolationSystem:
    """Factored Gram matrix of fixed centers; fits any number of target sets.

    Building the factorization once pays off when the same centers are fitted
    repeatedly, for instance the time grid of a surrogate queried at many
    parameters.
    """

    centers: NDArray[np.float64]
    kernel: RbfKernelSpec
    factor: NDArray[np.float64]
    pivots: NDArray[np.int32]
    status: FitStatus
    ridge: float
    condition: float

    def fit(self, targets: ArrayLike) -> RbfNetwork:
        y = _targets(targets, len(self.centers))
        if not np.all(np.isfinite(y)):
            raise ValueError("training data contain NaN or Inf")
        w, info = lapack.dsytrs(self.factor, self.pivots, y)
        if info != 0 or not np.all(np.isfinite(w)):
            raise SingularSystemError("kernel system solve failed")
        widths = np.full(len(self.centers), self.kernel.width)
        return RbfNetwork(self.centers, widths, w, self.kernel.kind, self.status, self.ridge, self.condition)


def _factor(a: NDArray[np.float64]):
    """Bunch-Kaufman factorization and LAPACK's 1-norm condition estimate."""
    lu, piv, info = lapack.dsytrf(a)
    if info > 0:
        return lu, piv, np.inf
    rcond, _ = lapack.dsycon(lu, piv, float(np.linalg.norm(a, 1)))
    return lu, piv, (1.0 / rcond if rcond > 0 else np.inf)


def factor_interpolation(points: ArrayLike, kernel: RbfKernelSpec) -> InterpolationSystem:
    """Gram matrix ``G`` of ``points`` against themselves, factored once.

    When ``G`` is too ill-conditioned (estimate above ``COND_LIMIT``) a ridge
    ``1e-12 * trace(G) / l`` is added and fits are flagged as regression.
    """
    x = _as_inputs(points)
    if len(x) < 1:
        raise InsufficientDataError("need at least one training point")
    if not np.all(np.isfinite(x)):
        raise ValueError("training data contain NaN or Inf")
    _check_distinct(x)
    g = gram_matrix(x, x, kernel)
    lu, piv, cond = _factor(g)
    if cond <= COND_LIMIT:
        return InterpolationSystem(x, kernel, lu, piv, FitStatus.INTERPOLATION, 0.0, cond)
    ridge = RIDGE_SCALE * abs(float(np.trace(g))) / len(x)
    if ridge == 0.0:
        raise SingularSystemError("kernel Gram matrix is singular and has zero trace")
    lu, piv, rcond = _factor(g + ridge * np.eye(len(x)))
    if not np.isfinite(rcond):
        raise SingularSystemError("ridge-regularized Gram system is singular")
    return InterpolationSystem(x, kernel, lu, piv, FitStatus.REGRESSION, ridge, cond)


def fit_interpolation(points: ArrayLike, targets: ArrayLike, kernel: RbfKernelSpec) -> RbfNetwork:
    """Centers at the training points; weights solve ``G W = Y`` (one factorization, q right-hand sides).

    See :func:`factor_interpolation` for the ridge fallback.
    """
    x = _as_inputs(points)
    _targets(targets, len(x))
    return factor_interpolation(x, kernel).fit(targets)


def fit_regression(
    points: ArrayLike, targets: ArrayLike, kernel: RbfKernelSpec, n_centers: int
) -> RbfNetwork:
    """Least-squares fit with ``n_centers`` centers subsampled uniformly by index.

    Solves the normal equations ``(H^T H + lambda I) W = H^T Y`` where ``lambda``
    is zero unless ``H^T H`` is too ill-conditioned.
    """
    x = _as_inputs(points)
    y = _targets(targets, len(x))
    if n_centers < 1:
        raise InsufficientDataError("need at least one center")
    if n_centers >= len(x):
        return fit_interpolation(x, y, kernel)
    idx = np.unique(np.round(np.linspace(0, len(x) - 1, n_centers)).astype(int))
    centers = x[idx]
    _check_distinct(centers)
    h = gram_matrix(x, centers, kernel)
    a = h.T @ h
    b = h.T @ y
    w, cond = _sym_solve(a, b)
    ridge = 0.0
    if w is None or cond > COND_LIMIT:
        ridge = RIDGE_SCALE * abs(float(np.trace(a))) / len(idx)
        w, _ = _sym_solve(a + ridge * np.eye(len(idx)), b)
        if w is None:
            raise SingularSystemError("normal equations are singular")
    widths = np.full(len(idx), kernel.width)
    return RbfNetwork(centers, widths, w, kernel.kind, FitStatus.REGRESSION, ridge, cond)
