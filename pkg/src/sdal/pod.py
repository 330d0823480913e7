"""Snapshot containers and POD bases truncated by an energy criterion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateInputError, DimensionError, IngestionError, ZeroNormColumnError
from .subspace import OrthonormalBasis

# singular values below this fraction of sigma_1 count as zero
ZERO_SV_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """Space-time samples ``U(mu)``: one column per time instance.

    Attributes
    ----------
    values : (N, N_t + 1) array
    parameter : (N_mu,) array
    time_grid : (N_t + 1,) strictly increasing array starting at 0
    """

    values: NDArray[np.float64]
    parameter: NDArray[np.float64]
    time_grid: NDArray[np.float64]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        param = np.atleast_1d(np.array(self.parameter, dtype=np.float64)).ravel()
        grid = np.atleast_1d(np.array(self.time_grid, dtype=np.float64)).ravel()
        if values.ndim != 2 or values.size == 0:
            raise IngestionError(f"snapshot values must be a nonempty 2-D array, got {values.shape}")
        if values.shape[1] != grid.size:
            raise IngestionError(
                f"{values.shape[1]} snapshot columns but {grid.size} time-grid entries"
            )
        if not np.all(np.isfinite(values)):
            raise IngestionError("snapshot values contain NaN or Inf")
        if not np.all(np.isfinite(param)):
            raise IngestionError("parameter contains NaN or Inf")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise IngestionError("time grid must be strictly increasing")
        for a in (values, param, grid):
            a.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "parameter", param)
        object.__setattr__(self, "time_grid", grid)

    @property
    def n_dofs(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class PodSubspace:
    """Truncated POD basis of one snapshot matrix."""

    basis: OrthonormalBasis
    singular_values: NDArray[np.float64]  # retained, nonincreasing
    total_energy: float  # sum of squares of all nonzero singular values
    energy_criterion: float

    @property
    def rank(self) -> int:
        return self.basis.subspace_dim

    @property
    def columns(self) -> NDArray[np.float64]:
        return self.basis.columns

    @property
    def discarded_energy(self) -> float:
        """Relative energy ``1 - sum_{k<=r} s_k^2 / sum_{k<=s} s_k^2``."""
        kept = float(np.sum(self.singular_values**2))
        return max(1.0 - kept / self.total_energy, 0.0)


def nonzero_singular_values(sigma: ArrayLike) -> NDArray[np.float64]:
    s = np.asarray(sigma, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        return s[:0]
    return s[s >= ZERO_SV_RTOL * s[0]]


def truncation_rank(sigma: ArrayLike, energy_criterion: float) -> int:
    """Smallest r with ``1 - sum_{k<=r} s_k^2 / sum_k s_k^2 <= energy_criterion``.

    ``sigma`` must be sorted nonincreasing and already stripped of numerical zeros.
    """
    if not 0.0 <= energy_criterion < 1.0:
        raise ValueError(f"energy criterion must lie in [0, 1), got {energy_criterion}")
    s2 = np.asarray(sigma, dtype=np.float64) ** 2
    if s2.size == 0:
        raise DegenerateInputError("no nonzero singular values")
    total = s2.sum()
    # tail sums are more accurate than 1 - cumsum near full rank
    tail = np.cumsum(s2[::-1])[::-1]
    residual = np.append(tail[1:], 0.0) / total
    return int(np.argmax(residual <= energy_criterion)) + 1


def _values(snapshots: Union[SnapshotMatrix, ArrayLike]) -> NDArray[np.float64]:
    if isinstance(snapshots, SnapshotMatrix):
        return snapshots.values
    a = np.asarray(snapshots, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def truncated_svd(matrix: ArrayLike, energy_criterion: float) -> PodSubspace:
    """POD of an arbitrary matrix; shared by per-parameter and global bases."""
    u = np.asarray(matrix, dtype=np.float64)
    if u.size == 0:
        raise DegenerateInputError("empty matrix")
    if not np.all(np.isfinite(u)):
        raise DegenerateInputError("matrix contains NaN or Inf")
    if not np.any(u):
        raise DegenerateInputError("all-zero snapshot matrix has no POD basis")
    n, k = u.shape
    if n >= k:
        lsv_all, sigma, _ = scipy.linalg.svd(u, full_matrices=False, check_finite=False)
    else:
        # wide matrix: the left singular vectors of U are the right ones of U^T
        _, sigma, rsv_t = scipy.linalg.svd(u.T, full_matrices=False, check_finite=False)
        lsv_all = rsv_t.T
    s = nonzero_singular_values(sigma)
    rank = truncation_rank(s, energy_criterion)
    lsv = np.ascontiguousarray(lsv_all[:, :rank])
    return PodSubspace(
        basis=OrthonormalBasis(lsv),
        singular_values=s[:rank].copy(),
        total_energy=float(np.sum(s**2)),
        energy_criterion=float(energy_criterion),
    )


def compute_pod(snapshots: Union[SnapshotMatrix, ArrayLike], energy_criterion: float) -> PodSubspace:
    """Leading left singular vectors of the snapshot matrix.

    The rank is the smallest r whose discarded relative energy does not exceed
    ``energy_criterion``.  Snapshots are not mean-centred.
    """
    return truncated_svd(_values(snapshots), energy_criterion)


def _basis_cols(subspace) -> NDArray[np.float64]:
    if isinstance(subspace, PodSubspace):
        return subspace.columns
    if isinstance(subspace, OrthonormalBasis):
        return subspace.columns
    return np.asarray(subspace, dtype=np.float64)


def pod_project(subspace, snapshots) -> NDArray[np.float64]:
    """Reduced coordinates ``Phi^T U`` of shape ``(r, N_t + 1)``."""
    phi = _basis_cols(subspace)
    u = _values(snapshots)
    if phi.shape[0] != u.shape[0]:
        raise DimensionError(f"basis has {phi.shape[0]} rows, snapshots have {u.shape[0]}")
    return phi.T @ u


def pod_lift(subspace, coefficients: ArrayLike) -> NDArray[np.float64]:
    return _basis_cols(subspace) @ np.asarray(coefficients, dtype=np.float64)


def pod_reconstruction_error(subspace, snapshots) -> NDArray[np.float64]:
    """Relative l2 projection error of every snapshot column.

    Entry j is ``||U_j - Phi Phi^T U_j|| / ||U_j||``.
    """
    u = _values(snapshots)
    coeffs = pod_project(subspace, u)
    norms = np.linalg.norm(u, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormColumnError(int(zero[0]))
    err = u - pod_lift(subspace, coeffs)
    return np.linalg.norm(err, axis=0) / norms
