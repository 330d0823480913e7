"""POD-KSNN surrogate: parameter interpolation of whole snapshot matrices,
then per-query POD and time interpolation of the reduced coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateInputError, DimensionError, IngestionError, InsufficientDataError, TimeRangeError
from .pod import PodSubspace, SnapshotMatrix, pod_lift, pod_project, truncated_svd
from .rbf import InterpolationSystem, RbfKernelSpec, RbfNetwork, factor_interpolation, fit_interpolation

# time tolerance when checking that t* lies inside the grid
_T_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class PodKsnnOffline:
    """Trained parameter network; its output is the column-stacked snapshot matrix."""

    mu_net: RbfNetwork
    time_grid: NDArray[np.float64]
    n_dofs: int
    energy_criterion: float
    time_kernel: RbfKernelSpec
    # the time Gram matrix depends only on the grid, so it is factored once here
    time_system: InterpolationSystem = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.array(self.time_grid, dtype=np.float64)
        grid.setflags(write=False)
        object.__setattr__(self, "time_grid", grid)
        if self.mu_net.output_dim != self.n_dofs * grid.size:
            raise DimensionError(
                f"parameter network has {self.mu_net.output_dim} outputs, expected {self.n_dofs * grid.size}"
            )
        object.__setattr__(self, "time_system", factor_interpolation(grid, self.time_kernel))

    @property
    def n_times(self) -> int:
        return self.time_grid.size

    @property
    def param_dim(self) -> int:
        return self.mu_net.input_dim


@dataclass(frozen=True, eq=False)
class PodKsnnOnlineResult:
    basis: PodSubspace
    reduced_trajectory: NDArray[np.float64]  # (r*, N_t + 1)
    time_net: RbfNetwork


def check_consistent(snapshots: Sequence[SnapshotMatrix]) -> tuple[int, NDArray[np.float64]]:
    """Shared DOF count and time grid of a snapshot collection."""
    if not snapshots:
        raise InsufficientDataError("no snapshots")
    n, grid = snapshots[0].n_dofs, snapshots[0].time_grid
    for k, s in enumerate(snapshots[1:], start=1):
        if s.n_dofs != n:
            raise IngestionError(f"snapshot {k} has {s.n_dofs} DOFs, expected {n}")
        if s.time_grid.shape != grid.shape or not np.array_equal(s.time_grid, grid):
            raise IngestionError(f"snapshot {k} has a different time grid")
    return n, grid


def offline_build(
    parameters: ArrayLike,
    snapshots: Sequence[SnapshotMatrix],
    kernel: RbfKernelSpec = RbfKernelSpec(),
    energy_criterion: float = 1e-6,
    time_kernel: Optional[RbfKernelSpec] = None,
) -> PodKsnnOffline:
    """Fit the parameter network in interpolation mode over vectorized snapshots."""
    mus = np.asarray(parameters, dtype=np.float64)
    mus = mus.reshape(len(snapshots), -1)
    if len(snapshots) < 2:
        raise InsufficientDataError("POD-KSNN needs at least 2 training parameters")
    n, grid = check_consistent(snapshots)
    # column-major flattening stacks the time columns one after another
    targets = np.stack([s.values.ravel(order="F") for s in snapshots])
    net = fit_interpolation(mus, targets, kernel)
    return PodKsnnOffline(net, grid, n, float(energy_criterion), time_kernel or kernel)


def interpolate_snapshots(offline: PodKsnnOffline, mu: ArrayLike) -> NDArray[np.float64]:
    """``U^I(mu)`` of shape ``(N, N_t + 1)``."""
    m = np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel()
    if m.size != offline.param_dim:
        raise DimensionError(f"parameter has dimension {m.size}, network expects {offline.param_dim}")
    flat = offline.mu_net.hidden(m[None, :]) @ offline.mu_net.weights
    return flat.reshape((offline.n_dofs, offline.n_times), order="F")


def online_prepare(offline: PodKsnnOffline, mu: ArrayLike, energy_criterion: Optional[float] = None) -> PodKsnnOnlineResult:
    """Per-parameter part of a query: interpolate, compress, fit the time network."""
    eta = offline.energy_criterion if energy_criterion is None else energy_criterion
    u_i = interpolate_snapshots(offline, mu)
    if not np.any(u_i):
        raise DegenerateInputError("interpolated snapshot matrix is all zero")
    basis = truncated_svd(u_i, eta)
    a = pod_project(basis, u_i)
    tnet = offline.time_system.fit(a.T)
    return PodKsnnOnlineResult(basis, a, tnet)


def check_time(offline: PodKsnnOffline, t: ArrayLike, allow_extrapolation: bool) -> NDArray[np.float64]:
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
    lo, hi = offline.time_grid[0], offline.time_grid[-1]
    slack = _T_SLACK * max(1.0, abs(hi))
    if not allow_extrapolation and (np.any(ts < lo - slack) or np.any(ts > hi + slack)):
        raise TimeRangeError(f"query time outside [{lo}, {hi}]; pass allow_extrapolation=True to override")
    return ts


def online_query(
    offline: PodKsnnOffline,
    mu: ArrayLike,
    t: ArrayLike,
    energy_criterion: Optional[float] = None,
    allow_extrapolation: bool = False,
    prepared: Optional[PodKsnnOnlineResult] = None,
):
    """Solution at ``(t, mu)``.

    Returns ``(u, result)`` where ``u`` has shape ``(N,)`` for a scalar time and
    ``(N, k)`` for ``k`` times.  ``prepared`` reuses an earlier
    :func:`online_prepare` for the same parameter.
    """
    scalar = np.ndim(t) == 0
    ts = check_time(offline, t, allow_extrapolation)
    res = prepared if prepared is not None else online_prepare(offline, mu, energy_criterion)
    alpha = res.time_net.evaluate(ts[:, None]).reshape(ts.size, -1)
    u = pod_lift(res.basis, alpha.T)
    return (u[:, 0] if scalar else u), res
