"""POD-NN-style surrogate: a global basis from the POD of stacked per-parameter
bases and a regressor for the reduced coefficients over ``(t, mu)``."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, InsufficientDataError
from .pod import PodSubspace, SnapshotMatrix, truncated_svd
from .rbf import RbfKernelSpec, fit_interpolation, fit_regression
from .rom_ksnn import check_consistent
from .subspace import OrthonormalBasis


@dataclass(frozen=True, eq=False)
class GlobalBasis:
    basis: OrthonormalBasis
    singular_values: NDArray[np.float64]
    energy_criterion: float

    @property
    def rank(self) -> int:
        return self.basis.subspace_dim

    @property
    def columns(self) -> NDArray[np.float64]:
        return self.basis.columns


def build_global_basis(subspaces: Sequence[PodSubspace], energy_criterion: float) -> GlobalBasis:
    """POD of ``[Phi_1 | ... | Phi_m]`` truncated at ``energy_criterion``."""
    if not subspaces:
        raise InsufficientDataError("need at least one parameter-specific basis")
    n = subspaces[0].columns.shape[0]
    for k, s in enumerate(subspaces):
        if s.columns.shape[0] != n:
            raise DimensionError(f"basis {k} has ambient dimension {s.columns.shape[0]}, expected {n}")
    stacked = np.hstack([s.columns for s in subspaces])
    pod = truncated_svd(stacked, energy_criterion)
    return GlobalBasis(pod.basis, pod.singular_values, float(energy_criterion))


def reduce_training(basis: GlobalBasis, snapshots: Sequence[SnapshotMatrix]) -> list[NDArray[np.float64]]:
    """``B(mu_i) = V^T U(mu_i)`` for every training snapshot matrix."""
    v = basis.columns
    out = []
    for k, s in enumerate(snapshots):
        if s.n_dofs != v.shape[0]:
            raise DimensionError(f"snapshot {k} has {s.n_dofs} DOFs, basis has {v.shape[0]}")
        out.append(v.T @ s.values)
    return out


class RegressorKind(str, enum.Enum):
    RBF = "rbf"
    MLP = "mlp"


@dataclass(frozen=True, eq=False)
class ReducedRegressor:
    """Map ``(t, mu) -> beta``.  Inputs are scaled to the unit box before evaluation."""

    kind: RegressorKind
    model: object
    input_lo: NDArray[np.float64]
    input_hi: NDArray[np.float64]

    @property
    def input_dim(self) -> int:
        return self.input_lo.size

    def scale(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=np.float64)
        x = x.reshape(-1, self.input_dim) if x.ndim != 2 else x
        if x.shape[1] != self.input_dim:
            raise DimensionError(f"regressor expects {self.input_dim} inputs, got {x.shape[1]}")
        span = np.where(self.input_hi > self.input_lo, self.input_hi - self.input_lo, 1.0)
        return (x - self.input_lo) / span

    def predict(self, x: ArrayLike) -> NDArray[np.float64]:
        """Batch prediction, shape ``(count, r_global)``."""
        z = self.scale(x)
        if self.kind is RegressorKind.RBF:
            return self.model.hidden(z) @ self.model.weights
        return self.model.predict(z)


@dataclass
class RegressorSettings:
    kind: RegressorKind = RegressorKind.RBF
    kernel: RbfKernelSpec = field(default_factory=lambda: RbfKernelSpec("multiquadric", 0.1))
    max_centers: Optional[int] = None  # None: interpolation mode
    split: float = 1.0  # fraction used for fitting; the rest is held out
    seed: int = 0
    mlp_hidden: tuple[int, ...] = (64, 64)
    mlp_epochs: int = 3000
    mlp_lr: float = 0.01
    mlp_halve_every: int = 1000


def training_inputs(parameters: ArrayLike, time_grid: ArrayLike) -> NDArray[np.float64]:
    """Rows ``(t_j, mu_i)`` ordered by parameter, then time."""
    mus = np.asarray(parameters, dtype=np.float64)
    t = np.asarray(time_grid, dtype=np.float64).ravel()
    mus = mus.reshape(mus.shape[0], -1)
    rows = [np.column_stack([t, np.repeat(m[None, :], t.size, axis=0)]) for m in mus]
    return np.vstack(rows)


def split_indices(count: int, fraction: float, seed: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    if not 0.0 < fraction <= 1.0:
        raise ValueError("split fraction must lie in (0, 1]")
    if fraction == 1.0:
        return np.arange(count), np.arange(0)
    perm = np.random.default_rng(seed).permutation(count)
    k = max(2, int(round(fraction * count)))
    return np.sort(perm[:k]), np.sort(perm[k:])


def fit_regressor(inputs: ArrayLike, targets: ArrayLike, settings: RegressorSettings = RegressorSettings()):
    """Train ``beta`` on ``(t, mu)`` inputs.  Returns ``(regressor, held_out_indices)``."""
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    x = x.reshape(len(x), -1)
    y = y.reshape(len(y), -1)
    if len(x) != len(y):
        raise DimensionError(f"{len(x)} inputs but {len(y)} targets")
    if len(np.unique(x, axis=0)) < 2:
        raise InsufficientDataError("need at least 2 distinct (t, mu) samples")
    fit_idx, held = split_indices(len(x), settings.split, settings.seed)
    lo, hi = x[fit_idx].min(axis=0), x[fit_idx].max(axis=0)
    reg = ReducedRegressor(RegressorKind(settings.kind), None, lo, hi)
    z = reg.scale(x[fit_idx])
    if reg.kind is RegressorKind.RBF:
        if settings.max_centers is None or settings.max_centers >= len(z):
            model = fit_interpolation(z, y[fit_idx], settings.kernel)
        else:
            model = fit_regression(z, y[fit_idx], settings.kernel, settings.max_centers)
    else:
        from .mlp import fit_mlp

        model = fit_mlp(z, y[fit_idx], settings)
    return ReducedRegressor(reg.kind, model, lo, hi), held


@dataclass(frozen=True, eq=False)
class PodNnRom:
    basis: GlobalBasis
    regressor: ReducedRegressor
    time_grid: NDArray[np.float64]


def offline_build(
    parameters: ArrayLike,
    snapshots: Sequence[SnapshotMatrix],
    energy_criterion: float,
    global_energy_criterion: float,
    settings: RegressorSettings = RegressorSettings(),
    subspaces: Optional[Sequence[PodSubspace]] = None,
) -> PodNnRom:
    """Per-parameter POD, global POD, projection and regressor training."""
    from .pod import compute_pod

    _, grid = check_consistent(snapshots)
    if subspaces is None:
        subspaces = [compute_pod(s, energy_criterion) for s in snapshots]
    gb = build_global_basis(subspaces, global_energy_criterion)
    coeffs = reduce_training(gb, snapshots)
    x = training_inputs(np.asarray(parameters).reshape(len(snapshots), -1), grid)
    y = np.vstack([b.T for b in coeffs])
    reg, _ = fit_regressor(x, y, settings)
    return PodNnRom(gb, reg, grid)


def online_query(rom: PodNnRom, mu: ArrayLike, t: ArrayLike) -> NDArray[np.float64]:
    """``V beta(t, mu)``; shape ``(N,)`` for a scalar time, ``(N, k)`` for ``k`` times."""
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
    m = np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel()
    if m.size + 1 != rom.regressor.input_dim:
        raise DimensionError(f"parameter has dimension {m.size}, regressor expects {rom.regressor.input_dim - 1}")
    x = np.column_stack([ts, np.repeat(m[None, :], ts.size, axis=0)])
    beta = rom.regressor.predict(x)
    u = rom.basis.columns @ beta.T
    return u[:, 0] if scalar else u
