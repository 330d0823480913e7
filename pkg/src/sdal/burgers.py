"""Periodic 1D viscous Burgers equation as a parametric full-order model.

``u_t + (u^2 / 2)_x = nu * u_xx`` on a periodic interval.  Finite volumes with
MUSCL-minmod reconstruction and a Rusanov flux for the convective term, a
central second difference for diffusion and SSP-RK2 in time.  The internal
step is ``0.4 * min(dx / max|u|, dx^2 / (2 nu))``; it is shortened when needed
so that steps land exactly on the output times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import IngestionError, ParameterError
from .pod import SnapshotMatrix

CFL = 0.4
# demo setup: a long periodic domain with a long horizon keeps the flow
# convection dominated across nu in [1e-3, 1], so POD ranks stay high
DEMO_SCALE = 120.0
DEMO_NU_RANGE = (1e-3, 1.0)
INITIAL_CONDITIONS = ("sine", "constant")
PARAM_SCALES = ("linear", "log10")


@runtime_checkable
class FomOracle(Protocol):
    """Anything that returns the snapshot matrix for a parameter point."""

    def query(self, mu: ArrayLike) -> SnapshotMatrix: ...


@dataclass(frozen=True)
class BurgersConfig:
    n_x: int = 256
    x_lo: float = 0.0
    x_hi: float = 2.0 * np.pi
    t_final: float = 2.0
    n_t: int = 100
    initial_condition: str = "sine"

    def __post_init__(self):
        if int(self.n_x) < 16:
            raise ValueError(f"n_x must be >= 16, got {self.n_x}")
        if not self.x_hi > self.x_lo:
            raise ValueError("x_hi must exceed x_lo")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if int(self.n_t) < 1:
            raise ValueError("n_t must be >= 1")
        if self.initial_condition not in INITIAL_CONDITIONS:
            raise ValueError(f"unknown initial condition {self.initial_condition!r}")

    @classmethod
    def demo(cls, **overrides) -> "BurgersConfig":
        """Domain ``[0, 2 pi s]`` and horizon ``T = 5 s`` with ``s = DEMO_SCALE``."""
        base = dict(x_hi=2.0 * np.pi * DEMO_SCALE, t_final=5.0 * DEMO_SCALE, n_t=100)
        base.update(overrides)
        return cls(**base)

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_x

    @property
    def cell_centers(self) -> NDArray[np.float64]:
        return self.x_lo + (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def time_grid(self) -> NDArray[np.float64]:
        return np.linspace(0.0, self.t_final, self.n_t + 1)

    def initial_state(self) -> NDArray[np.float64]:
        xhat = (self.cell_centers - self.x_lo) / (self.x_hi - self.x_lo)
        if self.initial_condition == "constant":
            return np.ones(self.n_x)
        return 0.5 + np.sin(2.0 * np.pi * xhat)


def _rhs(u: NDArray[np.float64], nu: float, dx: float) -> NDArray[np.float64]:
    n = u.size
    # two ghost cells per side from periodicity
    e = np.empty(n + 4)
    e[2:-2] = u
    e[:2] = u[-2:]
    e[-2:] = u[:2]
    d = np.diff(e)
    back, fwd = d[:-1], d[1:]  # backward and forward differences for cells -1..n
    slope = np.where(back * fwd > 0.0, np.copysign(np.minimum(np.abs(back), np.abs(fwd)), back), 0.0)
    c = e[1:-1]
    ul = c[:-1] + 0.5 * slope[:-1]  # faces -1/2 .. n-1/2
    ur = c[1:] - 0.5 * slope[1:]
    speed = np.maximum(np.abs(ul), np.abs(ur))
    flux = 0.25 * (ul * ul + ur * ur) - 0.5 * speed * (ur - ul)
    return -(flux[1:] - flux[:-1]) / dx + nu * (fwd[1:-1] - back[1:-1]) / (dx * dx)


def stable_dt(u: NDArray[np.float64], nu: float, dx: float) -> float:
    umax = float(np.max(np.abs(u)))
    adv = dx / umax if umax > 0 else np.inf
    return CFL * min(adv, dx * dx / (2.0 * nu))


def burgers_solve(config: BurgersConfig, nu: float, u0: NDArray[np.float64] | None = None):
    """Integrate to every output time; returns ``(values, time_grid, n_steps)``."""
    if not (np.isfinite(nu) and nu > 0):
        raise ParameterError(f"viscosity must be positive, got {nu}")
    dx = config.dx
    u = config.initial_state() if u0 is None else np.array(u0, dtype=np.float64)
    grid = config.time_grid
    out = np.empty((config.n_x, grid.size))
    out[:, 0] = u
    t = 0.0
    steps = 0
    for j in range(1, grid.size):
        target = grid[j]
        while t < target:
            dt = stable_dt(u, nu, dx)
            if t + dt >= target - 1e-14 * max(1.0, target):
                dt = target - t
            u1 = u + dt * _rhs(u, nu, dx)
            u = 0.5 * (u + u1 + dt * _rhs(u1, nu, dx))
            t = target if dt == target - t else t + dt
            steps += 1
        out[:, j] = u
    return out, grid, steps


def nu_from_mu(mu: ArrayLike, param_scale: str = "linear") -> float:
    m = np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel()
    if m.size != 1:
        raise ParameterError(f"Burgers model has one parameter, got {m.size}")
    if param_scale == "log10":
        return float(10.0 ** m[0])
    if param_scale != "linear":
        raise ValueError(f"unknown parameter scale {param_scale!r}")
    return float(m[0])


def burgers_query(config: BurgersConfig, mu: ArrayLike, param_scale: str = "linear") -> SnapshotMatrix:
    """Snapshot matrix ``(n_x, n_t + 1)`` for parameter ``mu``.

    With ``param_scale="log10"`` the parameter coordinate is ``log10(nu)``.
    """
    nu = nu_from_mu(mu, param_scale)
    values, grid, _ = burgers_solve(config, nu)
    return SnapshotMatrix(values, np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel(), grid)


class BurgersFom:
    """:class:`FomOracle` backed by the Burgers solver.  Counts queries."""

    def __init__(self, config: BurgersConfig | None = None, param_scale: str = "linear"):
        if param_scale not in PARAM_SCALES:
            raise ValueError(f"unknown parameter scale {param_scale!r}")
        self.config = config or BurgersConfig()
        self.param_scale = param_scale
        self.n_queries = 0

    def query(self, mu: ArrayLike) -> SnapshotMatrix:
        self.n_queries += 1
        return burgers_query(self.config, mu, self.param_scale)


class CachedFom:
    """Memoizes another oracle by exact parameter bytes; counts every call."""

    def __init__(self, inner: FomOracle):
        self.inner = inner
        self.cache: dict[bytes, SnapshotMatrix] = {}
        self.n_queries = 0

    def query(self, mu: ArrayLike) -> SnapshotMatrix:
        self.n_queries += 1
        key = np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel().tobytes()
        if key not in self.cache:
            self.cache[key] = self.inner.query(mu)
        return self.cache[key]


class ArchiveFom:
    """Serves precomputed snapshots looked up by exact parameter value."""

    def __init__(self, snapshots: dict[bytes, SnapshotMatrix] | None = None):
        self.snapshots = dict(snapshots or {})
        self.n_queries = 0

    @classmethod
    def from_list(cls, items) -> "ArchiveFom":
        arch = cls()
        for snap in items:
            arch.add(snap)
        return arch

    def add(self, snap: SnapshotMatrix) -> None:
        self.snapshots[snap.parameter.tobytes()] = snap

    def query(self, mu: ArrayLike) -> SnapshotMatrix:
        self.n_queries += 1
        key = np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel().tobytes()
        try:
            return self.snapshots[key]
        except KeyError:
            raise IngestionError(f"no archived snapshots for mu={np.frombuffer(key).tolist()}") from None


class CallableFom:
    """Adapts a plain function ``mu -> SnapshotMatrix``."""

    def __init__(self, fn: Callable[[NDArray[np.float64]], SnapshotMatrix]):
        self.fn = fn
        self.n_queries = 0

    def query(self, mu: ArrayLike) -> SnapshotMatrix:
        self.n_queries += 1
        return self.fn(np.atleast_1d(np.asarray(mu, dtype=np.float64)).ravel())
