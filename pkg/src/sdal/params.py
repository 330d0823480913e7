"""Training set, candidate set, neighbour pairs and new-sample selection."""

from __future__ import annotations

from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .errors import CandidatesExhaustedError, ConsistencyError, DimensionError, InsufficientDataError

Pair = tuple[int, int]

DEFAULT_NEIGHBORS = 2


def _as_points(points: ArrayLike, dim: int | None = None) -> NDArray[np.float64]:
    a = np.asarray(points, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1) if dim in (None, 1) else a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionError(f"points must be 2-D (count x N_mu), got shape {a.shape}")
    if dim is not None and a.shape[0] and a.shape[1] != dim:
        raise DimensionError(f"expected {dim}-dimensional points, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise ConsistencyError("parameter points must be finite")
    return a


def _row_keys(a: NDArray[np.float64]) -> list[bytes]:
    return [r.tobytes() for r in np.ascontiguousarray(a)]


class ParameterStore:
    """Training parameters P, candidates P*, neighbour pairs and a distance cache.

    Pairs are index pairs ``(i, j)`` with ``i < j`` into ``training``.  New
    training points are appended, so indices of existing points never change
    and cached distances stay valid for pairs that survive a rebuild.
    """

    def __init__(self, training: ArrayLike, candidates: ArrayLike = (), n_neighbors: int = DEFAULT_NEIGHBORS):
        tr = _as_points(training)
        dim = tr.shape[1]
        cand = np.asarray(candidates, dtype=np.float64)
        cand = cand.reshape(0, dim) if cand.size == 0 else _as_points(cand, dim)
        if len(set(_row_keys(tr))) != len(tr):
            raise ConsistencyError("training set contains duplicate points")
        if len(set(_row_keys(cand))) != len(cand):
            raise ConsistencyError("candidate set contains duplicate points")
        if set(_row_keys(tr)) & set(_row_keys(cand)):
            raise ConsistencyError("training and candidate sets overlap")
        if n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.training = tr
        self.candidates = cand
        self.n_neighbors = int(n_neighbors)
        self.pair_set: set[Pair] = set()
        self.distance_cache: dict[Pair, float] = {}
        self.pending_pairs: set[Pair] = set()
        self.last_cache_hits = 0
        if len(tr) >= 2:
            self.rebuild_pairs()

    @property
    def dim(self) -> int:
        return self.training.shape[1]

    @property
    def n_training(self) -> int:
        return len(self.training)

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    def sorted_pairs(self) -> list[Pair]:
        return sorted(self.pair_set)

    def rebuild_pairs(self) -> set[Pair]:
        """Recompute the pair set, keep cached distances of surviving pairs."""
        new = build_neighbor_pairs(self)
        old_keys = set(self.distance_cache)
        self.last_cache_hits = len(old_keys & new)
        self.distance_cache = {p: d for p, d in self.distance_cache.items() if p in new}
        self.pair_set = new
        self.pending_pairs = new - set(self.distance_cache)
        return new

    def copy(self) -> "ParameterStore":
        other = ParameterStore.__new__(ParameterStore)
        other.training = self.training.copy()
        other.candidates = self.candidates.copy()
        other.n_neighbors = self.n_neighbors
        other.pair_set = set(self.pair_set)
        other.distance_cache = dict(self.distance_cache)
        other.pending_pairs = set(self.pending_pairs)
        other.last_cache_hits = self.last_cache_hits
        return other


def neighbor_pairs(points: ArrayLike, n_neighbors: int = DEFAULT_NEIGHBORS) -> set[Pair]:
    """Unordered index pairs of neighbouring points.

    In one dimension the points form a chain in sorted order (``m - 1`` pairs).
    Otherwise every point is paired with its ``n_neighbors`` nearest
    Euclidean neighbours, looked up with a kd-tree.
    """
    pts = _as_points(points)
    m = len(pts)
    if m < 2:
        raise InsufficientDataError(f"need at least 2 training points to form pairs, got {m}")
    if pts.shape[1] == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        return {tuple(sorted((int(a), int(b)))) for a, b in zip(order[:-1], order[1:])}
    k = min(n_neighbors, m - 1)
    _, idx = cKDTree(pts).query(pts, k=k + 1)
    pairs = set()
    for i, row in enumerate(np.atleast_2d(idx)):
        for j in row:
            j = int(j)
            if j != i:
                pairs.add((min(i, j), max(i, j)))
    return pairs


def build_neighbor_pairs(store: ParameterStore) -> set[Pair]:
    return neighbor_pairs(store.training, store.n_neighbors)


def _closest_candidate(candidates: NDArray[np.float64], target: NDArray[np.float64]) -> int:
    dist = np.linalg.norm(candidates - target, axis=1)
    best = dist.min()
    # values equal up to round-off count as ties; lowest storage index wins
    tie = np.flatnonzero(dist <= best + 1e-12 * max(1.0, best))
    return int(tie[0])


def select_new_sample(store: ParameterStore, worst_pair: Pair) -> NDArray[np.float64]:
    """Candidate closest to the midpoint of ``worst_pair``.

    The store is not modified; pass the result to :func:`commit_sample`.
    """
    if store.n_candidates == 0:
        raise CandidatesExhaustedError("candidate set is empty")
    a, b = worst_pair
    mid = 0.5 * (store.training[a] + store.training[b])
    return store.candidates[_closest_candidate(store.candidates, mid)].copy()


def commit_sample(store: ParameterStore, sample: ArrayLike) -> ParameterStore:
    """Move ``sample`` from the candidates to the end of the training set.

    Rebuilds the pair set; cached distances of surviving pairs are kept and
    new pairs are listed in ``store.pending_pairs``.
    """
    s = np.asarray(sample, dtype=np.float64).reshape(-1)
    if s.size != store.dim:
        raise DimensionError(f"sample has dimension {s.size}, store has {store.dim}")
    hits = np.flatnonzero(np.all(store.candidates == s, axis=1)) if store.n_candidates else []
    if len(hits) == 0:
        raise ConsistencyError(f"sample {s.tolist()} is not in the candidate set")
    store.candidates = np.delete(store.candidates, hits[0], axis=0)
    store.training = np.vstack([store.training, s[None, :]])
    store.rebuild_pairs()
    return store


def linear_grid(lo, hi, count: int) -> NDArray[np.float64]:
    """Tensor grid with ``count`` points per dimension (``lo``/``hi`` scalars or per-dimension)."""
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    axes = [np.linspace(a, b, count) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def log_grid(lo, hi, count: int) -> NDArray[np.float64]:
    """Like :func:`linear_grid` but log10-spaced between positive ``lo`` and ``hi``."""
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    if np.any(lo <= 0) or np.any(hi <= 0):
        raise ValueError("log-spaced grids need positive bounds")
    return 10.0 ** linear_grid(np.log10(lo), np.log10(hi), count)


def latin_hypercube(lo, hi, count: int, seed: int) -> NDArray[np.float64]:
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    sampler = qmc.LatinHypercube(d=lo.size, seed=seed)
    return qmc.scale(sampler.random(count), lo, hi)


def unit_scaling(lo, hi):
    """Affine maps between the box ``[lo, hi]`` and ``[0, 1]^d``."""
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    span = np.where(hi > lo, hi - lo, 1.0)

    def forward(x):
        return (np.asarray(x, dtype=float) - lo) / span

    def inverse(z):
        return np.asarray(z, dtype=float) * span + lo

    return forward, inverse


def split_initial(grid: ArrayLike, indices: Iterable[int]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Split a point grid into (training, candidates) by row index."""
    g = _as_points(grid)
    idx = sorted(set(int(i) for i in indices))
    if any(i < 0 or i >= len(g) for i in idx):
        raise IndexError("initial index out of range")
    mask = np.zeros(len(g), bool)
    mask[idx] = True
    return g[mask], g[~mask]


def evenly_spaced_indices(total: int, count: int) -> list[int]:
    if count > total:
        raise ValueError(f"cannot pick {count} of {total} points")
    return sorted(set(np.round(np.linspace(0, total - 1, count)).astype(int).tolist()))
