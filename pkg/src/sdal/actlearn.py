"""Greedy parameter sampling driven by distances between POD subspaces.

Two loop variants share one state machine:

* budget: add exactly ``max_query`` samples (fewer if candidates run out);
* tolerance: add samples while the largest neighbour distance exceeds
  ``tol_d``; then certify with an interpolated POD-error estimate and, if it
  exceeds ``tol_e``, force another round.

Every iteration picks the neighbour pair with the farthest subspaces and
queries the full-order model at the candidate closest to the pair midpoint.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numpy.typing import NDArray

from .burgers import FomOracle
from .errors import EstimatorError, FomError, InsufficientDataError
from .io import _fmt, atomic_write_text
from .params import ParameterStore, Pair, commit_sample, select_new_sample
from .pod import PodSubspace, SnapshotMatrix, compute_pod, pod_reconstruction_error
from .rbf import RbfKernelSpec, fit_interpolation
from .subspace import Measure, measure_function

# value written to trace files for quantities that were not evaluated
TRACE_SENTINEL = 100.0


class Variant(str, enum.Enum):
    BUDGET = "A"
    TOLERANCE = "B"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().upper()
        aliases = {"BUDGET": "A", "BUDGETA": "A", "TOLERANCE": "B", "TOLERANCEB": "B"}
        key = aliases.get(key, key)
        for v in cls:
            if v.value == key:
                return v
        raise ValueError(f"unknown variant {value!r}; expected 'A' or 'B'")


class Status(str, enum.Enum):
    BUDGET_SPENT = "budget_spent"
    CONVERGED = "converged"
    CONVERGED_AT_INIT = "converged_at_init"
    EXHAUSTED = "candidates_exhausted"
    OUTER_LIMIT = "outer_limit_reached"


@dataclass(frozen=True)
class ActiveLearnConfig:
    """Loop settings.  Budget runs need ``max_query``; tolerance runs need both tolerances."""

    variant: Variant = Variant.BUDGET
    measure: Measure = Measure.D2HAT
    energy_criterion: float = 1e-6
    max_query: Optional[int] = None
    tol_d: Optional[float] = None
    tol_e: Optional[float] = None
    estimator_kernel: RbfKernelSpec = field(default_factory=RbfKernelSpec)
    max_outer: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "measure", Measure.parse(self.measure))
        if not 0.0 <= self.energy_criterion < 1.0:
            raise ValueError("energy_criterion must lie in [0, 1)")
        if self.variant is Variant.BUDGET:
            if self.max_query is None:
                raise ValueError("max_query is required for the budget variant")
            if int(self.max_query) < 0:
                raise ValueError("max_query must be >= 0")
        else:
            for name in ("tol_d", "tol_e"):
                v = getattr(self, name)
                if v is None:
                    raise ValueError(f"{name} is required for the tolerance variant")
                if not v > 0:
                    raise ValueError(f"{name} must be positive")
        if self.max_outer is not None and self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    mu: NDArray[np.float64]
    mu_a: NDArray[np.float64]
    mu_b: NDArray[np.float64]
    d_pair: float  # distance of the selected pair before the new sample
    d_max: float  # largest neighbour distance after the new sample
    rank: int  # POD rank of the new sample
    rank_a: int
    rank_b: int
    estimator: Optional[float] = None


@dataclass
class ActiveLearnResult:
    store: ParameterStore
    snapshots: list[SnapshotMatrix]
    subspaces: list[PodSubspace]
    trace: list[TraceRecord]
    status: Status
    initial_d_max: float
    final_d_max: float
    estimator: Optional[float]
    n_queries: int
    estimator_history: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status in (Status.CONVERGED, Status.CONVERGED_AT_INIT)

    @property
    def selected(self) -> NDArray[np.float64]:
        if not self.trace:
            return np.empty((0, self.store.dim))
        return np.array([r.mu for r in self.trace])

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "n_queries": self.n_queries,
            "n_training": self.store.n_training,
            "n_candidates": self.store.n_candidates,
            "initial_d_max": self.initial_d_max,
            "final_d_max": self.final_d_max,
            "estimator": self.estimator,
            "estimator_history": list(self.estimator_history),
        }


def error_estimator(
    store: ParameterStore,
    snapshots: list[SnapshotMatrix],
    subspaces: list[PodSubspace],
    kernel: RbfKernelSpec = RbfKernelSpec(),
) -> float:
    """Largest interpolated relative POD projection error over the candidates.

    For each training point the relative l2 error of the POD projection is
    taken per time instance.  An RBF interpolant of these error vectors over
    parameter space is evaluated at every candidate; the sup over time and
    then the max over candidates is returned.
    """
    if store.n_candidates == 0:
        raise EstimatorError("candidate set is empty; nothing to certify")
    if store.n_training < 2:
        raise InsufficientDataError("error estimator needs at least 2 training points")
    if not (len(snapshots) == len(subspaces) == store.n_training):
        raise EstimatorError("snapshots, subspaces and training points are out of sync")
    eps = np.stack([pod_reconstruction_error(phi, u) for phi, u in zip(subspaces, snapshots)])
    net = fit_interpolation(store.training, eps, kernel)
    pred = net.evaluate(store.candidates)
    pred = pred.reshape(store.n_candidates, -1)
    return float(np.max(np.abs(pred)))


class _Loop:
    """Shared bookkeeping for both variants."""

    def __init__(self, store: ParameterStore, snapshots, fom: FomOracle, config: ActiveLearnConfig):
        if store.n_training < 2:
            raise InsufficientDataError("active learning needs at least 2 training points")
        if len(snapshots) != store.n_training:
            raise InsufficientDataError(
                f"{len(snapshots)} snapshot matrices for {store.n_training} training points"
            )
        self.store = store
        self.fom = fom
        self.config = config
        self.distance = measure_function(config.measure)
        self.snapshots = list(snapshots)
        self.subspaces = [compute_pod(u, config.energy_criterion) for u in self.snapshots]
        self.trace: list[TraceRecord] = []
        self.n_queries = 0
        self.iteration = 1
        # rebuild so that the cache starts empty and every pair is evaluated once
        store.distance_cache.clear()
        store.rebuild_pairs()
        self._evaluate_pending()

    def _evaluate_pending(self) -> None:
        cache = self.store.distance_cache
        for i, j in sorted(self.store.pending_pairs):
            cache[(i, j)] = self.distance(self.subspaces[i].basis, self.subspaces[j].basis)
        self.store.pending_pairs = set()

    def worst_pair(self) -> tuple[Pair, float]:
        # ties go to the lexicographically smallest pair
        best, best_d = None, -np.inf
        for p in sorted(self.store.distance_cache):
            d = self.store.distance_cache[p]
            if d > best_d:
                best, best_d = p, d
        return best, float(best_d)

    def step(self) -> TraceRecord:
        """Add one sample.  Raises CandidatesExhaustedError when nothing is left."""
        store = self.store
        pair, d_pair = self.worst_pair()
        sample = select_new_sample(store, pair)
        mu_a, mu_b = store.training[pair[0]].copy(), store.training[pair[1]].copy()
        try:
            snap = self.fom.query(sample)
        except Exception as exc:  # noqa: BLE001 - any oracle failure is reported with context
            raise FomError(self.iteration, sample, exc) from exc
        self.n_queries += 1
        phi = compute_pod(snap, self.config.energy_criterion)
        commit_sample(store, sample)
        self.snapshots.append(snap)
        self.subspaces.append(phi)
        self._evaluate_pending()
        _, d_max = self.worst_pair()
        rec = TraceRecord(
            iteration=self.iteration,
            mu=sample,
            mu_a=mu_a,
            mu_b=mu_b,
            d_pair=d_pair,
            d_max=d_max,
            rank=phi.rank,
            rank_a=self.subspaces[pair[0]].rank,
            rank_b=self.subspaces[pair[1]].rank,
        )
        self.trace.append(rec)
        self.iteration += 1
        return rec

    def attach_estimator(self, value: float) -> None:
        if self.trace:
            last = self.trace[-1]
            self.trace[-1] = TraceRecord(**{**last.__dict__, "estimator": value})

    def result(self, status, initial_d_max, estimator=None, history=()) -> ActiveLearnResult:
        return ActiveLearnResult(
            store=self.store,
            snapshots=self.snapshots,
            subspaces=self.subspaces,
            trace=self.trace,
            status=status,
            initial_d_max=initial_d_max,
            final_d_max=self.worst_pair()[1],
            estimator=estimator,
            n_queries=self.n_queries,
            estimator_history=list(history),
        )


def run_variant_a(store: ParameterStore, snapshots, fom: FomOracle, config: ActiveLearnConfig) -> ActiveLearnResult:
    """Budget-limited loop: ``min(max_query, |candidates|)`` new samples."""
    loop = _Loop(store, snapshots, fom, config)
    initial = loop.worst_pair()[1]
    budget = int(config.max_query or 0)
    while loop.iteration <= budget:
        if store.n_candidates == 0:
            return loop.result(Status.EXHAUSTED, initial)
        loop.step()
    return loop.result(Status.BUDGET_SPENT, initial)


def run_variant_b(store: ParameterStore, snapshots, fom: FomOracle, config: ActiveLearnConfig) -> ActiveLearnResult:
    """Tolerance-driven nested loop.

    The inner loop adds samples while the largest neighbour distance exceeds
    ``tol_d``.  The estimator is then evaluated; if it exceeds ``tol_e`` the
    inner loop is forced to run again (at least one sample) with the same
    ``tol_d``.  ``max_outer`` optionally caps the number of estimator rounds.
    """
    loop = _Loop(store, snapshots, fom, config)
    initial = loop.worst_pair()[1]
    d_max: Optional[float] = initial
    history: list[float] = []
    while True:
        # d_max is None right after a failed certification: forces one more sample
        while d_max is None or d_max > config.tol_d:
            if store.n_candidates == 0:
                return loop.result(Status.EXHAUSTED, initial, history[-1] if history else None, history)
            d_max = loop.step().d_max
        if store.n_candidates == 0:
            return loop.result(Status.EXHAUSTED, initial, history[-1] if history else None, history)
        estimate = error_estimator(store, loop.snapshots, loop.subspaces, config.estimator_kernel)
        history.append(estimate)
        loop.attach_estimator(estimate)
        if estimate <= config.tol_e:
            status = Status.CONVERGED if loop.n_queries else Status.CONVERGED_AT_INIT
            return loop.result(status, initial, estimate, history)
        if config.max_outer is not None and len(history) >= config.max_outer:
            return loop.result(Status.OUTER_LIMIT, initial, estimate, history)
        d_max = None


def run_active_learning(store, snapshots, fom, config: ActiveLearnConfig) -> ActiveLearnResult:
    if config.variant is Variant.BUDGET:
        return run_variant_a(store, snapshots, fom, config)
    return run_variant_b(store, snapshots, fom, config)


def trace_header(dim: int) -> list[str]:
    def cols(prefix):
        return [f"{prefix}_{k}" for k in range(dim)] if dim > 1 else [prefix]

    return ["iter", *cols("mu"), *cols("mu_a"), *cols("mu_b"), "d_pair", "d_max", "rank", "rank_a", "rank_b", "estimator"]


def trace_to_csv(trace: list[TraceRecord], dim: int) -> str:
    """CSV text of a trace; unevaluated estimator entries are written as 100."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(dim))
    for r in trace:
        est = TRACE_SENTINEL if r.estimator is None else r.estimator
        w.writerow(
            [
                r.iteration,
                *map(_fmt, r.mu),
                *map(_fmt, r.mu_a),
                *map(_fmt, r.mu_b),
                _fmt(r.d_pair),
                _fmt(r.d_max),
                r.rank,
                r.rank_a,
                r.rank_b,
                _fmt(est),
            ]
        )
    return buf.getvalue()


def write_trace_csv(path, trace: list[TraceRecord], dim: int) -> None:
    atomic_write_text(path, trace_to_csv(trace, dim))


def read_trace_csv(path) -> list[dict]:
    """Rows of a trace file as dicts of floats (``iter`` and ranks as ints)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = {"iter", "rank", "rank_a", "rank_b"}
    return [{k: (int(v) if k in ints else float(v)) for k, v in row.items()} for row in rows]


def full_pairwise_distances(store: ParameterStore, subspaces, measure: Union[str, Measure]) -> dict[Pair, float]:
    """From-scratch evaluation of every current pair; used to audit the cache."""
    fn = measure_function(measure)
    return {p: fn(subspaces[p[0]].basis, subspaces[p[1]].basis) for p in sorted(store.pair_set)}
