import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sdal.errors import CandidatesExhaustedError, ConsistencyError, DimensionError, InsufficientDataError
from sdal.params import (
    ParameterStore,
    commit_sample,
    evenly_spaced_indices,
    latin_hypercube,
    linear_grid,
    log_grid,
    neighbor_pairs,
    select_new_sample,
    split_initial,
    unit_scaling,
)


class TestPairs:
    def test_chain_unsorted(self):
        assert neighbor_pairs([0.5, 0.0, 1.0, 0.2]) == {(1, 3), (0, 3), (0, 2)}

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=30, unique=True))
    def test_chain_matches_oracle(self, values):
        pairs = neighbor_pairs(values)
        assert pairs == oracles.chain_pairs(values)
        assert len(pairs) == len(values) - 1

    @given(st.integers(0, 2**32 - 1), st.integers(3, 40), st.integers(2, 3), st.integers(1, 4))
    def test_knn_matches_brute_force(self, seed, m, d, k):
        pts = np.random.default_rng(seed).random((m, d))
        assert neighbor_pairs(pts, k) == oracles.knn_pairs(pts, k)

    def test_too_few(self):
        with pytest.raises(InsufficientDataError):
            neighbor_pairs([0.3])

    def test_pairs_ordered(self):
        pts = np.random.default_rng(0).random((12, 2))
        assert all(i < j for i, j in neighbor_pairs(pts))


class TestStore:
    def test_rejects_duplicates_and_overlap(self):
        with pytest.raises(ConsistencyError):
            ParameterStore([0.0, 0.0, 1.0])
        with pytest.raises(ConsistencyError):
            ParameterStore([0.0, 1.0], [1.0])
        with pytest.raises(ConsistencyError):
            ParameterStore([0.0, 1.0], [0.5, 0.5])

    def test_rejects_non_finite(self):
        with pytest.raises(ConsistencyError):
            ParameterStore([0.0, np.nan])

    def test_candidate_dim(self):
        with pytest.raises(DimensionError):
            ParameterStore([[0.0, 0.0], [1.0, 1.0]], [[0.5, 0.5, 0.5]])

    def test_copy_independent(self):
        s = ParameterStore([0.0, 1.0], [0.5])
        c = s.copy()
        commit_sample(c, [0.5])
        assert s.n_training == 2 and c.n_training == 3


class TestSelection:
    def test_midpoint(self):
        s = ParameterStore([0.0, 1.0], [0.2, 0.6, 0.9])
        assert select_new_sample(s, (0, 1)).tolist() == [0.6]

    def test_tie_lowest_index(self):
        s = ParameterStore([0.0, 1.0], [0.6, 0.4])
        assert select_new_sample(s, (0, 1)).tolist() == [0.6]

    def test_tie_round_off(self):
        # |0.3 - 0.5| and |0.7 - 0.5| differ only by round-off
        s = ParameterStore([0.0, 1.0], [0.7, 0.3])
        assert select_new_sample(s, (0, 1)).tolist() == [0.7]

    def test_exhausted(self):
        with pytest.raises(CandidatesExhaustedError):
            select_new_sample(ParameterStore([0.0, 1.0]), (0, 1))

    def test_does_not_mutate(self):
        s = ParameterStore([0.0, 1.0], [0.5])
        select_new_sample(s, (0, 1))
        assert s.n_candidates == 1

    @given(st.integers(0, 2**32 - 1))
    def test_matches_oracle_2d(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.random((30, 2))
        s = ParameterStore(pts[:5], pts[5:])
        pair = s.sorted_pairs()[0]
        mid = 0.5 * (pts[pair[0]] + pts[pair[1]])
        assert np.array_equal(select_new_sample(s, pair), pts[5 + oracles.closest_candidate(pts[5:], mid)])


class TestCommit:
    def test_moves_point(self):
        s = ParameterStore([0.0, 1.0], [0.25, 0.5])
        commit_sample(s, [0.5])
        assert s.training[:, 0].tolist() == [0.0, 1.0, 0.5]
        assert s.candidates[:, 0].tolist() == [0.25]
        assert s.pair_set == {(0, 2), (1, 2)}
        assert s.pending_pairs == {(0, 2), (1, 2)}

    def test_not_a_candidate(self):
        with pytest.raises(ConsistencyError):
            commit_sample(ParameterStore([0.0, 1.0], [0.5]), [0.4])

    def test_cache_survivors(self):
        s = ParameterStore([0.0, 1.0, 2.0], [0.5, 1.5])
        s.distance_cache = {p: 1.0 for p in s.pair_set}
        commit_sample(s, [0.5])
        assert s.last_cache_hits == 1
        assert set(s.distance_cache) == {(1, 2)}
        assert s.pending_pairs == {(0, 3), (1, 3)}

    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_union_invariant(self, seed, d):
        rng = np.random.default_rng(seed)
        pts = rng.random((15, d))
        s = ParameterStore(pts[:4], pts[4:])
        before = {r.tobytes() for r in pts}
        while s.n_candidates:
            commit_sample(s, select_new_sample(s, s.sorted_pairs()[0]))
            after = {r.tobytes() for r in np.vstack([s.training, s.candidates])}
            assert after == before
            assert len(after) == s.n_training + s.n_candidates
            assert s.pair_set == neighbor_pairs(s.training, s.n_neighbors)


class TestGrids:
    def test_linear(self):
        g = linear_grid([0.0, 1.0], [1.0, 2.0], 3)
        assert g.shape == (9, 2)
        assert g[1].tolist() == [0.0, 1.5]

    def test_log(self):
        assert np.allclose(log_grid(1e-3, 1.0, 4)[:, 0], [1e-3, 1e-2, 1e-1, 1.0])
        with pytest.raises(ValueError):
            log_grid(0.0, 1.0, 3)

    def test_lhs_stratified(self):
        pts = latin_hypercube([0.0, 0.0], [1.0, 2.0], 10, seed=3)
        assert np.array_equal(pts, latin_hypercube([0.0, 0.0], [1.0, 2.0], 10, seed=3))
        for k, span in enumerate((1.0, 2.0)):
            assert sorted(np.floor(pts[:, k] / span * 10).astype(int)) == list(range(10))

    def test_unit_scaling(self):
        fwd, inv = unit_scaling([0.0, -1.0], [2.0, 1.0])
        x = np.array([[1.0, 0.0]])
        assert fwd(x).tolist() == [[0.5, 0.5]]
        assert np.allclose(inv(fwd(x)), x)

    def test_split_and_indices(self):
        assert evenly_spaced_indices(76, 12)[0] == 0 and evenly_spaced_indices(76, 12)[-1] == 75
        assert len(evenly_spaced_indices(76, 12)) == 12
        tr, cand = split_initial(linear_grid(0.0, 1.0, 5), [0, 4])
        assert tr[:, 0].tolist() == [0.0, 1.0] and len(cand) == 3
        with pytest.raises(IndexError):
            split_initial(linear_grid(0.0, 1.0, 5), [7])
        with pytest.raises(ValueError):
            evenly_spaced_indices(3, 4)
