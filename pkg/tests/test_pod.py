import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sdal.errors import DegenerateInputError, DimensionError, IngestionError, ZeroNormColumnError
from sdal.pod import (
    SnapshotMatrix,
    compute_pod,
    nonzero_singular_values,
    pod_lift,
    pod_project,
    pod_reconstruction_error,
    truncated_svd,
    truncation_rank,
)


def matrix_with_singular_values(sigma, n=6, k=4, seed=0):
    rng = np.random.default_rng(seed)
    u = np.linalg.qr(rng.standard_normal((n, len(sigma))))[0]
    v = np.linalg.qr(rng.standard_normal((k, len(sigma))))[0]
    return u @ np.diag(sigma) @ v.T


class TestSnapshotMatrix:
    def test_validates(self):
        with pytest.raises(IngestionError):
            SnapshotMatrix(np.ones((3, 2)), [0.1], [0.0, 1.0, 2.0])
        with pytest.raises(IngestionError):
            SnapshotMatrix(np.array([[np.nan, 1.0]]), [0.1], [0.0, 1.0])
        with pytest.raises(IngestionError):
            SnapshotMatrix(np.ones((3, 2)), [0.1], [1.0, 0.0])

    def test_immutable(self):
        s = SnapshotMatrix(np.ones((3, 2)), [0.1], [0.0, 1.0])
        with pytest.raises(ValueError):
            s.values[0, 0] = 2.0
        assert (s.n_dofs, s.n_times) == (3, 2)


class TestTruncation:
    def test_rank_one(self):
        u = np.outer(np.arange(1.0, 6.0), np.arange(1.0, 4.0))
        for eta in (1e-12, 0.3, 0.9):
            pod = compute_pod(u, eta)
            assert pod.rank == 1
            c = pod.columns[:, 0]
            assert abs(c @ np.arange(1.0, 6.0)) == pytest.approx(np.linalg.norm(np.arange(1.0, 6.0)))

    @pytest.mark.parametrize("eta, rank", [(0.5, 1), (0.1, 2)])
    def test_sigma_two_one(self, eta, rank):
        # residual after r = 1 is 1/5; frozen from the exhaustive scan oracle
        u = matrix_with_singular_values([2.0, 1.0])
        assert oracles.pod_rank_scan(u, eta) == rank
        pod = compute_pod(u, eta)
        assert pod.rank == rank
        assert pod.singular_values == pytest.approx([2.0, 1.0][:rank])

    def test_zero_matrix(self):
        with pytest.raises(DegenerateInputError):
            compute_pod(np.zeros((4, 3)), 1e-3)

    def test_bad_eta(self):
        with pytest.raises(ValueError):
            truncation_rank([1.0], 1.0)

    def test_numerical_zero_threshold(self):
        s = nonzero_singular_values([1.0, 1e-11, 1e-13])
        assert s.tolist() == [1.0, 1e-11]

    def test_wide_matrix_path(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal((4, 30))
        pod = compute_pod(u, 0.0)
        assert pod.rank == 4
        assert np.linalg.norm(u - pod_lift(pod, pod_project(pod, u))) <= 1e-12 * np.linalg.norm(u)

    def test_snapshot_input(self):
        s = SnapshotMatrix(matrix_with_singular_values([3.0, 2.0, 1e-3]), [0.5], np.arange(4.0))
        assert compute_pod(s, 1e-3).rank == 2

    @given(
        st.integers(0, 2**32 - 1),
        st.integers(2, 12),
        st.integers(1, 12),
        st.floats(1e-8, 0.9),
    )
    def test_energy_bound_and_minimality(self, seed, n, k, eta):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((n, k)) * np.logspace(0, -4, k)
        pod = truncated_svd(u, eta)
        res = np.linalg.norm(u - pod.columns @ (pod.columns.T @ u)) ** 2 / np.linalg.norm(u) ** 2
        assert res <= eta + 1e-10
        assert pod.rank == oracles.pod_rank_scan(u, eta)
        assert pod.discarded_energy <= eta + 1e-12


class TestProjection:
    def test_in_span_roundtrip(self):
        rng = np.random.default_rng(2)
        phi = np.linalg.qr(rng.standard_normal((10, 3)))[0]
        u = phi @ rng.standard_normal((3, 5))
        pod = compute_pod(u, 1e-12)
        assert np.allclose(pod_lift(pod, pod_project(pod, u)), u, atol=1e-10)

    def test_identity_columns(self):
        u = np.arange(20.0).reshape(5, 4)
        assert np.array_equal(pod_project(np.eye(5)[:, :2], u), u[:2])

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(3)
        u = rng.standard_normal((12, 6))
        pod = compute_pod(u, 0.0)
        assert np.linalg.norm(u - pod_lift(pod, pod_project(pod, u))) <= 1e-8 * np.linalg.norm(u)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            pod_project(np.eye(4)[:, :2], np.ones((5, 2)))


class TestReconstructionError:
    def test_in_span(self):
        u = np.outer([1.0, 2.0, 0.0], [1.0, -1.0, 3.0])
        assert np.all(pod_reconstruction_error(compute_pod(u, 0.1), u) <= 1e-10)

    def test_orthogonal(self):
        u = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
        assert np.allclose(pod_reconstruction_error(np.eye(3)[:, :1], u), 1.0)

    def test_zero_column(self):
        with pytest.raises(ZeroNormColumnError) as exc:
            pod_reconstruction_error(np.eye(2)[:, :1], np.array([[1.0, 0.0], [1.0, 0.0]]))
        assert exc.value.column == 1

    def test_matches_dense_projector(self):
        u = matrix_with_singular_values([2.0, 1.0])
        pod = compute_pod(u, 0.5)
        assert np.allclose(pod_reconstruction_error(pod, u), oracles.relative_projection_errors(pod.columns, u), atol=1e-12)
