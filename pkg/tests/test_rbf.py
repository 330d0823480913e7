import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sdal.errors import DimensionError, InsufficientDataError, SingularSystemError
from sdal.rbf import (
    FitStatus,
    Kernel,
    RbfKernelSpec,
    RbfNetwork,
    fit_interpolation,
    fit_regression,
    gram_matrix,
)

KERNELS = [RbfKernelSpec("gaussian", 0.7), RbfKernelSpec("multiquadric", 0.5), RbfKernelSpec("cubic", 1.0)]


class TestKernels:
    def test_parse(self):
        assert Kernel.parse("MQ") is Kernel.MULTIQUADRIC
        assert Kernel.parse("cubic_spline") is Kernel.CUBIC
        assert Kernel.from_code(Kernel.GAUSSIAN.code) is Kernel.GAUSSIAN
        with pytest.raises(ValueError):
            Kernel.parse("thin-plate")

    def test_width_validation(self):
        with pytest.raises(ValueError):
            RbfKernelSpec("gaussian", 0.0)
        RbfKernelSpec("cubic", 0.0)

    @pytest.mark.parametrize("spec", KERNELS, ids=lambda s: s.kind.value)
    def test_gram_matches_loops(self, spec):
        rng = np.random.default_rng(0)
        a, b = rng.random((7, 2)), rng.random((4, 2))
        assert np.allclose(gram_matrix(a, b, spec), oracles.gram(spec.kind.value, a, b, spec.width), atol=1e-14)

    def test_profiles_at_zero(self):
        z = np.zeros((1, 1))
        assert gram_matrix(z, z, KERNELS[0])[0, 0] == 1.0
        assert gram_matrix(z, z, KERNELS[1])[0, 0] == 1.0
        assert gram_matrix(z, z, KERNELS[2])[0, 0] == 0.0


class TestInterpolation:
    @pytest.mark.parametrize("spec", KERNELS, ids=lambda s: s.kind.value)
    def test_reproduces_training_data(self, spec):
        rng = np.random.default_rng(1)
        x, y = rng.random((9, 2)), rng.standard_normal((9, 3))
        net = fit_interpolation(x, y, spec)
        assert net.status is FitStatus.INTERPOLATION
        assert np.allclose(net(x), y, atol=1e-8)

    @pytest.mark.parametrize("spec", KERNELS, ids=lambda s: s.kind.value)
    def test_matches_dense_oracle(self, spec):
        rng = np.random.default_rng(2)
        x, y, q = rng.random((8, 1)), rng.standard_normal((8, 2)), rng.random((5, 1))
        ref = oracles.rbf_interpolate(spec.kind.value, spec.width, x, y, q)
        net = fit_interpolation(x, y, spec)
        # both routes are backward stable; forward agreement scales with the condition number
        tol = 1e-14 * net.condition * np.abs(ref).max()
        assert np.allclose(net(q), ref, rtol=0.0, atol=tol)

    def test_cubic_two_point_midpoint(self):
        # G = [[0, 1], [1, 0]] swaps the targets; both kernels are 1/8 at the midpoint
        net = fit_interpolation([0.0, 1.0], [2.0, 6.0], RbfKernelSpec("cubic", 1.0))
        assert net.evaluate(0.5)[0] == pytest.approx((2.0 + 6.0) / 8.0)

    @given(st.lists(st.integers(-500, 500), min_size=2, max_size=10, unique=True), st.integers(0, 2**32 - 1))
    def test_interpolation_property(self, ticks, seed):
        xs = np.array(ticks, dtype=float)[:, None] / 100.0
        y = np.random.default_rng(seed).standard_normal((len(xs), 2))
        net = fit_interpolation(xs, y, RbfKernelSpec("multiquadric", 1.0))
        assert net.status is FitStatus.INTERPOLATION
        assert np.allclose(net(xs), y, rtol=0.0, atol=1e-14 * net.condition * np.abs(y).max() + 1e-12)

    def test_single_point(self):
        net = fit_interpolation([[0.3]], [[2.0]], RbfKernelSpec("gaussian", 1.0))
        assert net.evaluate(0.3)[0] == pytest.approx(2.0)

    def test_duplicates_rejected(self):
        with pytest.raises(SingularSystemError):
            fit_interpolation([0.0, 1.0, 0.0], [1.0, 2.0, 3.0], RbfKernelSpec())

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            fit_interpolation([0.0, 1.0], [1.0, np.inf], RbfKernelSpec())

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            fit_interpolation(np.zeros((0, 1)), np.zeros((0, 1)), RbfKernelSpec())

    def test_ridge_fallback(self):
        # wide gaussians on close points give a numerically singular Gram matrix
        x = np.linspace(0.0, 1.0, 30)
        net = fit_interpolation(x, np.sin(x), RbfKernelSpec("gaussian", 50.0))
        assert net.status is FitStatus.REGRESSION
        assert net.ridge > 0 and net.condition > 1e14
        assert np.all(np.isfinite(net.weights))

    def test_dimension_checks(self):
        net = fit_interpolation([[0.0, 0.0], [1.0, 1.0]], [1.0, 2.0], RbfKernelSpec("gaussian", 1.0))
        assert net.evaluate([0.0, 0.0]).shape == (1,)
        with pytest.raises(DimensionError):
            net.evaluate([0.0, 0.0, 0.0])
        with pytest.raises(DimensionError):
            RbfNetwork(np.zeros((2, 1)), np.ones(2), np.zeros((3, 1)), Kernel.CUBIC)

    def test_evaluate_columns(self):
        rng = np.random.default_rng(3)
        net = fit_interpolation(rng.random(5), rng.standard_normal((5, 6)), RbfKernelSpec())
        q = rng.random(3)
        assert np.allclose(net.evaluate_columns(q, 2, 5), net(q[:, None])[:, 2:5])


class TestRegression:
    def test_fewer_centers(self):
        x = np.linspace(0.0, 1.0, 40)
        net = fit_regression(x, np.sin(2 * x), RbfKernelSpec("gaussian", 0.3), n_centers=8)
        assert net.status is FitStatus.REGRESSION
        assert net.n_centers == 8
        assert np.max(np.abs(net(x[:, None])[:, 0] - np.sin(2 * x))) < 5e-3

    def test_least_squares_optimality(self):
        rng = np.random.default_rng(4)
        x, y = rng.random(25), rng.standard_normal((25, 2))
        spec = RbfKernelSpec("multiquadric", 0.5)
        net = fit_regression(x, y, spec, n_centers=5)
        h = gram_matrix(x, net.centers, spec)
        ref = np.linalg.lstsq(h, y, rcond=None)[0]
        assert np.allclose(net.weights, ref, atol=1e-6)

    def test_many_centers_is_interpolation(self):
        net = fit_regression([0.0, 1.0], [1.0, 2.0], RbfKernelSpec(), n_centers=5)
        assert net.status is FitStatus.INTERPOLATION

    def test_zero_centers(self):
        with pytest.raises(InsufficientDataError):
            fit_regression([0.0, 1.0], [1.0, 2.0], RbfKernelSpec(), n_centers=0)
