"""Tests for the Gaussian kernel and its matrices."""

import numpy as np
import pytest

from wahkon.errors import DomainError
from wahkon.kernel import (PRIOR_LENGTHSCALE, KernelConfig, cross, gram, grid_gram, kernel_derivative,
                           kernel_eval)


class TestKernelEval:

    def test_unit_diagonal(self):
        assert kernel_eval(KernelConfig(0.5), 0.7, 0.7) == 1.0

    def test_closed_forms(self):
        assert kernel_eval(KernelConfig(0.5), 0.0, 1.0) == pytest.approx(np.exp(-2.0), rel=1e-12)
        assert kernel_eval(KernelConfig(PRIOR_LENGTHSCALE), 0.0, 1.0) == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_invalid_lengthscale(self):
        with pytest.raises(DomainError):
            KernelConfig(0.0)
        with pytest.raises(DomainError):
            KernelConfig(float("nan"))


class TestMatrices:

    def test_gram_single_point(self):
        np.testing.assert_array_equal(gram(KernelConfig(), [0.0]), [[1.0]])

    def test_gram_two_points(self):
        expected = np.array([[1.0, np.exp(-2.0)], [np.exp(-2.0), 1.0]])
        np.testing.assert_allclose(gram(KernelConfig(0.5), [0.0, 1.0]), expected, rtol=1e-12)

    def test_gram_symmetric(self):
        points = np.random.default_rng(0).normal(size=12)
        G = gram(KernelConfig(), points)
        np.testing.assert_array_equal(G, G.T)

    def test_cross(self):
        cfg = KernelConfig(0.5)
        grid = np.linspace(-1, 1, 5)
        np.testing.assert_array_equal(cross(cfg, grid, grid), gram(cfg, grid))
        np.testing.assert_allclose(cross(cfg, [0.0], [0.0, 1.0]), [[1.0, np.exp(-2.0)]], rtol=1e-12)

    def test_cross_far_points_vanish(self):
        cfg = KernelConfig(0.5)
        assert np.all(cross(cfg, [0.0, -0.1], [5.0, 6.0]) < 1e-21)

    def test_grid_gram(self):
        cfg = KernelConfig(0.5)
        np.testing.assert_array_equal(grid_gram(cfg, [0.3]), [[1.0]])
        K = grid_gram(cfg, np.linspace(-1, 1, 9))
        assert K[0, 1] == pytest.approx(np.exp(-0.125), abs=1e-5)
        # Toeplitz on an equally spaced grid
        for offset in range(1, 9):
            np.testing.assert_allclose(np.diag(K, offset), K[0, offset], rtol=1e-12)

    def test_derivative_matches_finite_differences(self):
        cfg = KernelConfig(0.5)
        points = np.array([-0.4, 0.1, 0.9])
        grid = np.linspace(-1, 1, 4)
        h = 1e-6
        numeric = (cross(cfg, points + h, grid) - cross(cfg, points - h, grid)) / (2 * h)
        np.testing.assert_allclose(kernel_derivative(cfg, points, grid), numeric, atol=1e-8)
