"""Tests for architectures, link banks, the forward pass and initialization."""

import numpy as np
import pytest

from wahkon.errors import DimensionMismatch, DomainError, NotFitted
from wahkon.kernel import KernelConfig, cross, grid_gram
from wahkon.network import (Architecture, LinkBank, RepresenterBank, WahkonModel, forward, init_links,
                            last_layer_predict, layer_norms_sq, link_eval_grid, link_eval_representer,
                            rkhs_norm_sq_grid, rkhs_norm_sq_representer)
from wahkon.numerics import make_rng


def single_layer_bank(grid, coeffs):
    return LinkBank([np.asarray(grid, dtype=float)], [np.asarray(coeffs, dtype=float)])


class TestArchitecture:

    def test_counts(self):
        arch = Architecture((3, 6, 6, 1))
        assert arch.depth == 3
        assert arch.input_dim == 3
        assert arch.link_count == 60
        assert Architecture((1, 1)).link_count == 1

    def test_str(self):
        assert str(Architecture((3, 6, 6, 1))) == "[3 -> 6 -> 6 -> 1]"
        assert str(Architecture((2, 1))) == "[2 -> 1]"

    def test_invalid(self):
        with pytest.raises(DomainError):
            Architecture((3,))
        with pytest.raises(DomainError):
            Architecture((3, 0, 1))
        with pytest.raises(DomainError):
            Architecture((3, 2)).require_scalar_output()


class TestLinkEval:

    def test_zero_coefficients(self):
        grid = np.linspace(-1, 1, 5)
        assert link_eval_grid(KernelConfig(), grid, np.zeros(5), 0.3) == 0.0

    def test_unit_coefficient_at_grid_point(self):
        grid = np.linspace(-1, 1, 5)
        a = np.zeros(5)
        a[0] = 1.0
        assert link_eval_grid(KernelConfig(), grid, a, grid[0]) == pytest.approx(1.0)

    def test_closed_form(self):
        assert link_eval_grid(KernelConfig(0.5), [0.0], [2.0], 1.0) == pytest.approx(2 * np.exp(-2.0), rel=1e-12)

    def test_representer_matches_grid(self):
        cfg = KernelConfig(0.5)
        centers = np.array([-0.5, 0.2, 0.9])
        c = np.array([0.3, -1.0, 0.7])
        for t in np.linspace(-2, 2, 9):
            assert link_eval_representer(cfg, centers, c, t) == link_eval_grid(cfg, centers, c, t)
        assert link_eval_representer(cfg, [0.0], [1.0], 0.0) == pytest.approx(1.0)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            link_eval_grid(KernelConfig(), [0.0, 1.0], [1.0], 0.5)


class TestForward:

    def test_zero_coefficients_give_zero_outputs(self, kernel):
        bank = LinkBank([np.linspace(-1, 1, 9)] * 2, [np.zeros((9, 3, 2)), np.zeros((9, 3, 3))])
        layers = forward(bank, np.random.default_rng(0).uniform(-1, 1, (6, 2)), kernel)
        assert len(layers) == 3
        np.testing.assert_array_equal(layers.final, 0.0)

    def test_single_link_matches_scalar_evaluation(self, kernel):
        grid = np.linspace(-1, 1, 9)
        a = np.random.default_rng(1).normal(size=9)
        bank = single_layer_bank(grid, a[:, None, None])
        x = np.linspace(-1, 1, 7)
        outputs = forward(bank, x[:, None], kernel).final[:, 0]
        expected = [link_eval_grid(kernel, grid, a, t) for t in x]
        np.testing.assert_allclose(outputs, expected, rtol=1e-12, atol=1e-15)

    def test_equal_links_sum(self, kernel):
        grid = np.linspace(-1, 1, 9)
        a = np.random.default_rng(2).normal(size=9)
        coeffs = np.stack([a, a], axis=1)[:, None, :]
        X = np.column_stack([np.linspace(-1, 1, 5)] * 2)
        double = forward(single_layer_bank(grid, coeffs), X, kernel).final[:, 0]
        single = forward(single_layer_bank(grid, a[:, None, None]), X[:, :1], kernel).final[:, 0]
        np.testing.assert_allclose(double, 2 * single, rtol=1e-12)

    def test_row_permutation_permutes_outputs(self, kernel):
        rng = np.random.default_rng(3)
        grid = np.linspace(-1, 1, 9)
        bank = LinkBank([grid, grid], [rng.normal(size=(9, 3, 2)), rng.normal(size=(9, 2, 3))])
        X = rng.uniform(-1, 1, (25, 2))
        order = rng.permutation(25)
        layers = forward(bank, X, kernel)
        permuted = forward(bank, X[order], kernel)
        for index in range(len(layers)):
            np.testing.assert_allclose(permuted[index], layers[index][order], rtol=1e-12, atol=1e-14)

    def test_first_layer_is_linear_in_coefficients(self, kernel):
        rng = np.random.default_rng(4)
        grid = np.linspace(-1, 1, 9)
        X = rng.uniform(-1, 1, (12, 3))
        for _ in range(5):
            a, b = rng.normal(size=(9, 2, 3)), rng.normal(size=(9, 2, 3))
            weight = rng.normal()
            combined = forward(single_layer_bank(grid, a + weight * b), X, kernel).final
            separate = (forward(single_layer_bank(grid, a), X, kernel).final
                        + weight * forward(single_layer_bank(grid, b), X, kernel).final)
            np.testing.assert_allclose(combined, separate, rtol=1e-10, atol=1e-12)

    def test_input_width_checked(self, kernel):
        bank = single_layer_bank(np.linspace(-1, 1, 3), np.zeros((3, 1, 2)))
        with pytest.raises(DimensionMismatch):
            forward(bank, np.zeros((4, 3)), kernel)

    def test_bank_needs_kernel(self):
        bank = single_layer_bank(np.linspace(-1, 1, 3), np.zeros((3, 1, 1)))
        with pytest.raises(DomainError):
            forward(bank, np.zeros((2, 1)))

    def test_unfitted_model_has_no_last_layer(self, kernel):
        arch = Architecture((1, 2, 1))
        bank = single_layer_bank(np.linspace(-1, 1, 3), np.zeros((3, 2, 1)))
        model = WahkonModel(arch, kernel, bank, 0.1, 0.1)
        with pytest.raises(NotFitted):
            forward(model, np.zeros((2, 1)), include_last=True)


class TestRepresenterGridIdentity:
    """Grid links placed on the layer inputs coincide with the exact representer form."""

    def test_evaluations_and_norms_agree(self, kernel):
        rng = np.random.default_rng(5)
        inputs = np.sort(rng.uniform(-1, 1, 6))
        X = np.column_stack([inputs, inputs[::-1].copy()])
        coeffs = rng.normal(size=(6, 3, 2))
        grid_bank = single_layer_bank(inputs, coeffs)
        rep_bank = RepresenterBank([grid_bank.centers(0)], [coeffs.copy()])

        np.testing.assert_allclose(forward(grid_bank, X, kernel).final, forward(rep_bank, X, kernel).final,
                                   atol=1e-10)
        np.testing.assert_allclose(layer_norms_sq(kernel, grid_bank, 0), layer_norms_sq(kernel, rep_bank, 0),
                                   atol=1e-10)
        K_UU = grid_gram(kernel, inputs)
        assert rkhs_norm_sq_grid(K_UU, coeffs[:, 0, 1]) == pytest.approx(
            layer_norms_sq(kernel, rep_bank, 0)[0, 1], abs=1e-10)


class TestNorms:

    def test_norm_values(self):
        cfg = KernelConfig(0.5)
        assert rkhs_norm_sq_grid(grid_gram(cfg, [0.0, 1.0]), [0.0, 0.0]) == 0.0
        K = grid_gram(cfg, np.linspace(-1, 1, 9))
        a = np.zeros(9)
        a[4] = 1.0
        assert rkhs_norm_sq_grid(K, a) == pytest.approx(1.0)
        assert rkhs_norm_sq_grid(grid_gram(cfg, [0.0, 1.0]), [1.0, 1.0]) == pytest.approx(2 + 2 * np.exp(-2.0))

    def test_representer_norm(self):
        cfg = KernelConfig(0.5)
        Q = cross(cfg, np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        assert rkhs_norm_sq_representer(Q, [1.0, -1.0]) == pytest.approx(2 - 2 * np.exp(-2.0))

    def test_norm_shape_checked(self):
        with pytest.raises(DimensionMismatch):
            rkhs_norm_sq_grid(np.eye(3), np.ones(2))


class TestLastLayerPredict:

    def test_training_inputs_reproduce_kernel_times_alpha(self, kernel):
        rng = np.random.default_rng(3)
        Z = rng.normal(size=(7, 2))
        alpha = rng.normal(size=7)
        K = sum(cross(kernel, Z[:, k], Z[:, k]) for k in range(2))
        np.testing.assert_allclose(last_layer_predict(kernel, Z, alpha, Z), K @ alpha, rtol=1e-12)

    def test_zero_alpha(self, kernel):
        Z = np.random.default_rng(4).normal(size=(5, 1))
        np.testing.assert_array_equal(last_layer_predict(kernel, Z, np.zeros(5), Z), 0.0)

    def test_far_point_vanishes(self, kernel):
        Z = np.random.default_rng(4).uniform(-1, 1, size=(5, 2))
        alpha = np.ones(5)
        prediction = last_layer_predict(kernel, Z, alpha, np.full((1, 2), 50.0))
        assert abs(prediction[0]) < 1e-100

    def test_width_mismatch(self, kernel):
        with pytest.raises(DimensionMismatch):
            last_layer_predict(kernel, np.zeros((3, 2)), np.zeros(3), np.zeros((1, 3)))


class TestInitLinks:

    def test_deterministic(self, kernel):
        X = np.random.default_rng(0).uniform(-1, 1, (30, 3))
        arch = Architecture((3, 6, 6, 1))
        a = init_links(make_rng(11), arch, kernel, X)
        b = init_links(make_rng(11), arch, kernel, X)
        assert a.n_layers == 2
        for ga, gb, ca, cb in zip(a.grids, b.grids, a.coeffs, b.coeffs):
            np.testing.assert_array_equal(ga, gb)
            np.testing.assert_array_equal(ca, cb)

    def test_zero_tau_gives_zero_coefficients(self, kernel):
        X = np.random.default_rng(0).uniform(-1, 1, (30, 2))
        bank = init_links(make_rng(0), Architecture((2, 3, 3, 1)), kernel, X, tau_init=0.0)
        for coeff in bank.coeffs:
            np.testing.assert_array_equal(coeff, 0.0)

    def test_first_grid_covers_input_range(self, kernel):
        X = np.random.default_rng(0).uniform(-0.2, 0.3, (30, 2))
        bank = init_links(make_rng(0), Architecture((2, 3, 1)), kernel, X)
        grid = bank.grids[0]
        assert len(grid) == 9
        assert grid[0] < -1.0 and grid[-1] > 1.0
        assert np.all(np.diff(grid) > 0)

    def test_coefficient_scale_follows_fan_in(self, kernel):
        X = np.random.default_rng(0).uniform(-1, 1, (50, 3))
        ratios = []
        for seed in range(20):
            bank = init_links(make_rng(seed), Architecture((3, 6, 1)), kernel, X,
                              grid_size=41, include_last=True)
            ratios.append(bank.coeffs[0].std() / bank.coeffs[1].std())
        assert np.median(ratios) == pytest.approx(np.sqrt(2.0), rel=0.15)

    def test_invalid_arguments(self, kernel):
        X = np.zeros((5, 2))
        with pytest.raises(DomainError):
            init_links(make_rng(0), Architecture((2, 1)), kernel, X, grid_size=1)
        with pytest.raises(DimensionMismatch):
            init_links(make_rng(0), Architecture((3, 1)), kernel, X)
