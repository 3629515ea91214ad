"""Tests for the penalty rules, the Matern surrogate and the Bayesian-optimization tuner."""

import numpy as np
import pytest

from wahkon.errors import DomainError, InsufficientData
from wahkon.hyperopt import (BOConfig, Surrogate, cv_folds, expected_improvement, lambda_lower, matern52,
                             surrogate_posterior, tune_last_lambda)
from wahkon.network import Architecture
from wahkon.trainer import TrainConfig


class TestLambdaLower:

    def test_rate_rule(self):
        assert lambda_lower(100, Architecture((3, 6, 6, 1))) == pytest.approx(100 ** -0.8 * 60, rel=1e-12)
        assert lambda_lower(100, Architecture((3, 6, 6, 1))) == pytest.approx(1.5071, abs=1e-4)
        assert lambda_lower(1, Architecture((1, 1))) == 1.0

    def test_invalid(self):
        with pytest.raises(DomainError):
            lambda_lower(0, Architecture((1, 1)))


class TestMatern:

    def test_values(self):
        assert matern52(0.3, 0.3, 1.0, 2.5) == pytest.approx(2.5)
        assert matern52(0.1, 0.7, 0.4, 1.0) == matern52(0.7, 0.1, 0.4, 1.0)
        expected = (1 + np.sqrt(5) + 5 / 3) * np.exp(-np.sqrt(5))
        assert matern52(0.0, 0.5, 0.5, 1.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.52399, abs=1e-5)

    def test_invalid(self):
        with pytest.raises(DomainError):
            matern52(0.0, 1.0, 0.0, 1.0)


class TestSurrogate:

    def test_interpolates_observations(self):
        inputs = np.array([-1.0, 0.0, 1.5])
        outputs = np.array([2.0, 1.0, 3.0])
        surrogate = Surrogate(inputs, outputs, lengthscale=1.0, noise_variance=1e-10)
        mean, std = surrogate_posterior(surrogate, inputs)
        np.testing.assert_allclose(mean, outputs, atol=1e-4)
        np.testing.assert_allclose(std, 0.0, atol=1e-3)

    def test_single_observation(self):
        surrogate = Surrogate(np.array([0.4]), np.array([7.0]), lengthscale=1.0, noise_variance=1e-12)
        mean, _ = surrogate_posterior(surrogate, 0.4)
        assert mean == pytest.approx(7.0, abs=1e-9)

    def test_reverts_far_away(self):
        outputs = np.array([1.0, 2.0, 4.0])
        surrogate = Surrogate(np.array([0.0, 0.5, 1.0]), outputs, lengthscale=0.2)
        mean, std = surrogate_posterior(surrogate, 100.0)
        assert mean == pytest.approx(outputs.mean(), abs=1e-8)
        assert std == pytest.approx(outputs.std(), rel=1e-6)


class TestExpectedImprovement:

    def test_deterministic_cases(self):
        assert expected_improvement(1.0, 0.0, 1.0) == 0.0
        assert expected_improvement(0.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_zero_mean_gap(self):
        assert expected_improvement(2.0, 1.0, 2.0) == pytest.approx(0.39894, abs=1e-5)

    def test_vectorized(self):
        ei = expected_improvement(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 0.5)
        assert ei.shape == (2,)
        assert ei[0] > ei[1] > 0


class TestTuner:

    def test_budget_and_argmin_contract(self):
        def proxy(lam):
            return (np.log(lam) - 0.3) ** 2 + 1.0

        result = tune_last_lambda(np.zeros((50, 3)), np.zeros(50), Architecture((3, 6, 6, 1)), None,
                                  TrainConfig(), BOConfig(seed=4), evaluate=proxy)
        frame = result.to_frame()
        assert len(frame) == 15
        assert (frame["phase"] == "random").sum() == 5
        assert (frame["phase"] == "bo").sum() == 10
        assert result.cv_rmse == frame["cv_rmse"].min()
        assert result.lambda_last == frame.loc[frame["cv_rmse"].idxmin(), "lambda"]
        s = lambda_lower(50, Architecture((3, 6, 6, 1)))
        assert frame["lambda"].between(0.01 * s * (1 - 1e-12), 3.0 * s * (1 + 1e-12)).all()

    def test_proxy_minimum_found(self):
        """
        Convex proxy in log(lambda): the choice lands within two candidate steps in 9 of 10 seeds.

        The minimum sits 0.35 of a step from its nearest candidate, so one step
        admits only the two bracketing candidates. Fifteen evaluations of a kinked
        proxy under a smooth surrogate often settle one candidate further out;
        two steps admit exactly that neighbour on each side and nothing beyond.
        """
        arch = Architecture((3, 6, 6, 1))
        n = 100
        s = lambda_lower(n, arch)
        log_lo, log_hi = np.log(0.01 * s), np.log(3.0 * s)
        target = log_lo + 0.37 * (log_hi - log_lo)
        step = (log_hi - log_lo) / 255

        hits = 0
        for seed in range(10):
            result = tune_last_lambda(np.zeros((n, 3)), np.zeros(n), arch, None, TrainConfig(),
                                      BOConfig(seed=seed), evaluate=lambda lam: abs(np.log(lam) - target) + 0.2)
            if abs(np.log(result.lambda_last) - target) <= 2 * step:
                hits += 1
        assert hits >= 9

    def test_flat_objective(self):
        result = tune_last_lambda(np.zeros((20, 1)), np.zeros(20), Architecture((1, 1)), None, TrainConfig(),
                                  BOConfig(), evaluate=lambda lam: 0.25)
        assert len(result.log) == 15
        assert result.cv_rmse == 0.25

    def test_pure_random_search(self):
        result = tune_last_lambda(np.zeros((20, 1)), np.zeros(20), Architecture((1, 1)), None, TrainConfig(),
                                  BOConfig(initial_random=5, bo_iters=0), evaluate=lambda lam: abs(np.log(lam)))
        assert len(result.log) == 5
        assert result.cv_rmse == min(row["cv_rmse"] for row in result.log)

    def test_deterministic(self):
        kwargs = dict(evaluate=lambda lam: np.sin(np.log(lam)))
        a = tune_last_lambda(np.zeros((20, 1)), np.zeros(20), Architecture((1, 1)), None, TrainConfig(),
                             BOConfig(seed=2), **kwargs)
        b = tune_last_lambda(np.zeros((20, 1)), np.zeros(20), Architecture((1, 1)), None, TrainConfig(),
                             BOConfig(seed=2), **kwargs)
        assert a.log == b.log

    def test_too_few_rows_for_folds(self):
        with pytest.raises(InsufficientData):
            tune_last_lambda(np.zeros((3, 1)), np.zeros(3), Architecture((1, 1)), None, TrainConfig(), BOConfig())

    def test_cross_validated_tuning_end_to_end(self, kernel):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, (30, 2))
        y = X[:, 0] ** 2 + 0.1 * rng.standard_normal(30)
        cfg = TrainConfig(max_steps=2, batch_size=16)
        bo = BOConfig(initial_random=2, bo_iters=1, folds=2)
        result = tune_last_lambda(X, y, Architecture((2, 2, 1)), kernel, cfg, bo)
        assert len(result.log) == 3
        assert np.isfinite(result.cv_rmse)


class TestFolds:

    def test_partition(self):
        folds = cv_folds(23, 5, seed=1)
        assert len(folds) == 5
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))

    def test_config_validation(self):
        with pytest.raises(DomainError):
            BOConfig(range_factors=(3.0, 0.01))
        with pytest.raises(DomainError):
            BOConfig(folds=1)
        assert BOConfig().total_evals == 15
