#!/usr/bin/env python3
"""
Regularization selection.

The lower-layer penalty follows the fixed rate rule

    lambda_lower = n_train^(-4/5) * #links,

and the last-layer penalty is tuned by one-dimensional Bayesian
optimization: a Matern-5/2 Gaussian-process surrogate over log(lambda_L),
Expected Improvement maximized on a log-spaced candidate grid, and k-fold
cross-validated RMSE as the evaluation criterion.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from .errors import DomainError, InsufficientData
from .numerics import derive_seed, factorize_spd, make_rng, rmse, std_normal_cdf, std_normal_pdf
from .objective import PenaltyConfig
from .trainer import predict, train_profile

logger = logging.getLogger(__name__)

LOWER_RATE = 0.8
SQRT5 = np.sqrt(5.0)


def lambda_lower(n_train, architecture):
    """Penalty shared by layers 1..L-1, also the scale s of the last-layer search range."""
    if int(n_train) < 1:
        raise DomainError(f"n_train must be >= 1, got {n_train}")
    return float(n_train) ** (-LOWER_RATE) * architecture.link_count


def matern52(x, y, lengthscale, variance):
    """Matern-5/2 covariance; broadcasts over array arguments."""
    if not (lengthscale > 0 and variance > 0):
        raise DomainError("Matern lengthscale and variance must be positive")
    r = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) / lengthscale
    value = variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r ** 2) * np.exp(-SQRT5 * r)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class BOConfig:
    initial_random: int = 5
    bo_iters: int = 10
    range_factors: tuple = (0.01, 3.0)
    folds: int = 5
    candidate_grid_size: int = 256
    noise_variance: float = 1e-4
    seed: int = 0
    show_progress: bool = False

    def __post_init__(self):
        lo, hi = self.range_factors
        if not (0 < lo < hi):
            raise DomainError(f"lambda range factors must satisfy 0 < lower < upper, got {self.range_factors}")
        if self.initial_random < 1 or self.bo_iters < 0:
            raise DomainError("need at least one random evaluation and a nonnegative BO budget")
        if self.folds < 2:
            raise DomainError(f"cross-validation needs at least 2 folds, got {self.folds}")

    @property
    def total_evals(self):
        return self.initial_random + self.bo_iters


@dataclass
class Surrogate:
    """GP regression on standardized observations with fixed hyperparameters."""

    inputs: np.ndarray
    outputs: np.ndarray
    lengthscale: float
    variance: float = 1.0
    noise_variance: float = 1e-4

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.outputs = np.asarray(self.outputs, dtype=float)
        if self.inputs.size < 1:
            raise InsufficientData("the surrogate needs at least one observation")
        self.center = float(np.mean(self.outputs))
        spread = float(np.std(self.outputs))
        self.scale = spread if spread > 0 else 1.0
        standardized = (self.outputs - self.center) / self.scale
        cov = matern52(self.inputs[:, None], self.inputs[None, :], self.lengthscale, self.variance)
        cov = np.atleast_2d(cov) + self.noise_variance * np.eye(self.inputs.size)
        self._factor = factorize_spd(cov)
        self._weights = self._factor.solve(standardized)


def surrogate_posterior(surrogate, query):
    """Posterior mean and standard deviation at ``query`` (log-lambda), in output units."""
    query = np.atleast_1d(np.asarray(query, dtype=float))
    k = np.atleast_2d(matern52(query[:, None], surrogate.inputs[None, :],
                               surrogate.lengthscale, surrogate.variance))
    mean = k @ surrogate._weights
    solved = surrogate._factor.solve(k.T)
    var = np.maximum(surrogate.variance - np.einsum("qi,iq->q", k, solved), 0.0)
    mean = surrogate.center + surrogate.scale * mean
    std = surrogate.scale * np.sqrt(var)
    if mean.size == 1:
        return float(mean[0]), float(std[0])
    return mean, std


def expected_improvement(mean, std, best_so_far):
    """Expected Improvement for minimization; zero-std points get max(best - mean, 0)."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    improvement = best_so_far - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, improvement / np.where(std > 0, std, 1.0), 0.0)
        ei = np.where(std > 0,
                      improvement * std_normal_cdf(z) + std * std_normal_pdf(z),
                      np.maximum(improvement, 0.0))
    ei = np.maximum(ei, 0.0)
    return float(ei) if ei.ndim == 0 else ei


@dataclass
class TuningResult:
    lambda_last: float
    cv_rmse: float
    scale: float
    log: list = field(default_factory=list)

    def to_frame(self):
        return pd.DataFrame(self.log, columns=["eval_index", "lambda", "cv_rmse", "phase"])


def cv_folds(n_rows, folds, seed):
    """Contiguous blocks of a seeded permutation."""
    order = make_rng(seed).permutation(n_rows)
    return np.array_split(order, folds)


def cross_validated_rmse(X, y, architecture, kernel, penalties, train_cfg, folds):
    """Mean held-out RMSE over folds, each trained from scratch."""
    scores = []
    for index, held_out in enumerate(folds):
        keep = np.setdiff1d(np.arange(X.shape[0]), held_out)
        fold_cfg = train_cfg.with_seed(derive_seed(train_cfg.seed, index))
        model, _ = train_profile(X[keep], y[keep], architecture, kernel, penalties, fold_cfg)
        scores.append(rmse(predict(model, X[held_out]), y[held_out]))
    return float(np.mean(scores))


def tune_last_lambda(X, y, architecture, kernel, train_cfg, bo_cfg, evaluate=None):
    """
    Choose lambda_L by Bayesian optimization of cross-validated RMSE.

    Parameters:
    -----------
    X, y : array_like
        Training data
    architecture, kernel
        Network definition
    train_cfg : TrainConfig
        Settings for every fold training
    bo_cfg : BOConfig
        Budget, range and seed
    evaluate : callable, optional
        lambda -> score; replaces cross-validated training (used for cheap proxies)

    Returns:
    --------
    TuningResult
        Observed argmin and the evaluation log
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if n < bo_cfg.folds:
        raise InsufficientData(f"{bo_cfg.folds}-fold cross-validation needs at least {bo_cfg.folds} rows, got {n}")

    scale = lambda_lower(n, architecture)
    lo, hi = scale * bo_cfg.range_factors[0], scale * bo_cfg.range_factors[1]
    log_lo, log_hi = np.log(lo), np.log(hi)
    candidates = np.linspace(log_lo, log_hi, bo_cfg.candidate_grid_size)
    rng = make_rng(derive_seed(bo_cfg.seed, 0))

    if evaluate is None:
        folds = cv_folds(n, bo_cfg.folds, derive_seed(bo_cfg.seed, 1))

        def evaluate(lam):
            penalties = PenaltyConfig(lambda_lower=scale, lambda_last=lam)
            return cross_validated_rmse(X, y, architecture, kernel, penalties, train_cfg, folds)

    observed_x, observed_y, log = [], [], []
    used = np.zeros(candidates.size, dtype=bool)
    logger.info("Tuning lambda_L in [%.4g, %.4g] (s=%.4g) with %d evaluations",
                lo, hi, scale, bo_cfg.total_evals)

    for index in tqdm(range(bo_cfg.total_evals), desc="BO", disable=not bo_cfg.show_progress, leave=False):
        if index < bo_cfg.initial_random:
            phase = "random"
            point = float(rng.uniform(log_lo, log_hi))
        else:
            phase = "bo"
            surrogate = Surrogate(np.array(observed_x), np.array(observed_y),
                                  lengthscale=(log_hi - log_lo) / 3.0,
                                  noise_variance=bo_cfg.noise_variance)
            mean, std = surrogate_posterior(surrogate, candidates)
            ei = expected_improvement(mean, std, min(observed_y))
            ei = np.where(used, -np.inf, ei)
            choice = int(np.argmax(ei))
            used[choice] = True
            point = float(candidates[choice])

        lam = float(np.exp(point))
        score = float(evaluate(lam))
        observed_x.append(point)
        observed_y.append(score)
        log.append({"eval_index": index, "lambda": lam, "cv_rmse": score, "phase": phase})
        logger.debug("Evaluation %d (%s): lambda=%.5g cv_rmse=%.5f", index, phase, lam, score)

    best = int(np.argmin(observed_y))
    logger.info("Selected lambda_L=%.5g (CV RMSE %.5f)", log[best]["lambda"], observed_y[best])
    return TuningResult(lambda_last=log[best]["lambda"], cv_rmse=observed_y[best], scale=scale, log=log)
