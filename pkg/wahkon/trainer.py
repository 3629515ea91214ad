#!/usr/bin/env python3
"""
Mini-batch Adam training of the Wahkon network.

``train_profile`` minimizes the profile objective (closed-form ridge last
layer on every batch); ``train_direct`` minimizes the joint objective with
a grid-parameterized last layer. Both hold out a validation split, stop
early on validation RMSE, keep the best-validation snapshot and finally
refit the last layer by kernel ridge regression on all training rows.
"""

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from tqdm import tqdm

from .errors import DimensionMismatch, DomainError, InsufficientData, NotFitted
from .network import (DEFAULT_GRID_EXPAND, DEFAULT_GRID_SIZE, DEFAULT_TAU_INIT,
                      WahkonModel, forward, init_links, last_layer_predict, layer_apply)
from .numerics import make_rng, rmse
from .objective import (aggregate_last_kernel, bank_grams, joint_grad, joint_loss,
                        last_layer_ridge, profile_grad, profile_loss)

logger = logging.getLogger(__name__)

MIN_TRAIN_ROWS = 10
OSCILLATION_RISE = 0.05


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, batching and early-stopping settings."""

    learning_rate: float = 0.005
    batch_size: int = 200
    max_steps: int = 500
    patience: int = 50
    min_improvement: float = 1e-5
    validation_fraction: float = 0.2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    grid_size: int = DEFAULT_GRID_SIZE
    tau_init: float = DEFAULT_TAU_INIT
    grid_expand: float = DEFAULT_GRID_EXPAND
    show_progress: bool = False

    def __post_init__(self):
        if not 0.0 < self.validation_fraction < 1.0:
            raise DomainError(f"validation_fraction must lie in (0, 1), got {self.validation_fraction}")
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise DomainError(f"patience must be >= 1, got {self.patience}")
        if self.max_steps < 0:
            raise DomainError(f"max_steps must be >= 0, got {self.max_steps}")
        if not self.learning_rate > 0:
            raise DomainError(f"learning_rate must be positive, got {self.learning_rate}")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state, cfg):
    """
    One bias-corrected Adam update.

    Returns ``(new_params, new_state)``; the inputs are left untouched.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionMismatch("parameters, gradients and moments differ in count")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise DimensionMismatch(f"gradient {g.shape} does not match parameter {p.shape}")

    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon
    step = state.step + 1
    new_m = [b1 * m + (1 - b1) * g for m, g in zip(state.m, grads)]
    new_v = [b2 * v + (1 - b2) * g * g for v, g in zip(state.v, grads)]
    correction1 = 1 - b1 ** step
    correction2 = 1 - b2 ** step
    new_params = [
        p - cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + eps)
        for p, m, v in zip(params, new_m, new_v)
    ]
    return new_params, AdamState(new_m, new_v, step)


class BatchSampler:
    """Epoch-wise shuffling without replacement; a short tail is dropped."""

    def __init__(self, n_rows, batch_size, rng):
        self.n_rows = int(n_rows)
        self.batch_size = min(int(batch_size), self.n_rows)
        self.rng = rng
        self._order = np.empty(0, dtype=int)
        self._cursor = 0

    def next(self):
        if self._cursor + self.batch_size > len(self._order):
            self._order = self.rng.permutation(self.n_rows)
            self._cursor = 0
        batch = self._order[self._cursor:self._cursor + self.batch_size]
        self._cursor += self.batch_size
        return batch


class EarlyStopping:
    """
    Tracks the best validation value and the patience counter.

    The snapshot follows the strict minimum; patience resets only on a
    positive improvement of at least ``min_improvement``.
    """

    def __init__(self, patience, min_improvement):
        self.patience = patience
        self.min_improvement = min_improvement
        self.best_value = np.inf
        self.best_step = -1
        self._reference = np.inf
        self._since = 0

    def update(self, value, step):
        """Record a value; returns (is_new_best, should_stop)."""
        is_best = value < self.best_value
        if is_best:
            self.best_value = value
            self.best_step = step
        improvement = self._reference - value
        if improvement > 0 and improvement >= self.min_improvement:
            self._reference = value
            self._since = 0
        else:
            self._since += 1
        return is_best, self._since >= self.patience


@dataclass
class TrainHistory:
    """Per-step training record; metrics at step t are taken before update t."""

    objective: str = "profile"
    steps: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    train_rmse: list = field(default_factory=list)
    valid_rmse: list = field(default_factory=list)
    test_rmse: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    best_step: int = -1
    stopped_early: bool = False
    refit_last_layer: bool = False

    def record(self, step, loss, train_rmse, valid_rmse, test_rmse, wall_ms):
        self.steps.append(step)
        self.train_loss.append(loss)
        self.train_rmse.append(train_rmse)
        self.valid_rmse.append(valid_rmse)
        if test_rmse is not None:
            self.test_rmse.append(test_rmse)
        self.wall_ms.append(wall_ms)

    def __len__(self):
        return len(self.steps)

    def to_frame(self):
        frame = pd.DataFrame({
            "step": self.steps,
            "train_rmse": self.train_rmse,
            "valid_rmse": self.valid_rmse,
            "wall_ms": self.wall_ms,
        })
        if self.test_rmse:
            frame.insert(3, "test_rmse", self.test_rmse)
        return frame

    def oscillation_count(self, column="train_rmse", rise=OSCILLATION_RISE):
        """Steps where the metric rises by more than ``rise`` and falls on the next step."""
        values = np.asarray(getattr(self, column), dtype=float)
        count = 0
        for t in range(1, len(values) - 1):
            if values[t] > values[t - 1] * (1 + rise) and values[t + 1] < values[t]:
                count += 1
        return count

    def steps_to_threshold(self, threshold, column="test_rmse"):
        """First recorded step whose metric is at or below ``threshold``, else None."""
        for step, value in zip(self.steps, getattr(self, column)):
            if value <= threshold:
                return step
        return None


def validate_training_data(X, y, architecture, cfg):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} input rows but {y.shape[0]} responses")
    if X.shape[1] != architecture.input_dim:
        raise DimensionMismatch(
            f"inputs have {X.shape[1]} columns, architecture {architecture} expects {architecture.input_dim}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("training data contain non-finite values")
    architecture.require_scalar_output()
    n = X.shape[0]
    if n < MIN_TRAIN_ROWS:
        raise InsufficientData(f"training needs at least {MIN_TRAIN_ROWS} rows, got {n}")
    n_valid = int(round(n * cfg.validation_fraction))
    if n_valid < 1 or n - n_valid < 1:
        raise InsufficientData(
            f"validation fraction {cfg.validation_fraction} leaves no rows on one side of the split (n={n})")
    return X, y, n_valid


def holdout_split(rng, n, n_valid):
    order = rng.permutation(n)
    return order[n_valid:], order[:n_valid]


def _refit(model, X, y, lambda_last):
    Z = forward(model.links, X, model.kernel).final
    K = aggregate_last_kernel(model.kernel, Z)
    ridge = last_layer_ridge(K, y, lambda_last, X.shape[0])
    model.last_inputs = Z
    model.alpha = ridge.alpha
    return ridge


def _progress(cfg, label):
    return tqdm(range(cfg.max_steps), desc=label, disable=not cfg.show_progress, leave=False)


def train_profile(X, y, architecture, kernel, penalties, cfg, monitor=None):
    """
    Train on the profile objective.

    Parameters:
    -----------
    X, y : array_like
        Training inputs (n x D0) and responses (n)
    architecture : Architecture
        Layer widths with D_L = 1
    kernel : KernelConfig
        Link kernel
    penalties : PenaltyConfig
        lambda_lower and lambda_L; n_scale is replaced by the batch size
    cfg : TrainConfig
        Optimizer settings and seed
    monitor : tuple, optional
        (X_test, y_test) evaluated every step into ``test_rmse``

    Returns:
    --------
    (WahkonModel, TrainHistory)
    """
    X, y, n_valid = validate_training_data(X, y, architecture, cfg)
    rng = make_rng(cfg.seed)
    fit_idx, valid_idx = holdout_split(rng, X.shape[0], n_valid)
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_valid, y_valid = X[valid_idx], y[valid_idx]

    lower = init_links(rng, architecture, kernel, X_fit, cfg.grid_size, cfg.tau_init, cfg.grid_expand)
    grams = bank_grams(kernel, lower)
    sampler = BatchSampler(len(fit_idx), cfg.batch_size, rng)
    stopper = EarlyStopping(cfg.patience, cfg.min_improvement)
    adam = AdamState.zeros_like(lower.coeffs)
    history = TrainHistory(objective="profile")
    best_coeffs = [c.copy() for c in lower.coeffs]

    logger.info("Profile training %s on %d rows (%d held out), lambda_lower=%.4g lambda_L=%.4g",
                architecture, len(fit_idx), n_valid, penalties.lambda_lower, penalties.lambda_last)
    started = time.perf_counter()
    for step in _progress(cfg, "profile"):
        batch = sampler.next()
        batch_cfg = penalties.with_n_scale(len(batch))
        evaluation = profile_loss(lower, X_fit[batch], y_fit[batch], kernel, batch_cfg, grams)

        def predict_rows(rows):
            Z = forward(lower, rows, kernel).final
            return last_layer_predict(kernel, evaluation.last_inputs, evaluation.ridge.alpha, Z)

        train_rmse = rmse(evaluation.ridge.fitted, y_fit[batch])
        valid_rmse = rmse(predict_rows(X_valid), y_valid)
        test_rmse = rmse(predict_rows(monitor[0]), monitor[1]) if monitor is not None else None
        history.record(step, evaluation.value, train_rmse, valid_rmse, test_rmse,
                       (time.perf_counter() - started) * 1000.0)

        is_best, should_stop = stopper.update(valid_rmse, step)
        if is_best:
            best_coeffs = [c.copy() for c in lower.coeffs]
        if should_stop:
            history.stopped_early = True
            logger.info("Early stop at step %d (best step %d, valid RMSE %.5f)",
                        step, stopper.best_step, stopper.best_value)
            break

        grads = profile_grad(lower, X_fit[batch], y_fit[batch], kernel, batch_cfg, grams, evaluation)
        new_coeffs, adam = adam_step(lower.coeffs, grads, adam, cfg)
        lower = lower.with_coeffs(new_coeffs)

    history.best_step = stopper.best_step
    model = WahkonModel(architecture=architecture, kernel=kernel,
                        links=lower.with_coeffs(best_coeffs),
                        lambda_lower=penalties.lambda_lower, lambda_last=penalties.lambda_last,
                        seed=cfg.seed, metadata={"objective": "profile"})
    _refit(model, X, y, penalties.lambda_last)
    history.refit_last_layer = True
    model.metadata.update(best_step=history.best_step, steps_run=len(history),
                          stopped_early=history.stopped_early)
    return model, history


def train_direct(X, y, architecture, kernel, penalties, cfg, monitor=None):
    """
    Train on the joint objective, updating every layer (including a grid last layer) by Adam.

    The returned model's last layer is replaced by a full-data ridge refit
    so that it predicts the same way as a profile-trained model.
    """
    X, y, n_valid = validate_training_data(X, y, architecture, cfg)
    rng = make_rng(cfg.seed)
    fit_idx, valid_idx = holdout_split(rng, X.shape[0], n_valid)
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_valid, y_valid = X[valid_idx], y[valid_idx]

    links = init_links(rng, architecture, kernel, X_fit, cfg.grid_size, cfg.tau_init,
                       cfg.grid_expand, include_last=True)
    n_lower = links.n_layers - 1
    all_grams = bank_grams(kernel, links)
    grams, last_gram = all_grams[:n_lower], all_grams[n_lower]
    sampler = BatchSampler(len(fit_idx), cfg.batch_size, rng)
    stopper = EarlyStopping(cfg.patience, cfg.min_improvement)
    adam = AdamState.zeros_like(links.coeffs)
    history = TrainHistory(objective="direct")
    best_coeffs = [c.copy() for c in links.coeffs]

    def predict_rows(bank, rows):
        Z = forward(bank.head(n_lower), rows, kernel).final
        last = bank.tail(n_lower)
        return layer_apply(kernel, Z, last.centers(0), last.coeffs[0])[:, 0]

    logger.info("Direct training %s on %d rows (%d held out)", architecture, len(fit_idx), n_valid)
    started = time.perf_counter()
    for step in _progress(cfg, "direct"):
        batch = sampler.next()
        batch_cfg = penalties.with_n_scale(len(batch))
        lower, last = links.head(n_lower), links.tail(n_lower)
        loss = joint_loss(lower, last, X_fit[batch], y_fit[batch], kernel, batch_cfg, grams, last_gram)

        train_rmse = rmse(predict_rows(links, X_fit[batch]), y_fit[batch])
        valid_rmse = rmse(predict_rows(links, X_valid), y_valid)
        test_rmse = rmse(predict_rows(links, monitor[0]), monitor[1]) if monitor is not None else None
        history.record(step, loss, train_rmse, valid_rmse, test_rmse,
                       (time.perf_counter() - started) * 1000.0)

        is_best, should_stop = stopper.update(valid_rmse, step)
        if is_best:
            best_coeffs = [c.copy() for c in links.coeffs]
        if should_stop:
            history.stopped_early = True
            logger.info("Early stop at step %d (best step %d)", step, stopper.best_step)
            break

        lower_grads, last_grad = joint_grad(lower, last, X_fit[batch], y_fit[batch], kernel,
                                            batch_cfg, grams, last_gram)
        new_coeffs, adam = adam_step(links.coeffs, lower_grads + [last_grad], adam, cfg)
        links = links.with_coeffs(new_coeffs)

    history.best_step = stopper.best_step
    best = links.with_coeffs(best_coeffs)
    model = WahkonModel(architecture=architecture, kernel=kernel, links=best.head(n_lower),
                        lambda_lower=penalties.lambda_lower, lambda_last=penalties.lambda_last,
                        seed=cfg.seed, metadata={"objective": "direct"})
    _refit(model, X, y, penalties.lambda_last)
    history.refit_last_layer = True
    model.metadata.update(best_step=history.best_step, steps_run=len(history),
                          stopped_early=history.stopped_early)
    return model, history


def predict(model, X_test):
    """Predictions of a fitted model for the rows of ``X_test``."""
    if not model.is_fitted:
        raise NotFitted("the model has no last-layer state; train or load it first")
    X_test = np.asarray(X_test, dtype=float)
    if X_test.ndim == 1:
        X_test = X_test[:, None]
    return forward(model, X_test, include_last=True).final[:, 0]
