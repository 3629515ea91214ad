#!/usr/bin/env python3
"""
Reference predictors for the benchmark sweeps.

* ``train_mlp_baseline``: a ReLU multilayer perceptron with the depth of the
  matching Wahkon network and hidden widths scaled by sqrt(G) = 3, trained on
  plain squared loss with the same Adam, batching and early-stopping
  machinery as the Wahkon trainer.
* ``fit_mean_baseline``: the constant sample-mean predictor.
"""

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .network import Architecture
from .numerics import make_rng, rmse
from .trainer import AdamState, BatchSampler, EarlyStopping, adam_step, holdout_split, validate_training_data

logger = logging.getLogger(__name__)

WIDTH_SCALE = 3


@dataclass
class MLPModel:
    weights: list
    biases: list

    def predict(self, X):
        hidden = np.asarray(X, dtype=float)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            hidden = np.maximum(hidden @ W + b, 0.0)
        return hidden @ self.weights[-1][:, 0] + self.biases[-1][0]

    __call__ = predict


@dataclass
class MeanModel:
    value: float

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.value)

    __call__ = predict


def mlp_architecture(depth_match):
    """Same depth as ``depth_match``; every hidden width multiplied by 3."""
    widths = depth_match.widths
    hidden = [WIDTH_SCALE * w for w in widths[1:-1]]
    return Architecture(tuple([widths[0]] + hidden + [1]))


def _init_mlp(rng, architecture):
    weights, biases = [], []
    widths = architecture.widths
    for index, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        if index == len(widths) - 2:
            weights.append(np.zeros((fan_in, fan_out)))
        else:
            weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _mlp_grads(weights, biases, X, y):
    activations = [X]
    pre = []
    hidden = X
    for W, b in zip(weights[:-1], biases[:-1]):
        z = hidden @ W + b
        pre.append(z)
        hidden = np.maximum(z, 0.0)
        activations.append(hidden)
    prediction = hidden @ weights[-1] + biases[-1]

    delta = 2.0 * (prediction - y[:, None]) / X.shape[0]
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for index in reversed(range(len(weights))):
        grad_w[index] = activations[index].T @ delta
        grad_b[index] = delta.sum(axis=0)
        if index > 0:
            delta = (delta @ weights[index].T) * (pre[index - 1] > 0)
    return grad_w, grad_b


def train_mlp_baseline(X, y, depth_match, cfg):
    """
    Train the depth-matched ReLU MLP.

    Returns:
    --------
    MLPModel
        Best-validation weights; callable on an input matrix
    """
    X, y, n_valid = validate_training_data(X, y, depth_match, cfg)
    architecture = mlp_architecture(depth_match)
    rng = make_rng(cfg.seed)
    fit_idx, valid_idx = holdout_split(rng, X.shape[0], n_valid)
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_valid, y_valid = X[valid_idx], y[valid_idx]

    weights, biases = _init_mlp(rng, architecture)
    n_weights = len(weights)
    params = weights + biases
    adam = AdamState.zeros_like(params)
    sampler = BatchSampler(len(fit_idx), cfg.batch_size, rng)
    stopper = EarlyStopping(cfg.patience, cfg.min_improvement)
    best = [p.copy() for p in params]

    logger.info("MLP baseline %s on %d rows", architecture, len(fit_idx))
    for step in tqdm(range(cfg.max_steps), desc="mlp", disable=not cfg.show_progress, leave=False):
        model = MLPModel(params[:n_weights], params[n_weights:])
        is_best, should_stop = stopper.update(rmse(model.predict(X_valid), y_valid), step)
        if is_best:
            best = [p.copy() for p in params]
        if should_stop:
            logger.debug("MLP early stop at step %d", step)
            break
        batch = sampler.next()
        grad_w, grad_b = _mlp_grads(params[:n_weights], params[n_weights:], X_fit[batch], y_fit[batch])
        params, adam = adam_step(params, grad_w + grad_b, adam, cfg)

    return MLPModel(best[:n_weights], best[n_weights:])


def fit_mean_baseline(y):
    return MeanModel(float(np.mean(y)))
