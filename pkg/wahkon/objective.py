#!/usr/bin/env python3
"""
Penalized least-squares objectives of the Wahkon network and their gradients.

Two objectives are implemented:

* the profile objective, where the last layer is minimized out in closed
  form by kernel ridge regression,

      P(C_<L) = c * y' (K + c I)^-1 y + n * lambda_lower * sum ||phi||^2,

  with K the sum of the per-coordinate Gram matrices of the layer-(L-1)
  outputs and c = n * lambda_L;

* the joint (direct) objective over all layers including a parameterized
  last layer.

Gradients are analytic. The profile gradient differentiates at the ridge
optimum while holding alpha fixed, so the ridge term only contributes
-c * alpha' dK alpha.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, EmptyInput
from .kernel import gram, grid_gram
from .network import LinkBank, RepresenterBank, forward, layer_basis, layer_grams
from .numerics import factorize_spd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty weights and the sample size multiplying them."""

    lambda_lower: float
    lambda_last: float
    n_scale: int = 1

    def __post_init__(self):
        if not self.lambda_lower > 0 or not self.lambda_last > 0:
            raise DomainError(
                f"penalties must be positive, got lambda_lower={self.lambda_lower}, "
                f"lambda_last={self.lambda_last}")
        if int(self.n_scale) < 1:
            raise DomainError(f"n_scale must be a positive integer, got {self.n_scale}")

    def with_n_scale(self, n_scale):
        return PenaltyConfig(self.lambda_lower, self.lambda_last, int(n_scale))

    @property
    def ridge(self):
        return self.n_scale * self.lambda_last


@dataclass
class RidgeSolution:
    alpha: np.ndarray
    fitted: np.ndarray
    value: float
    jitter_applied: float = 0.0


@dataclass
class ProfileEvaluation:
    value: float
    ridge: RidgeSolution
    penalty: float
    layers: object

    @property
    def last_inputs(self):
        return self.layers.final


def bank_grams(kernel, bank):
    """Per-layer Gram matrices: (G, G) for grid banks, (D_in, M, M) otherwise."""
    if isinstance(bank, LinkBank):
        return [grid_gram(kernel, grid) for grid in bank.grids]
    return [layer_grams(kernel, bank, index) for index in range(bank.n_layers)]


def _quadratic(gram_matrix, coeffs):
    if gram_matrix.ndim == 2:
        if gram_matrix.shape[0] != coeffs.shape[0]:
            raise DimensionMismatch(
                f"Gram matrix of size {gram_matrix.shape[0]} does not match {coeffs.shape[0]} coefficients")
        return float(np.einsum("mp,mjk,pjk->", gram_matrix, coeffs, coeffs))
    if gram_matrix.shape[0] != coeffs.shape[2] or gram_matrix.shape[1] != coeffs.shape[0]:
        raise DimensionMismatch(
            f"Gram stack {gram_matrix.shape} does not match coefficients {coeffs.shape}")
    return float(np.einsum("kmp,mjk,pjk->", gram_matrix, coeffs, coeffs))


def _quadratic_grad(gram_matrix, coeffs):
    if gram_matrix.ndim == 2:
        return 2.0 * np.einsum("mp,pjk->mjk", gram_matrix, coeffs)
    return 2.0 * np.einsum("kmp,pjk->mjk", gram_matrix, coeffs)


def penalty(links, grams, cfg):
    """
    n_scale * lambda_lower * sum of squared RKHS norms of the given links.

    The profiled last layer is never part of ``links``.
    """
    if len(grams) != links.n_layers:
        raise DimensionMismatch(f"{len(grams)} Gram matrices for {links.n_layers} layers")
    total = sum(_quadratic(g, c) for g, c in zip(grams, links.coeffs))
    return cfg.n_scale * cfg.lambda_lower * max(total, 0.0)


def aggregate_last_kernel(kernel, last_inputs):
    """K = sum_k gram(column k of the layer-(L-1) outputs)."""
    last_inputs = np.asarray(last_inputs, dtype=float)
    if last_inputs.ndim == 1:
        last_inputs = last_inputs[:, None]
    if last_inputs.shape[0] < 1:
        raise EmptyInput("no rows to build the last-layer kernel from")
    K = np.zeros((last_inputs.shape[0], last_inputs.shape[0]))
    for k in range(last_inputs.shape[1]):
        K += gram(kernel, last_inputs[:, k])
    return K


def last_layer_ridge(K, y, lambda_last, n_scale):
    """alpha = (K + n_scale * lambda_last * I)^-1 y, fitted = K alpha."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"kernel matrix {K.shape} does not match response of length {y.shape[0]}")
    if not lambda_last > 0:
        raise DomainError(f"lambda_last must be positive, got {lambda_last}")

    ridge = n_scale * lambda_last
    factor = factorize_spd(K + ridge * np.eye(K.shape[0]))
    alpha = factor.solve(y)
    return RidgeSolution(alpha=alpha, fitted=K @ alpha,
                         value=float(ridge * (y @ alpha)),
                         jitter_applied=factor.jitter_applied)


def _check_batch(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise EmptyInput("the batch has no rows")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} input rows but {y.shape[0]} responses")
    return X, y


def profile_loss(lower, X, y, kernel, cfg, grams=None):
    """Profile objective on a batch; ``cfg.n_scale`` should equal the batch size."""
    X, y = _check_batch(X, y)
    layers = forward(lower, X, kernel)
    K = aggregate_last_kernel(kernel, layers.final)
    ridge = last_layer_ridge(K, y, cfg.lambda_last, cfg.n_scale)
    grams = bank_grams(kernel, lower) if grams is None else grams
    pen = penalty(lower, grams, cfg)
    return ProfileEvaluation(value=ridge.value + pen, ridge=ridge, penalty=pen, layers=layers)


def _last_prediction(kernel, last, inputs):
    basis, diff = layer_basis(kernel, inputs, last.centers(0))
    coeffs = last.coeffs[0]
    if coeffs.shape[1] != 1:
        raise DimensionMismatch(f"the last layer must have one output, got {coeffs.shape[1]}")
    return np.einsum("nkm,mjk->nj", basis, coeffs)[:, 0], basis, diff


def joint_loss(lower, last, X, y, kernel, cfg, grams=None, last_gram=None):
    """
    Residual sum of squares plus the penalty on every layer.

    ``last`` is a one-layer bank (grid or representer form) mapping the
    layer-(L-1) outputs to the scalar prediction.
    """
    X, y = _check_batch(X, y)
    layers = forward(lower, X, kernel)
    prediction, _, _ = _last_prediction(kernel, last, layers.final)
    residual = y - prediction

    grams = bank_grams(kernel, lower) if grams is None else grams
    last_gram = bank_grams(kernel, last)[0] if last_gram is None else last_gram
    lower_pen = penalty(lower, grams, cfg)
    last_pen = cfg.n_scale * cfg.lambda_last * max(_quadratic(last_gram, last.coeffs[0]), 0.0)
    return float(residual @ residual) + lower_pen + last_pen


def _backprop(kernel, lower, layers, upstream, grams, cfg):
    """Push d(loss)/d(layer-(L-1) outputs) back through the lower layers."""
    grads = [None] * lower.n_layers
    g = upstream
    for index in reversed(range(lower.n_layers)):
        coeffs = lower.coeffs[index]
        basis, diff = layer_basis(kernel, layers[index], lower.centers(index))
        grads[index] = np.einsum("ij,ikm->mjk", g, basis)
        if grams is not None:
            grads[index] += cfg.n_scale * cfg.lambda_lower * _quadratic_grad(grams[index], coeffs)
        if index > 0:
            d_basis = -diff / kernel.lengthscale ** 2 * basis
            g = np.einsum("ij,mjk,ikm->ik", g, coeffs, d_basis)
    return grads


def profile_grad(lower, X, y, kernel, cfg, grams=None, evaluation=None):
    """
    Gradient of the profile objective with respect to every lower-layer coefficient.

    Inducing-grid positions are constants. Pass ``evaluation`` (from
    profile_loss on the same batch) to reuse its forward pass and ridge solve.

    Returns:
    --------
    list of numpy.ndarray
        One tensor per lower layer, shaped like ``lower.coeffs``
    """
    X, y = _check_batch(X, y)
    if evaluation is None:
        evaluation = profile_loss(lower, X, y, kernel, cfg, grams)
    grams = bank_grams(kernel, lower) if grams is None else grams
    if lower.n_layers == 0:
        return []

    Z = evaluation.layers.final
    alpha = evaluation.ridge.alpha
    scale = 2.0 * cfg.ridge / kernel.lengthscale ** 2
    upstream = np.empty_like(Z)
    for k in range(Z.shape[1]):
        diff = Z[:, k][:, None] - Z[:, k][None, :]
        Q = gram(kernel, Z[:, k])
        upstream[:, k] = scale * alpha * ((diff * Q) @ alpha)

    return _backprop(kernel, lower, evaluation.layers, upstream, grams, cfg)


def joint_grad(lower, last, X, y, kernel, cfg, grams=None, last_gram=None):
    """
    Gradient of the joint objective.

    Returns ``(lower_grads, last_grad)``; the last layer's centers are constants.
    """
    X, y = _check_batch(X, y)
    layers = forward(lower, X, kernel)
    prediction, basis, diff = _last_prediction(kernel, last, layers.final)
    grams = bank_grams(kernel, lower) if grams is None else grams
    last_gram = bank_grams(kernel, last)[0] if last_gram is None else last_gram

    g = (-2.0 * (y - prediction))[:, None]
    coeffs = last.coeffs[0]
    last_grad = np.einsum("ij,ikm->mjk", g, basis)
    last_grad += cfg.n_scale * cfg.lambda_last * _quadratic_grad(last_gram, coeffs)

    d_basis = -diff / kernel.lengthscale ** 2 * basis
    upstream = np.einsum("ij,mjk,ikm->ik", g, coeffs, d_basis)
    lower_grads = _backprop(kernel, lower, layers, upstream, grams, cfg)
    return lower_grads, last_grad


def shared_last_layer(last_inputs, alpha):
    """Representer-form last layer with the shared coefficient vector alpha on every coordinate."""
    last_inputs = np.asarray(last_inputs, dtype=float)
    d_in = last_inputs.shape[1]
    coeffs = np.repeat(np.asarray(alpha, dtype=float)[:, None, None], d_in, axis=2)
    return RepresenterBank([last_inputs.copy()], [coeffs])

