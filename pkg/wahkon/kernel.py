#!/usr/bin/env python3
"""
Gaussian reproducing kernel and the kernel matrices built from it.

    K(x, y) = exp(-(x - y)^2 / (2 l^2))

The kernel is normalized (K(t, t) = 1). Model links use l = 0.5; the prior
study uses l = 1/sqrt(2), i.e. exp(-(x - y)^2).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

MODEL_LENGTHSCALE = 0.5
PRIOR_LENGTHSCALE = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel with a single lengthscale."""

    lengthscale: float = MODEL_LENGTHSCALE

    def __post_init__(self):
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0):
            raise DomainError(f"kernel lengthscale must be positive, got {self.lengthscale}")


def _pairwise(cfg, left, right):
    diff = np.asarray(left, dtype=float)[:, None] - np.asarray(right, dtype=float)[None, :]
    return np.exp(-0.5 * (diff / cfg.lengthscale) ** 2)


def kernel_eval(cfg, x, y):
    """Evaluate K(x, y) for scalars."""
    return float(np.exp(-0.5 * ((float(x) - float(y)) / cfg.lengthscale) ** 2))


def gram(cfg, points):
    """Gram matrix [K(p_i, p_i')] of a 1-D point set."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    return _pairwise(cfg, points, points)


def cross(cfg, points, grid):
    """Cross-kernel matrix [K(p_i, u_g)] of shape (len(points), len(grid))."""
    return _pairwise(cfg, np.atleast_1d(points), np.atleast_1d(grid))


def grid_gram(cfg, grid):
    """Gram matrix K_UU of the inducing grid."""
    return gram(cfg, grid)


def kernel_derivative(cfg, points, grid):
    """
    Derivative of K(u_g, t) with respect to t, evaluated at t = points.

    Returns the (len(points), len(grid)) matrix of -(t - u)/l^2 * K(u, t).
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    diff = points[:, None] - grid[None, :]
    return -diff / cfg.lengthscale ** 2 * np.exp(-0.5 * (diff / cfg.lengthscale) ** 2)
