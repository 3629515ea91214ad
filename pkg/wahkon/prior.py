#!/usr/bin/env python3
"""
Hierarchical Gaussian-process prior over the Wahkon layers.

Every link carries an independent GP(0, tau_l K) prior. Given the previous
layer's outputs at a fixed design, each unit of layer l is exactly Gaussian,

    x^(l)_.j | X^(l-1) ~ N(0, tau_l * sum_k Q^(l-1)_k),

so draws are made layer by layer at the evaluation points only. Marginally
the hidden outputs keep mean 0 and variance tau_l * D_(l-1) but become
increasingly non-Gaussian with depth, which the squared-Mahalanobis
diagnostics expose against the chi-square reference.

The MAP calibration tau_l = sigma^2 / (n lambda_l) makes 2 sigma^2 times the
negative log posterior equal to the penalized least-squares objective.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from .errors import DimensionMismatch, DomainError, InsufficientDraws
from .kernel import PRIOR_LENGTHSCALE, KernelConfig, gram, grid_gram
from .network import Architecture, forward, init_links, rkhs_norm_sq_grid
from .numerics import chi_square_cdf, chi_square_quantile, derive_seed, factorize_spd, gaussian_sample, make_rng
from .objective import PenaltyConfig, joint_loss

logger = logging.getLogger(__name__)

MIN_MOMENT_DRAWS = 100
NEAR_THRESHOLD = 50.0
FAR_THRESHOLD = 150.0


@dataclass(frozen=True)
class PriorConfig:
    """
    Prior-study settings.

    Without explicit ``taus`` the variance-preserving choice
    tau_l = tau / D_(l-1) is used.
    """

    architecture: Architecture = field(default_factory=lambda: Architecture((4, 4, 4, 4, 4, 4)))
    lengthscale: float = PRIOR_LENGTHSCALE
    taus: tuple = None
    tau: float = 1.0
    n_points: int = 100
    n_draws: int = 1000
    seed: int = 0
    design_seed: int = 0
    show_progress: bool = False

    def __post_init__(self):
        if self.n_points < 2:
            raise DomainError(f"n_points must be >= 2, got {self.n_points}")
        if self.n_draws < 1:
            raise DomainError(f"n_draws must be >= 1, got {self.n_draws}")
        if self.taus is not None:
            if len(self.taus) != self.architecture.depth:
                raise DimensionMismatch(
                    f"{len(self.taus)} tau values for a network of depth {self.architecture.depth}")
            if any(t < 0 for t in self.taus):
                raise DomainError(f"tau values must be nonnegative, got {self.taus}")
        elif self.tau < 0:
            raise DomainError(f"tau must be nonnegative, got {self.tau}")

    @property
    def kernel(self):
        return KernelConfig(self.lengthscale)

    def resolved_taus(self):
        if self.taus is not None:
            return tuple(float(t) for t in self.taus)
        return tuple(self.tau / d for d in self.architecture.widths[:-1])


@dataclass
class PriorDraws:
    """``layers[l - 1]`` has shape (n_draws, n_points, D_l); ``inputs`` is layer 0."""

    inputs: np.ndarray
    layers: list
    taus: tuple

    @property
    def n_draws(self):
        return self.layers[0].shape[0] if self.layers else 0

    @property
    def n_points(self):
        return self.inputs.shape[0]

    def layer(self, index):
        if index == 0:
            return np.broadcast_to(self.inputs, (self.n_draws,) + self.inputs.shape)
        return self.layers[index - 1]


def prior_design(n_points, input_dim, seed=0):
    """
    Fixed evaluation design: column 1 is an equally spaced grid on [-1, 1],
    the remaining columns are uniform draws frozen by ``seed``.
    """
    design = np.empty((n_points, input_dim))
    design[:, 0] = np.linspace(-1.0, 1.0, n_points)
    if input_dim > 1:
        design[:, 1:] = make_rng(seed).uniform(-1.0, 1.0, size=(n_points, input_dim - 1))
    return design


def sample_prior(cfg, inputs=None):
    """Draw ``cfg.n_draws`` realizations of every layer at the design points."""
    widths = cfg.architecture.widths
    if inputs is None:
        inputs = prior_design(cfg.n_points, widths[0], cfg.design_seed)
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != widths[0]:
        raise DimensionMismatch(f"design has shape {inputs.shape}, architecture expects {widths[0]} columns")
    if not np.all(np.isfinite(inputs)):
        raise DomainError("prior design contains non-finite values")

    kernel = cfg.kernel
    taus = cfg.resolved_taus()
    n_points = inputs.shape[0]
    layers = [np.empty((cfg.n_draws, n_points, d)) for d in widths[1:]]
    zero_mean = np.zeros(n_points)

    for m in tqdm(range(cfg.n_draws), desc="prior draws", disable=not cfg.show_progress, leave=False):
        rng = make_rng(derive_seed(cfg.seed, m))
        current = inputs
        for index, tau in enumerate(taus):
            cov = np.zeros((n_points, n_points))
            for k in range(current.shape[1]):
                cov += gram(kernel, current[:, k])
            current = gaussian_sample(rng, zero_mean, tau * cov, size=widths[index + 1])
            layers[index][m] = current

    logger.info("Sampled %d prior draws through %s (taus %s)", cfg.n_draws, cfg.architecture,
                ", ".join(f"{t:.3g}" for t in taus))
    return PriorDraws(inputs=inputs, layers=layers, taus=taus)


@dataclass
class LayerMoments:
    layer: int
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    expected_variance: float

    def consistent(self, n_se=3.0):
        """Mean within n_se SE of 0 and variance within n_se SE of tau_l * D_(l-1)."""
        return (abs(self.mean) <= n_se * self.mean_se
                and abs(self.variance - self.expected_variance) <= n_se * self.variance_se)


def layer_moment_check(draws, cfg):
    """
    Pooled Monte Carlo mean and variance of every layer with standard errors.

    Each draw contributes one average over points and units; standard
    errors come from the spread of these per-draw averages. The variance
    estimate is the pooled second moment (the prior mean is 0).
    """
    if draws.n_draws < MIN_MOMENT_DRAWS:
        raise InsufficientDraws(
            f"moment checks need at least {MIN_MOMENT_DRAWS} draws, got {draws.n_draws}")
    widths = cfg.architecture.widths
    root = np.sqrt(draws.n_draws)
    results = []
    for index, samples in enumerate(draws.layers):
        per_draw_mean = samples.mean(axis=(1, 2))
        per_draw_sq = (samples ** 2).mean(axis=(1, 2))
        results.append(LayerMoments(
            layer=index + 1,
            mean=float(per_draw_mean.mean()),
            mean_se=float(per_draw_mean.std(ddof=1) / root),
            variance=float(per_draw_sq.mean()),
            variance_se=float(per_draw_sq.std(ddof=1) / root),
            expected_variance=draws.taus[index] * widths[index],
        ))
    return results


def moments_frame(moments):
    return pd.DataFrame([m.__dict__ for m in moments])


@dataclass
class MahalanobisDiagnostics:
    """Squared Mahalanobis distances of one layer; ``d2`` has shape (n_draws, len(units))."""

    layer: int
    units: list
    d2: np.ndarray
    dof: int

    @property
    def values(self):
        return self.d2.ravel()

    def ecdf(self, x):
        """Fraction of pooled d^2 values at or below ``x``."""
        sorted_values = np.sort(self.values)
        return np.searchsorted(sorted_values, np.asarray(x, dtype=float), side="right") / sorted_values.size

    def qq_pairs(self, unit_index=0):
        """(empirical, theoretical) quantiles at levels (m - 0.5) / n_draws."""
        empirical = np.sort(self.d2[:, unit_index])
        levels = (np.arange(1, empirical.size + 1) - 0.5) / empirical.size
        return empirical, chi_square_quantile(self.dof, levels)

    def ks_distance(self):
        return float(stats.kstest(self.values, lambda x: chi_square_cdf(x, self.dof)).statistic)

    def fraction_below(self, threshold=NEAR_THRESHOLD):
        return float(np.mean(self.values < threshold))

    def fraction_above(self, threshold=FAR_THRESHOLD):
        return float(np.mean(self.values > threshold))

    def records_frame(self):
        n_draws = self.d2.shape[0]
        return pd.DataFrame({
            "draw": np.tile(np.arange(n_draws), len(self.units)),
            "layer": self.layer,
            "unit": np.repeat(self.units, n_draws),
            "d2": self.d2.T.ravel(),
        })

    def qq_frame(self):
        frames = []
        for position, unit in enumerate(self.units):
            empirical, theoretical = self.qq_pairs(position)
            frames.append(pd.DataFrame({"layer": self.layer, "unit": unit,
                                        "empirical_q": empirical, "theoretical_q": theoretical}))
        return pd.concat(frames, ignore_index=True)


def mahalanobis_diagnostics(draws, layer, unit=None, shrinkage=0.0):
    """
    Squared Mahalanobis distance of every draw's output vector.

    The reference covariance is the zero-mean second-moment matrix of the
    layer's output vectors, pooled over all draws and over ``unit`` (all
    units when None). With ``shrinkage`` s > 0 it is shrunk toward its
    diagonal: (1 - s) S + s diag(S). Without shrinkage the distances are
    computed as scaled leverages from a QR factorization, which stays
    accurate when S is ill-conditioned.
    """
    if not 1 <= layer <= len(draws.layers):
        raise DomainError(f"layer must lie in 1..{len(draws.layers)}, got {layer}")
    if not 0.0 <= shrinkage <= 1.0:
        raise DomainError(f"shrinkage must lie in [0, 1], got {shrinkage}")
    samples = draws.layers[layer - 1]
    n_draws, n_points, width = samples.shape
    units = list(range(width)) if unit is None else [int(unit)]
    if any(u < 0 or u >= width for u in units):
        raise DomainError(f"unit must lie in 0..{width - 1}, got {unit}")

    vectors = np.concatenate([samples[:, :, u] for u in units], axis=0)
    n_rows = vectors.shape[0]
    if n_rows < n_points:
        raise InsufficientDraws(
            f"{n_rows} pooled vectors cannot estimate a {n_points}x{n_points} covariance")

    if shrinkage == 0.0:
        q, _ = np.linalg.qr(vectors)
        d2 = n_rows * np.sum(q ** 2, axis=1)
    else:
        second_moment = vectors.T @ vectors / n_rows
        reference = (1.0 - shrinkage) * second_moment + shrinkage * np.diag(np.diag(second_moment))
        solved = factorize_spd(reference).solve(vectors.T)
        d2 = np.einsum("ip,pi->i", vectors, solved)

    return MahalanobisDiagnostics(layer=layer, units=units,
                                  d2=d2.reshape(len(units), n_draws).T, dof=n_points)


def map_tau_from_lambda(sigma_sq, n, lam):
    """tau = sigma^2 / (n lambda)."""
    if not (sigma_sq > 0 and n > 0 and lam > 0):
        raise DomainError(f"sigma_sq, n and lambda must be positive, got {sigma_sq}, {n}, {lam}")
    return sigma_sq / (n * lam)


def calibrated_taus(sigma_sq, n, lambda_lower_value, lambda_last, depth):
    """Per-layer prior scales matching the penalties of a depth-``depth`` network."""
    lower = map_tau_from_lambda(sigma_sq, n, lambda_lower_value)
    return tuple([lower] * (depth - 1) + [map_tau_from_lambda(sigma_sq, n, lambda_last)])


def negative_log_posterior(links, X, y, kernel, sigma_sq, taus):
    """
    -log p(links | data) up to its additive constant, for grid links covering every layer.

    Gaussian likelihood with variance sigma_sq; each link contributes
    ||phi||^2 / (2 tau_l).
    """
    prediction = forward(links, X, kernel).final[:, 0]
    residual = np.asarray(y, dtype=float) - prediction
    value = residual @ residual / (2.0 * sigma_sq)
    for index, (grid, coeffs) in enumerate(zip(links.grids, links.coeffs)):
        K_UU = grid_gram(kernel, grid)
        norms = sum(rkhs_norm_sq_grid(K_UU, coeffs[:, j, k])
                    for j in range(coeffs.shape[1]) for k in range(coeffs.shape[2]))
        value += norms / (2.0 * taus[index])
    return float(value)


def map_objective_discrepancy(links, X, y, kernel, sigma_sq, lambda_lower_value, lambda_last, taus=None):
    """|2 sigma^2 * negative log posterior - penalized least-squares objective| at one point."""
    n = np.asarray(X).shape[0]
    if taus is None:
        taus = calibrated_taus(sigma_sq, n, lambda_lower_value, lambda_last, links.n_layers)
    n_lower = links.n_layers - 1
    penalties = PenaltyConfig(lambda_lower_value, lambda_last, n)
    objective = joint_loss(links.head(n_lower), links.tail(n_lower), X, y, kernel, penalties)
    posterior = 2.0 * sigma_sq * negative_log_posterior(links, X, y, kernel, sigma_sq, taus)
    return abs(posterior - objective)


def map_objective_identity_check(X, y, architecture, kernel, sigma_sq, lambda_lower_value, lambda_last,
                                 n_points=10, seed=0, taus=None, tau_init=1.0):
    """
    Largest calibration discrepancy over ``n_points`` random parameter settings.

    Parameters are drawn like an initialization (grid links on every layer).
    """
    X = np.asarray(X, dtype=float)
    discrepancies = []
    for point in range(n_points):
        rng = make_rng(derive_seed(seed, point))
        links = init_links(rng, architecture, kernel, X, tau_init=tau_init, include_last=True)
        discrepancies.append(map_objective_discrepancy(
            links, X, y, kernel, sigma_sq, lambda_lower_value, lambda_last, taus))
    return float(max(discrepancies))
