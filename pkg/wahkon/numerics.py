#!/usr/bin/env python3
"""
Numerical building blocks shared by every other module.

Deterministic random streams, symmetric-positive-definite solves with an
escalating diagonal jitter, Gaussian sampling through the Cholesky factor,
and the normal / chi-square special functions needed by the diagnostics
and the Bayesian-optimization acquisition.

Random streams are numpy ``Generator`` objects over PCG64. Normal variates
come from numpy's ziggurat sampler (``standard_normal``), so identical
seeds give bitwise-identical streams. Replicate streams are derived with
``SeedSequence`` spawn keys, which guarantees distinct, independent seeds.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .errors import DimensionMismatch, DomainError, EmptyInput, NonPositiveDefinite

logger = logging.getLogger(__name__)

# Jitter ladder: 1e-10, 1e-9, ..., 1e-4
JITTER_START = 1e-10
JITTER_CAP = 1e-4
JITTER_FACTOR = 10.0

Rng = np.random.Generator


def make_rng(seed):
    """Create the library's PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(master_seed, *keys):
    """
    Derive a child seed from a master seed and a path of integer keys.

    The same (master_seed, keys) always gives the same child; distinct key
    paths give statistically independent streams. Used for replicates,
    folds, sweep cells and prior draws so that results never depend on
    execution order.
    """
    sequence = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SpdFactor:
    """Lower Cholesky factor of ``A + jitter_applied * I``."""

    lower: np.ndarray
    jitter_applied: float = 0.0

    @property
    def size(self):
        return self.lower.shape[0]

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.size:
            raise DimensionMismatch(
                f"right-hand side has {b.shape[0]} rows, matrix is {self.size}x{self.size}")
        if not np.all(np.isfinite(b)):
            raise DomainError("right-hand side has non-finite entries")
        return linalg.cho_solve((self.lower, True), b, check_finite=False)


def _check_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


def factorize_spd(A):
    """
    Cholesky-factorize a symmetric matrix, escalating diagonal jitter on failure.

    Tries the plain factorization first, then adds 1e-10, 1e-9, ... up to
    1e-4 times the identity. Raises NonPositiveDefinite past the cap or when
    ``A`` holds NaN or infinite entries.
    """
    A = _check_square(A)
    if not np.all(np.isfinite(A)):
        raise NonPositiveDefinite(f"matrix of size {A.shape[0]} has non-finite entries")
    try:
        return SpdFactor(linalg.cholesky(A, lower=True, check_finite=False), 0.0)
    except linalg.LinAlgError:
        pass

    identity = np.eye(A.shape[0])
    jitter = JITTER_START
    while jitter <= JITTER_CAP * (1 + 1e-9):
        try:
            lower = linalg.cholesky(A + jitter * identity, lower=True)
            logger.debug("Cholesky succeeded with jitter %.0e (n=%d)", jitter, A.shape[0])
            return SpdFactor(lower, jitter)
        except linalg.LinAlgError:
            jitter *= JITTER_FACTOR

    raise NonPositiveDefinite(
        f"matrix of size {A.shape[0]} is not positive definite even with jitter {JITTER_CAP:g}")


def spd_solve(A, b):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``."""
    A = _check_square(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(
            f"right-hand side has {b.shape[0]} rows, matrix is {A.shape[0]}x{A.shape[0]}")
    return factorize_spd(A).solve(b)


def gaussian_sample(rng, mean, cov, size=None):
    """
    Draw from N(mean, cov) as ``mean + L z`` with ``L`` the jittered Cholesky factor.

    With ``size`` given, returns an array of shape (n, size) holding that many
    independent columns. A zero covariance returns the mean exactly; the
    standard-normal draws are still consumed so the stream stays aligned.
    """
    mean = np.asarray(mean, dtype=float)
    cov = _check_square(cov)
    if mean.shape[0] != cov.shape[0]:
        raise DimensionMismatch(
            f"mean has length {mean.shape[0]}, covariance is {cov.shape[0]}x{cov.shape[0]}")

    shape = (cov.shape[0],) if size is None else (cov.shape[0], int(size))
    z = rng.standard_normal(shape)

    if not np.any(cov):
        draw = np.zeros(shape)
    else:
        draw = factorize_spd(cov).lower @ z

    if size is None:
        return mean + draw
    return mean[:, None] + draw


def std_normal_cdf(z):
    """Standard normal distribution function."""
    return stats.norm.cdf(z)


def std_normal_pdf(z):
    """Standard normal density."""
    return stats.norm.pdf(z)


def chi_square_quantile(k, p):
    """
    Inverse chi-square distribution function with ``k`` degrees of freedom.

    scipy inverts the regularized lower incomplete gamma function, which is
    accurate well beyond the 1e-4 relative tolerance the diagnostics need.
    """
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)) or not np.all(np.isfinite(p)):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if int(k) != k or k < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {k}")
    result = stats.chi2.ppf(p, int(k))
    return float(result) if result.ndim == 0 else result


def chi_square_cdf(x, k):
    """Chi-square distribution function with ``k`` degrees of freedom."""
    return stats.chi2.cdf(x, int(k))


def mahalanobis_sq(x, cov):
    """Squared Mahalanobis norm ``x' cov^{-1} x``."""
    x = np.asarray(x, dtype=float)
    return float(x @ spd_solve(cov, x))


def rmse(pred, target):
    """Root mean squared error of two equal-length vectors."""
    pred = np.asarray(pred, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    if pred.shape != target.shape:
        raise DimensionMismatch(f"{pred.shape[0]} predictions for {target.shape[0]} targets")
    if pred.size == 0:
        raise EmptyInput("cannot compute the RMSE of zero observations")
    return float(np.sqrt(np.mean((pred - target) ** 2)))
