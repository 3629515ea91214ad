#!/usr/bin/env python3
"""
Synthetic benchmarks and the experiment drivers built on them.

Four test functions on Uniform[-1, 1]^D with Gaussian noise of sd 0.1:

    f1(x) = log(x1^2 + x2^2 + |tan x3|) + cot(pi / (1 + exp(x1^2 + sin 6 x2 + x3^2)))
    f2(x) = sin(sum_i x_i^2)                                  (D = 10)
    f3(x) = exp(0.5 [sin(pi (x1^2 + x2^2)) + sin(pi (x3^2 + x4^2))])
    f4(x) = exp(sin(pi (x1^2 + x2^2))) cos(pi x3 x4)          (x5, x6 inactive)

``run_size_sweep`` produces test-RMSE records over training sizes and
replicates; ``compare_objectives`` trains the profile and direct objectives
side by side on a monitored test set.
"""

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from tqdm import tqdm

from .baselines import fit_mean_baseline, train_mlp_baseline
from .errors import DataValidationError, DimensionMismatch, DomainError, InsufficientData, SingularPoint, WahkonError
from .hyperopt import BOConfig, lambda_lower, tune_last_lambda
from .kernel import KernelConfig
from .network import Architecture
from .numerics import derive_seed, make_rng, rmse
from .objective import PenaltyConfig
from .trainer import TrainConfig, predict, train_direct, train_profile

logger = logging.getLogger(__name__)

NOISE_SD = 0.1
TEST_SIZE = 1000
RESULT_COLUMNS = ["function", "n_train", "replicate", "method", "test_rmse", "train_seconds"]
METHOD_CODES = {"wahkon": 0, "mlp": 1, "mean": 2}
THRESHOLD_FACTOR = 1.1
MIN_COMPARE_ROWS = 100


@dataclass(frozen=True)
class BenchmarkSpec:
    id: str
    input_dim: int
    wahkon_widths: tuple
    noise_sd: float = NOISE_SD

    @property
    def architecture(self):
        return Architecture(self.wahkon_widths)


BENCHMARKS = {
    "f1": BenchmarkSpec("f1", 3, (3, 6, 6, 1)),
    "f2": BenchmarkSpec("f2", 10, (10, 10, 10, 1)),
    "f3": BenchmarkSpec("f3", 4, (4, 4, 4, 1)),
    "f4": BenchmarkSpec("f4", 6, (6, 6, 6, 6, 1)),
}


def get_benchmark(benchmark_id):
    try:
        return BENCHMARKS[benchmark_id]
    except KeyError:
        raise DomainError(
            f"unknown benchmark '{benchmark_id}', choose from {', '.join(sorted(BENCHMARKS))}") from None


def _f1(X):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_arg = X[:, 0] ** 2 + X[:, 1] ** 2 + np.abs(np.tan(X[:, 2]))
        angle = np.pi / (1.0 + np.exp(X[:, 0] ** 2 + np.sin(6.0 * X[:, 1]) + X[:, 2] ** 2))
        return np.where(log_arg > 0, np.log(np.where(log_arg > 0, log_arg, 1.0)), np.nan) + 1.0 / np.tan(angle)


def _f2(X):
    return np.sin(np.sum(X ** 2, axis=1))


def _f3(X):
    return np.exp(0.5 * (np.sin(np.pi * (X[:, 0] ** 2 + X[:, 1] ** 2))
                         + np.sin(np.pi * (X[:, 2] ** 2 + X[:, 3] ** 2))))


def _f4(X):
    return np.exp(np.sin(np.pi * (X[:, 0] ** 2 + X[:, 1] ** 2))) * np.cos(np.pi * X[:, 2] * X[:, 3])


_FUNCTIONS = {"f1": _f1, "f2": _f2, "f3": _f3, "f4": _f4}


def evaluate_benchmark(benchmark_id, X, strict=True):
    """
    Row-wise benchmark values of ``X`` (n x D).

    With ``strict`` a singular row raises SingularPoint; otherwise singular
    rows come back as NaN for the caller to reject.
    """
    spec = get_benchmark(benchmark_id)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.input_dim:
        raise DimensionMismatch(f"{benchmark_id} takes {spec.input_dim} inputs, got {X.shape[1]}")
    values = _FUNCTIONS[benchmark_id](X)
    bad = ~np.isfinite(values)
    if strict and np.any(bad):
        raise SingularPoint(f"{benchmark_id} is undefined at {X[np.argmax(bad)].tolist()}")
    return np.where(bad, np.nan, values)


def eval_benchmark(benchmark_id, x):
    """Benchmark value at a single point."""
    return float(evaluate_benchmark(benchmark_id, np.asarray(x, dtype=float)[None, :])[0])


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatch(f"{self.X.shape[0]} input rows but {self.y.shape[0]} responses")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise DataValidationError("dataset contains non-finite values")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def input_dim(self):
        return self.X.shape[1]


def make_dataset(spec, n, rng, noise_sd=None):
    """Uniform inputs, benchmark response plus Gaussian noise; singular rows are redrawn."""
    if n < 1:
        raise DomainError(f"dataset size must be >= 1, got {n}")
    noise_sd = spec.noise_sd if noise_sd is None else noise_sd
    X = rng.uniform(-1.0, 1.0, size=(n, spec.input_dim))
    values = evaluate_benchmark(spec.id, X, strict=False)
    bad = ~np.isfinite(values)
    while np.any(bad):
        X[bad] = rng.uniform(-1.0, 1.0, size=(int(bad.sum()), spec.input_dim))
        values[bad] = evaluate_benchmark(spec.id, X[bad], strict=False)
        bad = ~np.isfinite(values)
    y = values + noise_sd * rng.standard_normal(n)
    return Dataset(X, y, {"source": spec.id, "n": n, "noise_sd": noise_sd})


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def add(self, function, n_train, replicate, method, test_rmse, train_seconds):
        self.rows.append({"function": function, "n_train": int(n_train), "replicate": int(replicate),
                          "method": method, "test_rmse": float(test_rmse),
                          "train_seconds": float(train_seconds)})

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=RESULT_COLUMNS)

    def __len__(self):
        return len(self.rows)


def summarize_results(result):
    """Mean and standard deviation of test RMSE per (function, n_train, method)."""
    frame = result.to_frame() if isinstance(result, ExperimentResult) else result
    summary = (frame.groupby(["function", "n_train", "method"])["test_rmse"]
               .agg(["mean", "std", "count"]).reset_index())
    return summary.rename(columns={"mean": "mean_rmse", "std": "sd_rmse", "count": "replicates"})


def fit_wahkon(X, y, architecture, kernel, train_cfg, bo_cfg=None, lambda_last=None):
    """
    Full pipeline: lambda_lower rule, lambda_L (given, tuned, or the scale s), then profile training.

    Returns:
    --------
    (WahkonModel, TrainHistory, float)
        Model, history and the lambda_L used
    """
    scale = lambda_lower(X.shape[0], architecture)
    if lambda_last is None:
        if bo_cfg is not None:
            lambda_last = tune_last_lambda(X, y, architecture, kernel, train_cfg, bo_cfg).lambda_last
        else:
            lambda_last = scale
    penalties = PenaltyConfig(lambda_lower=scale, lambda_last=lambda_last)
    model, history = train_profile(X, y, architecture, kernel, penalties, train_cfg)
    return model, history, lambda_last


def _run_method(method, spec, train, test, kernel, train_cfg, bo_cfg):
    if method == "wahkon":
        model, _, _ = fit_wahkon(train.X, train.y, spec.architecture, kernel, train_cfg, bo_cfg)
        return predict(model, test.X)
    if method == "mlp":
        return train_mlp_baseline(train.X, train.y, spec.architecture, train_cfg).predict(test.X)
    if method == "mean":
        return fit_mean_baseline(train.y).predict(test.X)
    raise DomainError(f"unknown method '{method}', choose from {', '.join(METHOD_CODES)}")


def run_size_sweep(spec, sizes, replicates, methods, master_seed, train_cfg=None, bo_cfg=None,
                   kernel=None, test_size=TEST_SIZE, show_progress=False, tune_last=True):
    """
    Test RMSE over (size, replicate, method) cells.

    Every random stream is derived from ``master_seed`` and the cell
    coordinates, so results do not depend on execution order. A failing
    cell is logged and recorded with NaN test RMSE. Each Wahkon cell tunes
    lambda_L with ``bo_cfg`` (default ``BOConfig()``); ``tune_last=False``
    fixes lambda_L = s instead.
    """
    if not sizes:
        raise DomainError("the sweep needs at least one training size")
    for method in methods:
        if method not in METHOD_CODES:
            raise DomainError(f"unknown method '{method}', choose from {', '.join(METHOD_CODES)}")
    train_cfg = train_cfg or TrainConfig()
    kernel = kernel or KernelConfig()
    if tune_last and bo_cfg is None:
        bo_cfg = BOConfig()
    result = ExperimentResult()

    cells = [(r, n, m) for r in range(replicates) for n in sizes for m in methods]
    test_sets = {}
    for replicate, n_train, method in tqdm(cells, desc=f"sweep {spec.id}", disable=not show_progress):
        if replicate not in test_sets:
            test_sets[replicate] = make_dataset(spec, test_size, make_rng(derive_seed(master_seed, replicate, 0)))
        test = test_sets[replicate]
        train = make_dataset(spec, n_train, make_rng(derive_seed(master_seed, replicate, 1, n_train)))
        cell_seed = derive_seed(master_seed, replicate, 2, n_train, METHOD_CODES[method])
        cell_bo = None
        if tune_last:
            cell_bo = replace(bo_cfg, seed=derive_seed(cell_seed, 1))

        started = time.perf_counter()
        try:
            prediction = _run_method(method, spec, train, test, kernel, train_cfg.with_seed(cell_seed), cell_bo)
            score = rmse(prediction, test.y)
        except WahkonError as exc:
            logger.warning("Cell %s n=%d replicate=%d %s failed: %s", spec.id, n_train, replicate, method, exc)
            result.errors.append({"n_train": n_train, "replicate": replicate, "method": method, "error": str(exc)})
            score = float("nan")
        result.add(spec.id, n_train, replicate, method, score, time.perf_counter() - started)

    return result


@dataclass
class ObjectiveComparison:
    profile: object
    direct: object
    threshold: float
    profile_steps: int
    direct_steps: int

    @property
    def step_ratio(self):
        """Steps to threshold, direct over profile (inf when direct never reaches it)."""
        if self.direct_steps is None:
            return float("inf")
        if self.profile_steps is None:
            return 0.0
        return (self.direct_steps + 1) / (self.profile_steps + 1)

    @property
    def oscillations(self):
        return {"profile": self.profile.oscillation_count(), "direct": self.direct.oscillation_count()}

    def to_frame(self):
        frames = []
        for name, history in (("profile", self.profile), ("direct", self.direct)):
            frame = history.to_frame()
            frame.insert(0, "objective", name)
            frames.append(frame[["objective", "step", "train_rmse", "valid_rmse", "test_rmse", "wall_ms"]])
        return pd.concat(frames, ignore_index=True)


def compare_objectives(spec, n, train_cfg, seed, kernel=None, test_size=TEST_SIZE):
    """
    Train profile and direct objectives with identical data, seeds and penalties.

    Both use lambda_lower = lambda_L = s. The threshold is 1.1 times the
    smaller of the two final test RMSEs.
    """
    if n < MIN_COMPARE_ROWS:
        raise InsufficientData(f"objective comparison needs at least {MIN_COMPARE_ROWS} rows, got {n}")
    kernel = kernel or KernelConfig()
    train = make_dataset(spec, n, make_rng(derive_seed(seed, 0)))
    test = make_dataset(spec, test_size, make_rng(derive_seed(seed, 1)))
    architecture = spec.architecture
    scale = lambda_lower(n, architecture)
    penalties = PenaltyConfig(lambda_lower=scale, lambda_last=scale)
    cfg = train_cfg.with_seed(derive_seed(seed, 2))

    _, profile = train_profile(train.X, train.y, architecture, kernel, penalties, cfg, monitor=(test.X, test.y))
    _, direct = train_direct(train.X, train.y, architecture, kernel, penalties, cfg, monitor=(test.X, test.y))

    finals = [h.test_rmse[-1] for h in (profile, direct) if h.test_rmse]
    threshold = THRESHOLD_FACTOR * min(finals) if finals else float("nan")
    comparison = ObjectiveComparison(profile=profile, direct=direct, threshold=threshold,
                                     profile_steps=profile.steps_to_threshold(threshold),
                                     direct_steps=direct.steps_to_threshold(threshold))
    logger.info("Steps to threshold %.4f: profile %s, direct %s", threshold,
                comparison.profile_steps, comparison.direct_steps)
    return comparison
