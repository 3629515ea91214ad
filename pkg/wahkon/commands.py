#!/usr/bin/env python3
"""
Command implementations behind ``main.py``.

Every command writes into a fresh run directory ``<out>/<command>-seed<seed>``
(suffixed -2, -3, ... when taken) holding a ``manifest.json`` with the
resolved configuration, the library version and the inputs.
"""

import json
import logging
from dataclasses import replace
from pathlib import Path

import pandas as pd

from . import __version__
from .benchmarks import compare_objectives, fit_wahkon, get_benchmark, run_size_sweep, summarize_results
from .data_processor import load_dataset, load_features, write_frame
from .hyperopt import lambda_lower, tune_last_lambda
from .persistence import load_model, save_model
from .prior import layer_moment_check, mahalanobis_diagnostics, moments_frame, sample_prior, MIN_MOMENT_DRAWS
from .trainer import predict

logger = logging.getLogger(__name__)


def make_run_dir(out_dir, command, seed):
    """Create ``<out>/<command>-seed<seed>``, never reusing an existing directory."""
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    name = f"{command}-seed{seed}"
    candidate = base / name
    suffix = 2
    while candidate.exists():
        candidate = base / f"{name}-{suffix}"
        suffix += 1
    candidate.mkdir()
    return candidate


def write_manifest(run_dir, command, config, inputs=None, outputs=None):
    manifest = {
        "command": command,
        "library_version": __version__,
        "config_name": config.config_name,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in config.get_summary().items()},
        "inputs": inputs or {},
        "outputs": outputs or [],
    }
    with open(Path(run_dir) / "manifest.json", "w") as handle:
        json.dump(manifest, handle, sort_keys=True, indent=1)
        handle.write("\n")


def _last_lambda(config, dataset, architecture):
    """Configured lambda_L, a tuned one, or the lower-layer scale; returns (value, tuning)."""
    if config.lambda_last is not None:
        return config.lambda_last, None
    if config.tune_last:
        tuning = tune_last_lambda(dataset.X, dataset.y, architecture, config.kernel_config(),
                                  config.train_config(), config.bo_config())
        return tuning.lambda_last, tuning
    return lambda_lower(dataset.n, architecture), None


def cmd_train(config, data_path, out_dir):
    """Train on a dataset CSV; writes model.json and history.csv (plus tuning.csv when tuned)."""
    dataset = load_dataset(data_path)
    architecture = config.architecture_for(dataset.input_dim)
    kernel = config.kernel_config()
    lambda_last, tuning = _last_lambda(config, dataset, architecture)

    model, history, lambda_last = fit_wahkon(dataset.X, dataset.y, architecture, kernel,
                                             config.train_config(), lambda_last=lambda_last)
    model.metadata.update(n_train=dataset.n, lambda_last_source=(
        "config" if config.lambda_last is not None else "tuned" if tuning else "scale"))

    run_dir = make_run_dir(out_dir, "train", config.seed)
    outputs = ["model.json", "history.csv"]
    save_model(model, run_dir / "model.json")
    write_frame(history.to_frame(), run_dir / "history.csv")
    if tuning is not None:
        write_frame(tuning.to_frame(), run_dir / "tuning.csv")
        outputs.append("tuning.csv")
    write_manifest(run_dir, "train", config, {"data": str(data_path)}, outputs)

    print(f"Architecture: {architecture}")
    print(f"lambda_lower: {model.lambda_lower:.6g}  lambda_L: {lambda_last:.6g}")
    print(f"Steps run: {len(history)}  best step: {history.best_step}  early stop: {history.stopped_early}")
    return run_dir


def cmd_predict(config, model_path, data_path, out_dir):
    """Predict every row of a CSV; writes predictions.csv with column yhat."""
    model = load_model(model_path)
    X = load_features(data_path, model.architecture.input_dim)
    yhat = predict(model, X)

    run_dir = make_run_dir(out_dir, "predict", config.seed)
    write_frame(pd.DataFrame({"yhat": yhat}), run_dir / "predictions.csv")
    write_manifest(run_dir, "predict", config, {"model": str(model_path), "data": str(data_path)},
                   ["predictions.csv"])
    print(f"Predicted {len(yhat)} rows")
    return run_dir


def cmd_benchmark(config, out_dir):
    """Size sweep on the configured benchmark; writes results.csv and summary.csv."""
    spec = get_benchmark(config.benchmark)
    if config.noise_sd != spec.noise_sd:
        spec = replace(spec, noise_sd=config.noise_sd)
    result = run_size_sweep(spec, list(config.sizes), config.replicates, list(config.methods), config.seed,
                            train_cfg=config.train_config(),
                            bo_cfg=config.bo_config(), tune_last=config.sweep_tune,
                            kernel=config.kernel_config(), test_size=config.test_size,
                            show_progress=config.show_progress)

    run_dir = make_run_dir(out_dir, "benchmark", config.seed)
    write_frame(result.to_frame(), run_dir / "results.csv")
    write_frame(summarize_results(result), run_dir / "summary.csv")
    write_manifest(run_dir, "benchmark", config, {"benchmark": spec.id}, ["results.csv", "summary.csv"])
    if result.errors:
        print(f"{len(result.errors)} cell(s) failed; see the log")
    print(f"Recorded {len(result)} result rows")
    return run_dir


def cmd_compare(config, out_dir):
    """Profile versus direct objective; writes compare.csv and compare_summary.json."""
    spec = get_benchmark(config.compare_benchmark)
    comparison = compare_objectives(spec, config.compare_n, config.train_config(), config.seed,
                                    kernel=config.kernel_config(), test_size=config.test_size)

    run_dir = make_run_dir(out_dir, "compare", config.seed)
    write_frame(comparison.to_frame(), run_dir / "compare.csv")
    summary = {
        "threshold": comparison.threshold,
        "profile_steps": comparison.profile_steps,
        "direct_steps": comparison.direct_steps,
        "step_ratio": comparison.step_ratio,
        "oscillations": comparison.oscillations,
        "best_steps": {"profile": comparison.profile.best_step, "direct": comparison.direct.best_step},
    }
    with open(run_dir / "compare_summary.json", "w") as handle:
        json.dump(summary, handle, sort_keys=True, indent=1)
        handle.write("\n")
    write_manifest(run_dir, "compare", config, {"benchmark": spec.id, "n": config.compare_n},
                   ["compare.csv", "compare_summary.json"])
    print(f"Steps to threshold {comparison.threshold:.5f}: "
          f"profile {comparison.profile_steps}, direct {comparison.direct_steps}")
    return run_dir


def cmd_tune(config, data_path, out_dir):
    """Bayesian optimization of lambda_L; writes tuning.csv and tuning.json."""
    dataset = load_dataset(data_path)
    architecture = config.architecture_for(dataset.input_dim)
    tuning = tune_last_lambda(dataset.X, dataset.y, architecture, config.kernel_config(),
                              config.train_config(), config.bo_config())

    run_dir = make_run_dir(out_dir, "tune", config.seed)
    write_frame(tuning.to_frame(), run_dir / "tuning.csv")
    with open(run_dir / "tuning.json", "w") as handle:
        json.dump({"lambda_last": tuning.lambda_last, "cv_rmse": tuning.cv_rmse,
                   "lambda_lower": tuning.scale}, handle, sort_keys=True, indent=1)
        handle.write("\n")
    write_manifest(run_dir, "tune", config, {"data": str(data_path)}, ["tuning.csv", "tuning.json"])
    print(f"Selected lambda_L: {tuning.lambda_last:.6g} (CV RMSE {tuning.cv_rmse:.6g})")
    return run_dir


def cmd_prior(config, out_dir):
    """Prior diagnostics; writes prior_d2.csv, prior_qq.csv and prior_moments.csv."""
    prior_cfg = config.prior_config()
    draws = sample_prior(prior_cfg)

    records, pairs, lines = [], [], []
    for layer in range(1, prior_cfg.architecture.depth + 1):
        diagnostics = mahalanobis_diagnostics(draws, layer, shrinkage=config.prior_shrinkage)
        records.append(diagnostics.records_frame())
        pairs.append(diagnostics.qq_frame())
        lines.append(f"  layer {layer}: KS {diagnostics.ks_distance():.3f}  "
                     f"d2<50 {diagnostics.fraction_below():.3f}  d2>150 {diagnostics.fraction_above():.3f}")

    run_dir = make_run_dir(out_dir, "prior", config.seed)
    outputs = ["prior_d2.csv", "prior_qq.csv"]
    write_frame(pd.concat(records, ignore_index=True), run_dir / "prior_d2.csv")
    write_frame(pd.concat(pairs, ignore_index=True), run_dir / "prior_qq.csv")
    if draws.n_draws >= MIN_MOMENT_DRAWS:
        write_frame(moments_frame(layer_moment_check(draws, prior_cfg)), run_dir / "prior_moments.csv")
        outputs.append("prior_moments.csv")
    else:
        logger.warning("Skipping moment check: %d draws (need %d)", draws.n_draws, MIN_MOMENT_DRAWS)
    write_manifest(run_dir, "prior", config, {}, outputs)

    print("Mahalanobis diagnostics:")
    print("\n".join(lines))
    return run_dir
