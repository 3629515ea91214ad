#!/usr/bin/env python3
"""
Configuration management for Wahkon training, tuning and experiments.

This module centralizes every optimizer, network, penalty-search, benchmark
and prior-study parameter so that runs can switch between presets or
override single keys without touching the numerical code.

Precedence: preset defaults < JSON config file < ``--set key=value`` < ``--seed``.
"""

import json
import logging

import numpy as np

from .errors import ConfigError, WahkonError
from .hyperopt import BOConfig
from .kernel import PRIOR_LENGTHSCALE, KernelConfig
from .network import Architecture
from .prior import PriorConfig
from .trainer import TrainConfig

logger = logging.getLogger(__name__)

PRESETS = ("default", "desk", "prior_study", "cite_seq")

# Value kinds used to coerce command-line strings; "?" marks keys that may be null
KEY_KINDS = {
    "learning_rate": "float", "batch_size": "int", "max_steps": "int", "patience": "int",
    "min_improvement": "float", "validation_fraction": "float", "adam_beta1": "float",
    "adam_beta2": "float", "adam_epsilon": "float",
    "widths": "ints?", "grid_size": "int", "lengthscale": "float", "tau_init": "float",
    "grid_expand": "float",
    "lambda_last": "float?", "tune_last": "bool",
    "bo_initial_random": "int", "bo_iters": "int", "bo_range_low": "float", "bo_range_high": "float",
    "bo_folds": "int", "bo_candidates": "int", "bo_noise": "float",
    "benchmark": "str", "sizes": "ints", "replicates": "int", "methods": "strs", "noise_sd": "float",
    "test_size": "int", "sweep_tune": "bool", "compare_benchmark": "str", "compare_n": "int",
    "prior_widths": "ints", "prior_lengthscale": "float", "prior_tau": "float", "prior_taus": "floats?",
    "prior_points": "int", "prior_draws": "int", "prior_shrinkage": "float", "prior_design_seed": "int",
    "seed": "int", "show_progress": "bool",
}

KEY_HELP = {
    "learning_rate": "Adam step size",
    "batch_size": "mini-batch size B (ridge and penalty scale within a batch)",
    "max_steps": "maximum gradient steps",
    "patience": "early-stopping patience in steps",
    "min_improvement": "validation RMSE improvement that resets patience",
    "validation_fraction": "held-out share of the training rows",
    "adam_beta1": "Adam first-moment decay",
    "adam_beta2": "Adam second-moment decay",
    "adam_epsilon": "Adam denominator offset",
    "widths": "layer widths D0,...,DL (null: D,D,D,1 from the data)",
    "grid_size": "inducing points G per layer",
    "lengthscale": "Gaussian kernel lengthscale of the links",
    "tau_init": "initial coefficient variance scale",
    "grid_expand": "relative widening of each inducing-grid span",
    "lambda_last": "fixed last-layer penalty (null: tuned or the lower-layer scale)",
    "tune_last": "tune the last-layer penalty by Bayesian optimization when training",
    "bo_initial_random": "random evaluations before Bayesian optimization",
    "bo_iters": "Bayesian-optimization evaluations",
    "bo_range_low": "lower end of the penalty range, in units of the lower-layer scale",
    "bo_range_high": "upper end of the penalty range, in units of the lower-layer scale",
    "bo_folds": "cross-validation folds per evaluation",
    "bo_candidates": "log-spaced candidates scored by Expected Improvement",
    "bo_noise": "surrogate noise variance (standardized units)",
    "benchmark": "benchmark function for sweeps (f1..f4)",
    "sizes": "training sizes of the sweep",
    "replicates": "replicate samples per size",
    "methods": "methods in the sweep (wahkon, mlp, mean)",
    "noise_sd": "response noise standard deviation",
    "test_size": "test rows per replicate",
    "sweep_tune": "tune the last-layer penalty inside sweep cells",
    "compare_benchmark": "benchmark of the objective comparison",
    "compare_n": "training size of the objective comparison",
    "prior_widths": "layer widths of the prior study",
    "prior_lengthscale": "kernel lengthscale of the prior study",
    "prior_tau": "variance-preserving scale tau (tau_l = tau / D_(l-1))",
    "prior_taus": "explicit per-layer tau values (overrides prior_tau)",
    "prior_points": "evaluation points of the prior design",
    "prior_draws": "Monte Carlo draws",
    "prior_shrinkage": "diagonal shrinkage of the Mahalanobis reference covariance",
    "prior_design_seed": "seed freezing the uniform columns of the prior design",
    "seed": "master seed",
    "show_progress": "show progress bars",
}


class WahkonConfig:
    """
    Configuration class for Wahkon runs.

    Provides centralized parameter management for the published-default
    setting, desk-scale replications, the prior study and tabular
    regression on external data.
    """

    def __init__(self, config_name: str = "default"):
        """
        Initialize configuration with specified parameter set.

        Parameters:
        -----------
        config_name : str
            Preset identifier ('default', 'desk', 'prior_study', 'cite_seq')
        """
        self.config_name = config_name
        self._load_configuration(config_name)

    def _load_configuration(self, config_name: str):
        """Load the specified configuration parameters."""
        if config_name == "default":
            self._load_default_config()
        elif config_name == "desk":
            self._load_desk_config()
        elif config_name == "prior_study":
            self._load_prior_study_config()
        elif config_name == "cite_seq":
            self._load_cite_seq_config()
        else:
            raise ConfigError(f"Unknown configuration: {config_name} (choose from {', '.join(PRESETS)})")

    def _load_default_config(self):
        """Reference values for every parameter."""

        # === OPTIMIZER ===
        self.learning_rate = 0.005
        self.batch_size = 200
        self.max_steps = 500
        self.patience = 50
        self.min_improvement = 1e-5
        self.validation_fraction = 0.2
        self.adam_beta1 = 0.9
        self.adam_beta2 = 0.999
        self.adam_epsilon = 1e-8

        # === NETWORK ===
        self.widths = None
        self.grid_size = 9
        self.lengthscale = 0.5
        self.tau_init = 0.1
        self.grid_expand = 0.1

        # === PENALTIES ===
        self.lambda_last = None
        self.tune_last = False

        # === LAST-LAYER PENALTY SEARCH ===
        # 5 random + 10 BO evaluations over [0.01 s, 3 s]
        self.bo_initial_random = 5
        self.bo_iters = 10
        self.bo_range_low = 0.01
        self.bo_range_high = 3.0
        self.bo_folds = 5
        self.bo_candidates = 256
        self.bo_noise = 1e-4

        # === BENCHMARKS ===
        self.benchmark = "f3"
        self.sizes = (100, 200, 400, 800, 1600, 3200)
        self.replicates = 100
        self.methods = ("wahkon", "mlp")
        self.noise_sd = 0.1
        self.test_size = 1000
        self.sweep_tune = True
        self.compare_benchmark = "f1"
        self.compare_n = 400

        # === PRIOR STUDY ===
        self.prior_widths = (4, 4, 4, 4, 4, 4)
        self.prior_lengthscale = float(PRIOR_LENGTHSCALE)
        self.prior_tau = 1.0
        self.prior_taus = None
        self.prior_points = 100
        self.prior_draws = 1000
        self.prior_shrinkage = 0.0
        self.prior_design_seed = 0

        # === RUN ===
        self.seed = 0
        self.show_progress = False

    def _load_desk_config(self):
        """Desk-scale replication: few replicates and three sizes."""
        self._load_default_config()
        self.replicates = 5
        self.sizes = (100, 800, 1600)
        self.methods = ("wahkon", "mlp", "mean")

    def _load_prior_study_config(self):
        """Moment checks at 10^4 draws on the depth-5, width-4 prior."""
        self._load_default_config()
        self.prior_draws = 10000
        self.show_progress = True

    def _load_cite_seq_config(self):
        """Tabular regression of one response on 30 principal components."""
        self._load_default_config()
        self.widths = (30, 15, 15, 15, 1)
        self.tune_last = True

    # === OVERRIDES ===

    def apply_overrides(self, overrides):
        """
        Apply {key: value} overrides; string values are coerced to the key's kind.

        Raises ConfigError for unknown keys, uncoercible values or values
        violating a type invariant.
        """
        previous = self.get_summary()
        try:
            for key, value in overrides.items():
                if key not in KEY_KINDS:
                    raise ConfigError(f"unknown configuration key '{key}'")
                setattr(self, key, _coerce(key, value))
            self.validate()
        except ConfigError:
            for key, value in previous.items():
                setattr(self, key, value)
            raise
        return self

    def load_file(self, path):
        """Apply overrides from a JSON object file."""
        try:
            with open(path, "r") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"configuration file {path} must hold a JSON object")
        return self.apply_overrides(data)

    def validate(self):
        """Build every typed configuration once; any invariant violation becomes ConfigError."""
        try:
            self.train_config()
            self.bo_config()
            self.prior_config()
            self.kernel_config()
            if self.widths is not None:
                Architecture(self.widths).require_scalar_output()
        except ConfigError:
            raise
        except WahkonError as exc:
            raise ConfigError(str(exc)) from exc
        for method in self.methods:
            if method not in ("wahkon", "mlp", "mean"):
                raise ConfigError(f"unknown method '{method}'")
        if self.replicates < 1 or self.test_size < 1 or not self.sizes:
            raise ConfigError("replicates, test_size and sizes must be positive and nonempty")
        if not self.noise_sd >= 0:
            raise ConfigError(f"noise_sd must be nonnegative, got {self.noise_sd}")
        if self.lambda_last is not None and not self.lambda_last > 0:
            raise ConfigError(f"lambda_last must be positive, got {self.lambda_last}")
        return self

    # === BUILDERS ===

    def train_config(self, seed=None):
        return TrainConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size, max_steps=self.max_steps,
            patience=self.patience, min_improvement=self.min_improvement,
            validation_fraction=self.validation_fraction, adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2, adam_epsilon=self.adam_epsilon,
            seed=self.seed if seed is None else seed, show_progress=self.show_progress, **self.grid_spec())

    def bo_config(self, seed=None):
        return BOConfig(
            initial_random=self.bo_initial_random, bo_iters=self.bo_iters,
            range_factors=(self.bo_range_low, self.bo_range_high), folds=self.bo_folds,
            candidate_grid_size=self.bo_candidates, noise_variance=self.bo_noise,
            seed=self.seed if seed is None else seed, show_progress=self.show_progress)

    def prior_config(self):
        return PriorConfig(
            architecture=Architecture(self.prior_widths), lengthscale=self.prior_lengthscale,
            taus=None if self.prior_taus is None else tuple(self.prior_taus), tau=self.prior_tau,
            n_points=self.prior_points, n_draws=self.prior_draws, seed=self.seed,
            design_seed=self.prior_design_seed, show_progress=self.show_progress)

    def kernel_config(self):
        return KernelConfig(self.lengthscale)

    def grid_spec(self):
        """Inducing-grid parameters."""
        return {
            "grid_size": self.grid_size,
            "tau_init": self.tau_init,
            "grid_expand": self.grid_expand,
        }

    def architecture_for(self, input_dim):
        """Configured widths, or (D, D, D, 1) for ``input_dim`` = D."""
        if self.widths is not None:
            return Architecture(self.widths)
        return Architecture((input_dim, input_dim, input_dim, 1))

    # === REPORTING ===

    def get_summary(self):
        """Resolved value of every key."""
        return {key: getattr(self, key) for key in KEY_KINDS}

    def describe(self):
        """(key, default, help) for every key, defaults from the default preset."""
        defaults = WahkonConfig("default").get_summary()
        return [(key, defaults[key], KEY_HELP[key]) for key in KEY_KINDS]


def _parse_bool(key, text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got '{text}'")


def _split_list(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return list(value)


def _coerce(key, value):
    kind = KEY_KINDS[key]
    optional = kind.endswith("?")
    kind = kind.rstrip("?")
    if value is None or (isinstance(value, str) and value.strip().lower() in ("null", "none")):
        if optional:
            return None
        raise ConfigError(f"{key} cannot be null")
    try:
        if kind == "float":
            result = float(value)
            if not np.isfinite(result):
                raise ValueError("not finite")
            return result
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if kind == "bool":
            return value if isinstance(value, bool) else _parse_bool(key, value)
        if kind == "str":
            return str(value)
        if kind == "ints":
            return tuple(int(v) for v in _split_list(value))
        if kind == "floats":
            return tuple(float(v) for v in _split_list(value))
        if kind == "strs":
            return tuple(str(v) for v in _split_list(value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot interpret '{value}' as {kind}") from exc
    raise ConfigError(f"{key}: unsupported kind {kind}")


def parse_assignment(text):
    """Split 'key=value'."""
    if "=" not in text:
        raise ConfigError(f"expected key=value, got '{text}'")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


# Global configuration instance
CONFIG = WahkonConfig("default")


def set_configuration(config_name: str, verbose: bool = True):
    """
    Switch to a different configuration.

    Parameters:
    -----------
    config_name : str
        Preset to switch to ('default', 'desk', 'prior_study', 'cite_seq')
    """
    global CONFIG
    CONFIG = WahkonConfig(config_name)
    if verbose:
        print(f"Switched to configuration: {config_name}")
        print("Configuration summary:")
        for key, value in CONFIG.get_summary().items():
            print(f"  {key}: {value}")
    return CONFIG


def get_config():
    """
    Get the current configuration instance.

    Returns:
    --------
    WahkonConfig
        Current configuration object
    """
    return CONFIG
