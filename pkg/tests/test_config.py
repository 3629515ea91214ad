"""Tests for presets, overrides and the typed configuration builders."""

import json

import pytest

from wahkon.config import (KEY_HELP, KEY_KINDS, WahkonConfig, get_config, parse_assignment,
                           set_configuration)
from wahkon.errors import ConfigError


class TestPresets:

    def test_default_values(self):
        config = WahkonConfig()
        assert (config.learning_rate, config.batch_size, config.max_steps, config.patience) == (0.005, 200, 500, 50)
        assert config.grid_size == 9
        assert config.lengthscale == 0.5
        assert (config.bo_initial_random, config.bo_iters) == (5, 10)
        assert (config.bo_range_low, config.bo_range_high) == (0.01, 3.0)
        assert config.widths is None and config.lambda_last is None
        assert config.prior_shrinkage == 0.0

    def test_desk(self):
        config = WahkonConfig("desk")
        assert config.replicates == 5
        assert config.sizes == (100, 800, 1600)
        assert config.sweep_tune is True
        assert config.learning_rate == 0.005

    def test_prior_study(self):
        config = WahkonConfig("prior_study")
        assert config.prior_draws == 10000
        assert config.prior_widths == (4, 4, 4, 4, 4, 4)

    def test_cite_seq(self):
        config = WahkonConfig("cite_seq")
        assert config.widths == (30, 15, 15, 15, 1)
        assert config.tune_last is True

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            WahkonConfig("nightly")

    def test_global_switch(self, capsys):
        set_configuration("desk", verbose=False)
        assert get_config().config_name == "desk"
        set_configuration("default", verbose=True)
        assert "Switched to configuration: default" in capsys.readouterr().out
        assert get_config().config_name == "default"


class TestOverrides:

    def test_string_coercion(self):
        config = WahkonConfig().apply_overrides({
            "batch_size": "64", "learning_rate": "0.01", "sizes": "100, 400", "tune_last": "yes",
            "methods": "wahkon,mean", "widths": "3,6,6,1", "lambda_last": "0.2", "prior_taus": "0.5,0.5,0.5,0.5,0.5",
        })
        assert config.batch_size == 64
        assert config.learning_rate == 0.01
        assert config.sizes == (100, 400)
        assert config.tune_last is True
        assert config.methods == ("wahkon", "mean")
        assert config.widths == (3, 6, 6, 1)
        assert config.lambda_last == 0.2
        assert config.prior_taus == (0.5,) * 5

    def test_null_for_optional_keys(self):
        config = WahkonConfig("cite_seq").apply_overrides({"widths": "null"})
        assert config.widths is None
        with pytest.raises(ConfigError):
            WahkonConfig().apply_overrides({"batch_size": "none"})

    @pytest.mark.parametrize("overrides", [
        {"no_such_key": "1"},
        {"batch_size": "zero"},
        {"batch_size": "0"},
        {"learning_rate": "-1"},
        {"learning_rate": "nan"},
        {"widths": "3,4"},
        {"tune_last": "maybe"},
        {"methods": "wahkon,forest"},
        {"bo_range_low": "5"},
        {"validation_fraction": "1.5"},
        {"lambda_last": "0"},
        {"max_steps": 2.5},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            WahkonConfig().apply_overrides(overrides)

    def test_failed_override_restores_previous_values(self):
        config = WahkonConfig()
        with pytest.raises(ConfigError):
            config.apply_overrides({"batch_size": "16", "learning_rate": "-1"})
        assert config.batch_size == 200
        assert config.learning_rate == 0.005

    def test_load_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"max_steps": 20, "sizes": [100, 200], "tune_last": True}))
        config = WahkonConfig().load_file(path)
        assert config.max_steps == 20
        assert config.sizes == (100, 200)
        assert config.tune_last is True

    def test_load_file_errors(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            WahkonConfig().load_file(path)
        with pytest.raises(ConfigError):
            WahkonConfig().load_file(tmp_path / "missing.json")

    def test_parse_assignment(self):
        assert parse_assignment("sizes = 100,200") == ("sizes", "100,200")
        assert parse_assignment("lambda_last=1e-3") == ("lambda_last", "1e-3")
        with pytest.raises(ConfigError):
            parse_assignment("sizes")


class TestBuilders:

    def test_train_config(self):
        config = WahkonConfig().apply_overrides({"seed": "9", "grid_size": "11"})
        cfg = config.train_config()
        assert cfg.seed == 9
        assert cfg.grid_size == 11
        assert config.train_config(seed=4).seed == 4

    def test_bo_config(self):
        bo = WahkonConfig().bo_config()
        assert bo.range_factors == (0.01, 3.0)
        assert bo.total_evals == 15
        assert bo.folds == 5

    def test_prior_config(self):
        prior = WahkonConfig().apply_overrides({"prior_widths": "2,3,3", "prior_draws": "50"}).prior_config()
        assert prior.architecture.widths == (2, 3, 3)
        assert prior.n_draws == 50
        assert prior.resolved_taus() == (0.5, pytest.approx(1 / 3))

    def test_kernel_and_grid(self):
        config = WahkonConfig()
        assert config.kernel_config().lengthscale == 0.5
        assert config.grid_spec()["grid_size"] == 9
        assert config.train_config().tau_init == config.grid_spec()["tau_init"]

    def test_architecture_for(self):
        assert WahkonConfig().architecture_for(5).widths == (5, 5, 5, 1)
        assert WahkonConfig("cite_seq").architecture_for(30).widths == (30, 15, 15, 15, 1)


class TestReporting:

    def test_describe_covers_every_key(self):
        described = WahkonConfig("desk").describe()
        assert [key for key, _, _ in described] == list(KEY_KINDS)
        assert set(KEY_HELP) == set(KEY_KINDS)
        defaults = dict((key, default) for key, default, _ in described)
        assert defaults["replicates"] == 100

    def test_summary_is_complete(self):
        assert set(WahkonConfig().get_summary()) == set(KEY_KINDS)
