"""
Tests for configuration loading, overrides, logging setup and the parallel sum.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.utils.config import Config, get_config, set_config
from src.utils.logger import get_logger, parse_size, setup_logging
from src.utils.parallel import parallel_sum


class TestConfig:
    """Test the pydantic configuration model."""

    def test_defaults(self):
        config = Config()
        assert config.integration.method == "moment"
        assert config.metric.octahedron_level == 9
        assert config.metric.n_heights == 100
        assert config.alignment.step_schedule == [(30, 1.0), (50, 0.1), (None, 0.01)]
        assert config.tolerances.height_tie == 1e-12

    def test_example_file_matches_defaults(self, project_root_path):
        config = Config.load_from_file(str(project_root_path / "config" / "config.example.yaml"))
        defaults = Config()
        assert config.tolerances == defaults.tolerances
        assert config.metric == defaults.metric
        assert config.alignment == defaults.alignment

    def test_save_and_load(self, tmp_path):
        config = Config().with_overrides({"metric": {"n_heights": 40}, "run": {"seed": 7}})
        path = tmp_path / "saved" / "config.yaml"
        config.save_to_file(str(path))
        loaded = Config.load_from_file(str(path))
        assert loaded.metric.n_heights == 40
        assert loaded.run.seed == 7
        assert loaded.alignment.step_schedule == config.alignment.step_schedule

    def test_overrides_skip_none(self):
        config = Config().with_overrides({"run": {"seed": None}, "logging": {"level": "DEBUG"}})
        assert config.run.seed == 0
        assert config.logging.level == "DEBUG"

    def test_unknown_section(self):
        with pytest.raises(ValueError):
            Config().with_overrides({"database": {"host": "localhost"}})

    @pytest.mark.parametrize(
        "section, fields",
        [
            ("tolerances", {"height_tie": 0.0}),
            ("run", {"seed": -1}),
            ("integration", {"method": "simpson"}),
            ("alignment", {"step_schedule": [[30, 1.0]]}),
            ("alignment", {"step_schedule": [[None, -0.1]]}),
        ],
    )
    def test_validation(self, section, fields):
        with pytest.raises(ValidationError):
            Config(**{section: fields})

    def test_global_instance(self, default_config):
        assert get_config() is default_config
        replacement = default_config.with_overrides({"metric": {"n_heights": 12}})
        set_config(replacement)
        assert get_config().metric.n_heights == 12


class TestLogging:
    def test_parse_size(self):
        assert parse_size("20MB") == 20 * 1024 * 1024
        assert parse_size("1gb") == 1024**3
        assert parse_size("512") == 512

    def test_setup_writes_log_file(self, tmp_path):
        log_file = tmp_path / "logs" / "ect.log"
        config = Config().with_overrides(
            {"logging": {"file": str(log_file), "level": "INFO", "format": "json"}}
        )
        setup_logging(config)
        get_logger("tests").info("Configured", section="logging")
        assert log_file.exists()


class TestParallelSum:
    """Test the reduction helper behind inner products and gradients."""

    @pytest.mark.parametrize("jobs", [1, 2])
    @pytest.mark.parametrize("deterministic", [True, False])
    def test_sums_stacked_results(self, jobs, deterministic):
        items = [np.array([[1.0, 2.0, 3.0]]), np.array([[0.5, 0.5, 0.5], [1.0, 0.0, -1.0]])]
        total = parallel_sum(np.atleast_2d, items, jobs, deterministic)
        np.testing.assert_allclose(total, [2.5, 2.5, 2.5])

    def test_deterministic_sum_ignores_worker_count(self):
        rng = np.random.default_rng(0)
        items = [rng.normal(size=50) * 10.0**k for k in range(-8, 8)]
        assert parallel_sum(np.atleast_1d, items, 1, True) == parallel_sum(
            np.atleast_1d, items, 2, True
        )

    def test_flag_defaults_to_config(self, default_config):
        set_config(default_config.with_overrides({"performance": {"deterministic": False}}))
        assert parallel_sum(np.atleast_1d, [np.ones(2), np.ones(3)], jobs=2) == 5.0

    def test_needs_items(self):
        with pytest.raises(ValueError):
            parallel_sum(np.atleast_1d, [])
