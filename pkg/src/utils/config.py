"""
Configuration management for the digital ECT engine.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator


class ToleranceConfig(BaseModel):
    """Geometric and numeric tolerances shared by every module."""

    unit_norm: float = Field(1e-12, gt=0)
    antipodal: float = Field(1e-10, gt=0)
    on_circle: float = Field(1e-9, gt=0)
    circle_merge: float = Field(1e-10, gt=0)
    area_degenerate: float = Field(1e-14, gt=0)
    height_tie: float = Field(1e-12, gt=0)
    generic_boundary: float = Field(1e-10, gt=0)
    distance_clamp: float = Field(1e-9, gt=0)
    rotation_check: float = Field(1e-9, gt=0)


class IntegrationConfig(BaseModel):
    method: Literal["moment", "chart"] = "moment"
    chart_max_retries: int = Field(32, ge=1)
    chart_seed: int = Field(0, ge=0)
    pole_margin: float = Field(1e-8, gt=0)


class TransformConfig(BaseModel):
    merge_terms: bool = False
    planar_radius: float = Field(4.0, gt=0)


class MetricConfig(BaseModel):
    use_cap_prefilter: bool = True
    discrete_weighting: Literal["quadrature", "unweighted"] = "quadrature"
    octahedron_level: int = Field(9, ge=1)
    n_heights: int = Field(100, ge=2)
    mantel_permutations: int = Field(0, ge=0)


class AlignmentConfig(BaseModel):
    grid_iterations: int = Field(11, ge=1)
    grid_candidates: int = Field(16, ge=1)
    gradient_iterations: int = Field(70, ge=1)
    # (last iteration using the step, step); None closes the schedule
    step_schedule: List[Tuple[Optional[int], float]] = [
        (30, 1.0),
        (50, 0.1),
        (None, 0.01),
    ]
    gradient_tolerance: float = Field(1e-8, gt=0)
    fd_step: float = Field(1e-5, gt=0)
    fd_rel_tolerance: float = Field(1e-3, gt=0)
    validate_gradient: bool = True
    batch_size: Optional[int] = Field(None, ge=1)

    @field_validator("step_schedule")
    @classmethod
    def _check_schedule(cls, value):
        if not value:
            raise ValueError("step_schedule must not be empty")
        if value[-1][0] is not None:
            raise ValueError("last step_schedule entry must be open-ended (null)")
        if any(step <= 0 for _, step in value):
            raise ValueError("step sizes must be positive")
        return value


class PerformanceConfig(BaseModel):
    max_workers: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    deterministic: bool = True
    chunk_size: int = Field(64, ge=1)


class LoggingConfig(BaseModel):
    level: str = "INFO"
    format: Literal["json", "console"] = "console"
    file: Optional[str] = "logs/digital_ect.log"
    max_size: str = "20MB"
    backup_count: int = 3


class RunConfig(BaseModel):
    seed: int = Field(0, ge=0)
    output: Optional[str] = None


class Config(BaseModel):
    """Main configuration class for the digital ECT engine."""

    tolerances: ToleranceConfig = ToleranceConfig()
    integration: IntegrationConfig = IntegrationConfig()
    transform: TransformConfig = TransformConfig()
    metric: MetricConfig = MetricConfig()
    alignment: AlignmentConfig = AlignmentConfig()
    performance: PerformanceConfig = PerformanceConfig()
    logging: LoggingConfig = LoggingConfig()
    run: RunConfig = RunConfig()

    @classmethod
    def load_from_file(cls, config_path: Optional[str] = None) -> "Config":
        """Load configuration from YAML file."""
        load_dotenv()
        if config_path is None:
            config_path = os.getenv("CONFIG_PATH", "config/config.yaml")

        config_file = Path(config_path)

        if not config_file.exists():
            # Try to load from example config
            example_config = Path("config/config.example.yaml")
            if example_config.exists():
                config_file = example_config
            else:
                return cls()

        with open(config_file, "r", encoding="utf-8") as f:
            config_data = yaml.safe_load(f) or {}

        return cls(**config_data)

    def save_to_file(self, config_path: str = "config/config.yaml"):
        """Save configuration to YAML file."""
        config_file = Path(config_path)
        config_file.parent.mkdir(parents=True, exist_ok=True)

        with open(config_file, "w", encoding="utf-8") as f:
            yaml.safe_dump(
                self.model_dump(mode="json"), f, default_flow_style=False, indent=2
            )

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]) -> "Config":
        """Return a copy with per-section field overrides applied.

        ``overrides`` maps a section name to the fields to replace, e.g.
        ``{"performance": {"max_workers": 1}}``. ``None`` values are skipped so
        unset CLI flags leave the configured value alone.
        """
        data = self.model_dump()
        for section, fields in overrides.items():
            if section not in data:
                raise ValueError(f"Unknown config section: {section}")
            for key, value in fields.items():
                if value is not None:
                    data[section][key] = value
        return Config(**data)


# Global config instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get global configuration instance."""
    global _config
    if _config is None:
        _config = Config.load_from_file()
    return _config


def set_config(config: Optional[Config]):
    """Set global configuration instance (``None`` forces a reload)."""
    global _config
    _config = config
