"""Pydantic schemas for experiment configuration."""
import logging
import os
import re
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from dotenv import dotenv_values
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from gapscope.core.exceptions import ConfigError
from gapscope.schemas.instance import SpecFamily, WeightKind, WeightProfile
from gapscope.utils.helpers import parse_grid, parse_window

logger = logging.getLogger(__name__)

DEFAULT_K_GRID = "100:1.5:13"


class Experiment(str, Enum):
    """Experiment enumeration."""
    SPECTRUM = "spectrum"
    GAP_SCALING = "gap_scaling"
    FIT_EXPONENT = "fit_exponent"
    GROUND_STATE = "ground_state"
    VERIFY = "verify"


class OutputFormat(str, Enum):
    """Result table format enumeration."""
    CSV = "csv"
    JSON = "json"


def _snake_case(value: str) -> str:
    # "GapScaling" -> "gap_scaling", "gap-scaling" -> "gap_scaling"
    value = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "_", value.strip())
    return value.replace("-", "_").lower()


class ExperimentConfig(BaseModel):
    """One experiment run: instance family, size grid, tolerance and outputs."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: Experiment = Experiment.SPECTRUM
    k: Optional[int] = Field(None, ge=1, description="Single half-length")
    k_grid: Optional[List[int]] = Field(None, description="k0:ratio:count or comma list")
    u: float = Field(0.0, ge=0, allow_inf_nan=False, description="Potential at the zero vertex")
    weights: WeightKind = WeightKind.UNIT
    C: float = Field(1.0, gt=0, allow_inf_nan=False)
    mu: float = Field(2.0, gt=1, allow_inf_nan=False)
    weights_file: Optional[str] = Field(
        None, validate_default=True, description="Explicit half-weights, one or more per line"
    )
    tol: Optional[float] = Field(None, gt=0, allow_inf_nan=False, description="Tolerance relative to max row sum")
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV
    plot: Optional[str] = Field(None, description="SVG output path")
    fit_window: Optional[Tuple[int, int]] = Field(None, description="Nmin:Nmax")

    @field_validator("experiment", mode="before")
    @classmethod
    def _normalize_experiment(cls, value):
        if isinstance(value, str):
            return _snake_case(value)
        return value

    @field_validator("weights", "format", mode="before")
    @classmethod
    def _lowercase(cls, value):
        if isinstance(value, str):
            return value.strip().lower()
        return value

    @field_validator("k_grid", mode="before")
    @classmethod
    def _parse_grid(cls, value):
        if isinstance(value, str):
            return parse_grid(value)
        return value

    @field_validator("k_grid")
    @classmethod
    def _grid_increasing(cls, value):
        if value is None:
            return value
        if not value or any(k < 1 for k in value):
            raise ValueError("grid needs at least one k and every k must be >= 1")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"grid must be strictly increasing, got {value}")
        return value

    @field_validator("fit_window", mode="before")
    @classmethod
    def _parse_window(cls, value):
        if isinstance(value, str):
            return parse_window(value)
        return value

    @model_validator(mode="before")
    @classmethod
    def _file_implies_explicit(cls, data: Any):
        if isinstance(data, dict) and data.get("weights_file") and not data.get("weights"):
            return {**data, "weights": WeightKind.EXPLICIT.value}
        return data

    @field_validator("weights_file")
    @classmethod
    def _explicit_needs_file(cls, value, info: ValidationInfo):
        if info.data.get("weights") == WeightKind.EXPLICIT and not value:
            raise ValueError("explicit weights require weights_file")
        return value

    def weight_profile(self) -> WeightProfile:
        """Weight profile described by this configuration.

        Raises:
            ConfigError: If the weights file cannot be read
        """
        if self.weights == WeightKind.UNIT:
            return WeightProfile.unit()
        if self.weights == WeightKind.POWER_LAW:
            return WeightProfile.power_law(self.C, self.mu)
        try:
            values = np.loadtxt(self.weights_file, comments="#", ndmin=1).ravel()
        except (OSError, ValueError) as exc:
            raise ConfigError(f"weights_file: cannot read '{self.weights_file}': {exc}") from exc
        return WeightProfile.explicit(values)

    def family(self) -> SpecFamily:
        return SpecFamily(weights=self.weight_profile(), u=self.u)

    def grid(self) -> List[int]:
        """Half-lengths to run: k_grid, else k, else the explicit list length, else the default grid."""
        if self.k_grid is not None:
            return list(self.k_grid)
        if self.k is not None:
            return [self.k]
        native = self.weight_profile().native_k()
        if native is not None:
            return [native]
        return parse_grid(DEFAULT_K_GRID)


def _error_key(error: ValidationError) -> str:
    for detail in error.errors():
        if detail.get("loc"):
            return str(detail["loc"][0])
    return "config"


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Build an experiment configuration from a key=value file and flag overrides.

    The file holds flat ``key=value`` lines with ``#`` comments. Overrides
    (command-line flags) win over file values.

    Args:
        path: Config file, or None
        overrides: Values from the command line; None entries are ignored

    Returns:
        Validated configuration

    Raises:
        ConfigError: For a missing file, an unknown key or an invalid value; the message names the key
    """
    data: Dict[str, Any] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file '{path}' does not exist")
        for key, value in dotenv_values(path).items():
            if value is None:
                raise ConfigError(f"{key}: expected key=value")
            data[key.strip()] = value
        logger.info(f"Loaded {len(data)} config keys from {path}")

    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    unknown = sorted(set(data) - set(ExperimentConfig.model_fields))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown config key")

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        key = _error_key(exc)
        message = exc.errors()[0].get("msg", str(exc))
        raise ConfigError(f"{key}: {message}") from exc
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from exc
