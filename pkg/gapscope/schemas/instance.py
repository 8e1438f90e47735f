"""Pydantic schemas describing path-graph problem instances."""
import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class WeightKind(str, Enum):
    """Edge weight profile enumeration."""
    UNIT = "unit"
    POWER_LAW = "powerlaw"
    EXPLICIT = "explicit"


class WeightProfile(BaseModel):
    """Edge weights of the path graph, realized double-symmetric about vertex 0.

    PowerLaw realizes ``C / max(n, 1)**mu`` on the edge ``(n, n+1)`` for
    ``n >= 0`` and mirrors it onto ``(-n-1, -n)``. Explicit weights are given
    either for the edges ``(v, v+1)``, ``v = 0..k-1`` (mirrored), or as a full
    list of ``2k`` edges that must already be mirror-symmetric.
    """
    model_config = ConfigDict(frozen=True)

    kind: WeightKind = WeightKind.UNIT
    C: float = Field(1.0, gt=0, allow_inf_nan=False, description="Power-law prefactor")
    mu: float = Field(2.0, gt=1, allow_inf_nan=False, description="Power-law decay exponent")
    values: Optional[Tuple[float, ...]] = Field(None, description="Explicit edge weights")

    @field_validator("values")
    @classmethod
    def _positive_values(cls, values):
        if values is None:
            return values
        if len(values) == 0:
            raise ValueError("explicit weight list is empty")
        for index, weight in enumerate(values):
            if not math.isfinite(weight) or weight <= 0:
                raise ValueError(f"explicit weight #{index} must be positive and finite, got {weight}")
        return values

    @model_validator(mode="after")
    def _values_match_kind(self):
        if self.kind == WeightKind.EXPLICIT and self.values is None:
            raise ValueError("explicit weights require a list of values")
        if self.kind != WeightKind.EXPLICIT and self.values is not None:
            raise ValueError(f"{self.kind.value} weights do not take explicit values")
        return self

    @classmethod
    def unit(cls) -> "WeightProfile":
        return cls(kind=WeightKind.UNIT)

    @classmethod
    def power_law(cls, C: float = 1.0, mu: float = 2.0) -> "WeightProfile":
        return cls(kind=WeightKind.POWER_LAW, C=C, mu=mu)

    @classmethod
    def explicit(cls, values) -> "WeightProfile":
        return cls(kind=WeightKind.EXPLICIT, values=tuple(float(v) for v in values))

    @property
    def label(self) -> str:
        """Short human-readable name used in result tables."""
        if self.kind == WeightKind.POWER_LAW:
            return f"powerlaw(C={self.C:g};mu={self.mu:g})"
        return self.kind.value

    def native_k(self) -> Optional[int]:
        """Half-length implied by an explicit half list, if any."""
        if self.kind == WeightKind.EXPLICIT and self.values is not None:
            return len(self.values)
        return None

    def half_weights(self, k: int) -> np.ndarray:
        """Weights of the edges (n, n+1) for n = 0..k-1.

        Raises:
            ValueError: If explicit values do not fit ``k`` or are asymmetric
        """
        if self.kind == WeightKind.UNIT:
            return np.ones(k)
        if self.kind == WeightKind.POWER_LAW:
            n = np.maximum(np.arange(k, dtype=float), 1.0)
            return self.C / n ** self.mu

        values = np.asarray(self.values, dtype=float)
        if values.size == k:
            return values
        if values.size == 2 * k:
            if not np.array_equal(values, values[::-1]):
                raise ValueError(
                    "explicit full weight list is not symmetric about the zero vertex; "
                    "supply the k weights of the edges (v, v+1), v = 0..k-1 instead"
                )
            return values[k:]
        raise ValueError(
            f"explicit weight list has {values.size} entries, expected k={k} or 2k={2 * k}"
        )

    def realize(self, k: int) -> np.ndarray:
        """Weights of all 2k edges (v, v+1), v = -k..k-1, in vertex order."""
        half = self.half_weights(k)
        return np.concatenate([half[::-1], half])


class PathSpec(BaseModel):
    """A problem instance: path graph on -k..k, edge weights, center potential u."""
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1, description="Half-length; vertices are -k..k")
    weights: WeightProfile = Field(default_factory=WeightProfile.unit)
    u: float = Field(0.0, ge=0, allow_inf_nan=False, description="Potential strength at vertex 0")

    @model_validator(mode="after")
    def _weights_realizable(self):
        self.weights.half_weights(self.k)
        return self

    @property
    def N(self) -> int:
        """Number of vertices, 2k+1."""
        return 2 * self.k + 1

    @property
    def center(self) -> int:
        """Array index of the zero vertex."""
        return self.k

    def edge_weights(self) -> np.ndarray:
        """Realized weights of the 2k edges in vertex order."""
        return self.weights.realize(self.k)


class SpecFamily(BaseModel):
    """A family of instances sharing weights and potential, indexed by k."""
    model_config = ConfigDict(frozen=True)

    weights: WeightProfile = Field(default_factory=WeightProfile.unit)
    u: float = Field(0.0, ge=0, allow_inf_nan=False)

    def instance(self, k: int) -> PathSpec:
        return PathSpec(k=k, weights=self.weights, u=self.u)

    @property
    def description(self) -> str:
        return f"{self.weights.label}, u={self.u:g}"
