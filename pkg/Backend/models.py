import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import BadK, UsageError, WeightSumInvalid, InvalidDepth

# ==========================================================
#  SHARED CONSTANTS
# ==========================================================

COMPONENTS = ("ad", "nad", "cd", "nd", "ed")
DEFAULT_WEIGHTS = (0.2, 0.2, 0.2, 0.2, 0.2)
WEIGHT_TOLERANCE = 1e-9


class Aggregate(str, Enum):
    MEAN = "mean"
    STANDARD_DEVIATION = "standard_deviation"


def check_weights(weights) -> Tuple[float, ...]:
    """Raise WeightSumInvalid unless weights are five non-negative reals summing to 1."""
    weights = tuple(float(w) for w in weights)
    if len(weights) != len(COMPONENTS):
        raise WeightSumInvalid(f"expected {len(COMPONENTS)} weights, got {len(weights)}")
    if not all(math.isfinite(w) for w in weights):
        raise WeightSumInvalid(f"weights must be finite: {weights}")
    if any(w < 0 for w in weights):
        raise WeightSumInvalid(f"weights must be non-negative: {weights}")
    total = sum(weights)
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise WeightSumInvalid(f"weights must sum to 1, got {total!r}")
    return weights


# ==========================================================
#  DISSIMILARITY
# ==========================================================

class DissimilarityConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: Tuple[float, float, float, float, float] = DEFAULT_WEIGHTS
    depth: int = 1
    aggregates: Tuple[Aggregate, ...] = (Aggregate.MEAN, Aggregate.STANDARD_DEVIATION)

    @model_validator(mode="after")
    def _validate(self):
        check_weights(self.weights)
        if self.depth < 1:
            raise InvalidDepth(f"depth must be >= 1, got {self.depth}")
        if not self.aggregates:
            raise UsageError("at least one aggregate is required")
        return self

    def with_weights(self, weights) -> "DissimilarityConfig":
        return DissimilarityConfig(weights=tuple(weights), depth=self.depth, aggregates=self.aggregates)


class ComponentMatrices(BaseModel):
    """The five per-pair component matrices over the target vertices."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    ids: List[str]
    ad: np.ndarray
    nad: np.ndarray
    cd: np.ndarray
    nd: np.ndarray
    ed: np.ndarray
    normalized: bool = False
    # (vertex type, attribute) -> aggregate name -> global range
    ranges: Dict[Tuple[str, str], Dict[str, float]] = Field(default_factory=dict)

    def matrix(self, name: str) -> np.ndarray:
        if name not in COMPONENTS:
            raise KeyError(name)
        return getattr(self, name)

    def stacked(self) -> np.ndarray:
        return np.stack([self.matrix(name) for name in COMPONENTS])


class DistanceMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    ids: List[str]
    values: np.ndarray
    config: Optional[DissimilarityConfig] = None

    @property
    def size(self) -> int:
        return len(self.ids)


# ==========================================================
#  CLUSTERING
# ==========================================================

class SpectralParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    affinity: Literal["one_minus", "gaussian"] = "one_minus"
    sigma: Optional[float] = None
    kmeans_restarts: int = 10
    seed: int = 0

    @model_validator(mode="after")
    def _validate(self):
        if self.affinity == "gaussian" and (self.sigma is None or self.sigma <= 0):
            raise UsageError("gaussian affinity needs sigma > 0")
        if self.kmeans_restarts < 1:
            raise BadK(f"kmeans_restarts must be >= 1, got {self.kmeans_restarts}")
        return self


class ClusterAssignment(BaseModel):
    ids: List[str]
    labels: List[int]
    k: int
    method: str = "agglomerative"

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(self.ids, self.labels))


# ==========================================================
#  EVALUATION
# ==========================================================

class EvaluationReport(BaseModel):
    task: Literal["clustering", "classification", "sweep"]
    metric: Literal["ari", "accuracy"]
    fold_values: List[float] = Field(default_factory=list)
    value: float
    config: Dict[str, Any] = Field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    selected_weights: List[Tuple[float, ...]] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _validate(self):
        low, high = (-1.0, 1.0) if self.metric == "ari" else (0.0, 100.0)
        for v in [self.value, *self.fold_values]:
            if not (low - 1e-9 <= v <= high + 1e-9):
                raise UsageError(f"{self.metric} value {v} outside [{low}, {high}]")
        return self
