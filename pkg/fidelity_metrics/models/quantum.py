from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class DensityMatrix(BaseModel):
    """A validated d x d Hermitian, unit-trace, PSD operator.

    Build instances through ``state_engine.validate``; the stored array is read-only.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(ge=2)
    matrix: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.matrix, other.matrix)


class PureState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(ge=2)
    amplitudes: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, PureState):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)


class BlochVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    u1: float = 0.0
    u2: float = 0.0
    u3: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        a = np.asarray(arr, dtype=float).reshape(3)
        return cls(u1=float(a[0]), u2=float(a[1]), u3=float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


class KrausChannel(BaseModel):
    """CPTP map as a Kraus family; build through ``channel_engine.kraus_channel``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim_in: int = Field(ge=1)
    dim_out: int = Field(ge=1)
    kraus_ops: Tuple[np.ndarray, ...] = Field(min_length=1)


class MetricKind(str, Enum):
    BURES_ANGLE = "bures_angle"
    BURES_METRIC = "bures"
    SINE_METRIC = "sine"
    TRACE_DISTANCE = "trace"
    SPECTRAL_METRIC = "spectral"
    PT_METRIC = "pt"
    T_METRIC = "tmetric"

    @property
    def fidelity_based(self) -> bool:
        return self in (MetricKind.BURES_ANGLE, MetricKind.BURES_METRIC, MetricKind.SINE_METRIC)


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    restarts: int = Field(default=16, gt=0)
    max_iterations: int = Field(default=2000, gt=0)
    step_tolerance: float = Field(default=1e-9, gt=0)
    value_tolerance: float = Field(default=1e-10, gt=0)
    seed: int = Field(default=0, ge=0)
    polish_rounds: int = Field(default=3, ge=0)
    workers: int = Field(default=1, gt=0)


class OptResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0)
    argmax_state: DensityMatrix
    converged: bool
    iterations_used: int = Field(ge=0)
    restarts_agreeing: int = Field(ge=0)
