from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from fidelity_metrics.models.quantum import MetricKind, OptimizerConfig


class SampleKind(str, Enum):
    STATE = "state"
    PURE = "pure"
    CHANNEL = "channel"


class ComputeRequest(BaseModel):
    metric: MetricKind
    state_a: Dict[str, Any]
    state_b: Dict[str, Any]
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    numeric: bool = False


class ComputeResponse(BaseModel):
    metric: MetricKind
    value: float
    converged: bool = True
    argmax_state: Optional[Dict[str, Any]] = None


class SampleRequest(BaseModel):
    kind: SampleKind
    dim: int = Field(ge=2, le=64)
    seed: int = Field(default=0, ge=0)
    env_dim: int = Field(default=1, ge=1, le=16)
