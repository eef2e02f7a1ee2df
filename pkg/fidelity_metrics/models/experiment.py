from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from fidelity_metrics.models.quantum import MetricKind, OptimizerConfig


class ExperimentKind(str, Enum):
    AXIOMS = "axioms"
    CONTRACTIVITY = "contractivity"
    JOINT_CONVEXITY_SQ = "joint_convexity_sq"
    JOINT_CONVEXITY_RAW = "joint_convexity_raw"
    UPPER_BOUND = "upper_bound"
    THEOREM1 = "theorem1"
    THEOREM2 = "theorem2"
    EQ5 = "eq5"
    SPECTRAL_REDUCTION = "spectral_reduction"
    OPTIMAL_TAU = "optimal_tau"


class ExperimentSpec(BaseModel):
    experiment: ExperimentKind
    metric: MetricKind = MetricKind.T_METRIC
    dims: List[int] = Field(default_factory=lambda: [2])
    trials: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    env_dims: List[int] = Field(default_factory=lambda: [1])
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    workers: int = Field(default=1, ge=1)
    oracle_samples: int = Field(default=100_000, ge=1)
    grid_points: int = Field(default=1_000_000, ge=8)
    refine_steps: int = Field(default=2000, ge=0)
    perturbation: float = Field(default=1e-3, gt=0.0, lt=1.0)

    @field_validator("dims")
    @classmethod
    def _dims_valid(cls, dims: List[int]) -> List[int]:
        if not dims:
            raise ValueError("dims must not be empty")
        if any(d < 2 for d in dims):
            raise ValueError(f"every dimension must be at least 2, got {dims}")
        return dims

    @field_validator("env_dims")
    @classmethod
    def _env_dims_valid(cls, env_dims: List[int]) -> List[int]:
        if not env_dims or any(k < 1 for k in env_dims):
            raise ValueError(f"environment dimensions must be a non-empty list of values >= 1, got {env_dims}")
        return env_dims

    @property
    def is_counterexample_search(self) -> bool:
        return self.experiment == ExperimentKind.JOINT_CONVEXITY_RAW and self.metric == MetricKind.T_METRIC


class Witness(BaseModel):
    """Inputs of the trial with the largest excess, enough to replay the check exactly."""

    trial: int
    dim: int
    check: str
    states: List[Dict[str, Any]]
    channel: Optional[Dict[str, Any]] = None
    lam: Optional[float] = Field(default=None, alias="lambda")
    optimizer_seed: Optional[int] = None
    lhs: float
    rhs: float
    violation: float

    model_config = ConfigDict(populate_by_name=True)


class DimensionSummary(BaseModel):
    dim: int
    trials_run: int
    violations: int
    max_excess: Optional[float] = None
    min_observed: Optional[float] = None
    mean_observed: Optional[float] = None
    max_observed: Optional[float] = None
    argmax_ranks: Dict[str, int] = Field(default_factory=dict)


class TrialRecord(BaseModel):
    dim: int
    trial: int
    check: str
    excess: float
    skipped: bool = False


class ExperimentReport(BaseModel):
    spec: ExperimentSpec
    trials_run: int
    violations: int
    max_violation: float
    witness: Optional[Witness] = None
    non_converged: int = 0
    wall_time_s: float = 0.0
    summary: List[DimensionSummary] = Field(default_factory=list)
    records: List[TrialRecord] = Field(default_factory=list, exclude=True)

    @property
    def unexpected(self) -> bool:
        if self.spec.is_counterexample_search:
            return self.violations == 0
        return self.violations > 0
