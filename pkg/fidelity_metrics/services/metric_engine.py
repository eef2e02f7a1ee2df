"""Closed-form distance measures built on fidelity and on the spectrum of rho - sigma."""
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from fidelity_metrics.models.quantum import DensityMatrix, MetricKind, OptimizerConfig, PureState
from fidelity_metrics.services.fidelity_engine import StateLike, as_state, fidelity, require_same_dim
from fidelity_metrics.services.linalg_engine import eigvalsh, hermitian_eig, largest_eigenvalue
from fidelity_metrics.services.state_engine import pure_state


class MetricEvaluation(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: MetricKind
    value: float
    converged: bool = True
    argmax_state: Optional[DensityMatrix] = None


def _pair(rho: StateLike, sigma: StateLike):
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    return rho, sigma


def metric_from_fidelity(kind: MetricKind, f: float) -> float:
    f = min(1.0, max(0.0, f))
    if kind == MetricKind.BURES_ANGLE:
        return math.acos(min(1.0, math.sqrt(f)))
    if kind == MetricKind.BURES_METRIC:
        return math.sqrt(max(0.0, 2.0 - 2.0 * math.sqrt(f)))
    if kind == MetricKind.SINE_METRIC:
        return math.sqrt(max(0.0, 1.0 - f))
    raise ValueError(f"{kind.value} is not a function of fidelity alone")


def _fidelity_metric(kind: MetricKind, rho: StateLike, sigma: StateLike) -> float:
    rho, sigma = _pair(rho, sigma)
    if rho == sigma:
        return 0.0
    return metric_from_fidelity(kind, fidelity(rho, sigma))


def bures_angle(rho: StateLike, sigma: StateLike) -> float:
    """arccos sqrt(F), in [0, pi/2]."""
    return _fidelity_metric(MetricKind.BURES_ANGLE, rho, sigma)


def bures_metric(rho: StateLike, sigma: StateLike) -> float:
    """sqrt(2 - 2 sqrt(F)), in [0, sqrt(2)]."""
    return _fidelity_metric(MetricKind.BURES_METRIC, rho, sigma)


def sine_metric(rho: StateLike, sigma: StateLike) -> float:
    """sqrt(1 - F), in [0, 1]."""
    return _fidelity_metric(MetricKind.SINE_METRIC, rho, sigma)


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    rho, sigma = _pair(rho, sigma)
    return 0.5 * float(np.sum(np.abs(eigvalsh(rho.matrix - sigma.matrix))))


def e_max(rho: StateLike, sigma: StateLike) -> float:
    """Largest eigenvalue of rho - sigma.

    Equals the maximum of Tr[tau (rho - sigma)] over pure tau. Not a metric:
    e_max(rho, sigma) and e_max(sigma, rho) differ in general.
    """
    rho, sigma = _pair(rho, sigma)
    return largest_eigenvalue(rho.matrix - sigma.matrix)


def spectral_metric(rho: StateLike, sigma: StateLike) -> float:
    """Largest |eigenvalue| of rho - sigma (its operator norm)."""
    return max(e_max(rho, sigma), e_max(sigma, rho))


def pt_metric(rho: StateLike, sigma: StateLike) -> float:
    """Maximum of |F(rho, tau) - F(sigma, tau)| over pure tau, which reduces to the spectral metric."""
    return spectral_metric(rho, sigma)


def pt_metric_witness(rho: StateLike, sigma: StateLike) -> PureState:
    """A pure state attaining pt_metric: the eigenvector of rho - sigma with the largest |eigenvalue|."""
    rho, sigma = _pair(rho, sigma)
    vals, vecs = hermitian_eig(rho.matrix - sigma.matrix)
    k = len(vals) - 1 if vals[-1] >= -vals[0] else 0
    v = vecs[:, k]
    return pure_state(v / np.linalg.norm(v))


def evaluate_metric(
    kind: MetricKind,
    rho: StateLike,
    sigma: StateLike,
    cfg: Optional[OptimizerConfig] = None,
    numeric: bool = False,
) -> MetricEvaluation:
    """Evaluate any catalog metric; the T-metric carries convergence and its argmax."""
    if kind == MetricKind.T_METRIC:
        # tmetric_engine builds on this module
        from fidelity_metrics.services.tmetric_engine import t_metric

        result = t_metric(rho, sigma, cfg, numeric=numeric)
        return MetricEvaluation(
            kind=kind, value=result.value, converged=result.converged, argmax_state=result.argmax_state
        )
    value = {
        MetricKind.BURES_ANGLE: bures_angle,
        MetricKind.BURES_METRIC: bures_metric,
        MetricKind.SINE_METRIC: sine_metric,
        MetricKind.TRACE_DISTANCE: trace_distance,
        MetricKind.SPECTRAL_METRIC: spectral_metric,
        MetricKind.PT_METRIC: pt_metric,
    }[kind](rho, sigma)
    return MetricEvaluation(kind=kind, value=value)
