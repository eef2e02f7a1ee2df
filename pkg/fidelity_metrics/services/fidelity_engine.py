"""Uhlmann fidelity: general path, pure-state shortcut, qubit closed form."""
import logging
from typing import Union

import numpy as np
from pydantic import BaseModel

from fidelity_metrics.config import TOLERANCES
from fidelity_metrics.errors import DimensionMismatchError, InternalConsistencyError
from fidelity_metrics.models.quantum import BlochVector, DensityMatrix, PureState
from fidelity_metrics.services.linalg_engine import hermitian_part, psd_sqrt, rank_cutoff
from fidelity_metrics.services.state_engine import require_in_ball, validate

logger = logging.getLogger(__name__)

StateLike = Union[DensityMatrix, np.ndarray]


class FidelityDetail(BaseModel):
    value: float
    raw: float


def as_state(x: StateLike) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else validate(x)


def require_same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(rho.dim, sigma.dim)


def fidelity_from_sqrt(sqrt_rho: np.ndarray, sigma: np.ndarray) -> float:
    """(sum of sqrt eigenvalues of sqrt_rho sigma sqrt_rho)^2, without the final clamp."""
    vals = np.linalg.eigvalsh(hermitian_part(sqrt_rho @ sigma @ sqrt_rho))
    if vals[0] < -TOLERANCES.psd_clamp:
        raise InternalConsistencyError(
            f"sqrt(rho) sigma sqrt(rho) has eigenvalue {vals[0]:.3e} below the clamp tolerance"
        )
    vals = np.where(vals < 0.0, 0.0, vals)
    vals[vals <= rank_cutoff(vals)] = 0.0
    return float(np.sum(np.sqrt(vals)) ** 2)


def fidelity_detail(rho: StateLike, sigma: StateLike) -> FidelityDetail:
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    if rho == sigma:
        return FidelityDetail(value=1.0, raw=1.0)
    raw = fidelity_from_sqrt(psd_sqrt(rho.matrix), sigma.matrix)
    value = min(1.0, max(0.0, raw))
    if value != raw:
        logger.debug("fidelity clamped from %.17g to %.17g", raw, value)
    return FidelityDetail(value=value, raw=raw)


def fidelity(rho: StateLike, sigma: StateLike) -> float:
    return fidelity_detail(rho, sigma).value


def fidelity_pure(rho: StateLike, tau: PureState) -> float:
    """F(rho, tau) = <tau| rho |tau> for a pure tau."""
    rho = as_state(rho)
    if rho.dim != tau.dim:
        raise DimensionMismatchError(rho.dim, tau.dim, "pure state")
    amps = tau.amplitudes
    value = float(np.real(np.vdot(amps, rho.matrix @ amps)))
    return min(1.0, max(0.0, value))


def fidelity_qubit(u: BlochVector, v: BlochVector) -> float:
    a, b = require_in_ball(u), require_in_ball(v)
    root_u = np.sqrt(max(0.0, 1.0 - float(a @ a)))
    root_v = np.sqrt(max(0.0, 1.0 - float(b @ b)))
    value = 0.5 * (1.0 + float(a @ b) + root_u * root_v)
    return min(1.0, max(0.0, value))
