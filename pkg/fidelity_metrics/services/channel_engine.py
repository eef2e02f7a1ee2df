"""CPTP maps in Kraus form: construction, application, random and named channels."""
import math
from typing import Any, Dict, Iterable, List

import numpy as np

from fidelity_metrics.config import TOLERANCES
from fidelity_metrics.errors import ChannelCompletenessError, DimensionMismatchError, FormatError, ParameterError
from fidelity_metrics.models.quantum import DensityMatrix, KrausChannel
from fidelity_metrics.services.fidelity_engine import StateLike, as_state
from fidelity_metrics.services.state_engine import validate
from fidelity_metrics.utils.formatters import decode_matrix, encode_matrix, require_key


def completeness_deviation(ops: Iterable[np.ndarray], dim_in: int) -> float:
    total = sum(k.conj().T @ k for k in ops)
    return float(np.max(np.abs(total - np.eye(dim_in))))


def kraus_channel(ops: Iterable) -> KrausChannel:
    """Validated channel: same shapes everywhere and sum K^dag K = I within 1e-9."""
    mats: List[np.ndarray] = [np.array(k, dtype=np.complex128) for k in ops]
    if not mats:
        raise ParameterError("a channel needs at least one Kraus operator")
    shape = mats[0].shape
    if len(shape) != 2 or any(m.shape != shape for m in mats):
        raise ParameterError(f"Kraus operators must share one 2-D shape, got {[m.shape for m in mats]}")
    dim_out, dim_in = shape
    deviation = completeness_deviation(mats, dim_in)
    if deviation > TOLERANCES.completeness:
        raise ChannelCompletenessError(deviation)
    for m in mats:
        m.setflags(write=False)
    return KrausChannel(dim_in=dim_in, dim_out=dim_out, kraus_ops=tuple(mats))


def apply(channel: KrausChannel, rho: StateLike) -> DensityMatrix:
    rho = as_state(rho)
    if rho.dim != channel.dim_in:
        raise DimensionMismatchError(channel.dim_in, rho.dim, "channel input")
    out = sum(k @ rho.matrix @ k.conj().T for k in channel.kraus_ops)
    return validate(out, trace_tol=TOLERANCES.completeness)


def random_channel(d: int, env_dim: int, rng: np.random.Generator) -> KrausChannel:
    """Stinespring sampling: a Haar isometry d -> d * env_dim cut into env_dim Kraus blocks."""
    if d < 2:
        raise ParameterError(f"dimension must be at least 2, got {d}")
    if env_dim < 1:
        raise ParameterError(f"environment dimension must be at least 1, got {env_dim}")
    rows = d * env_dim
    g = rng.standard_normal((rows, d)) + 1j * rng.standard_normal((rows, d))
    q, r = np.linalg.qr(g)
    diag = np.diag(r)
    isometry = q * (diag / np.abs(diag))
    return kraus_channel(isometry[i * d:(i + 1) * d, :] for i in range(env_dim))


def identity_channel(d: int) -> KrausChannel:
    return kraus_channel([np.eye(d)])


def unitary_channel(unitary) -> KrausChannel:
    return kraus_channel([unitary])


def _weyl(d: int, a: int, b: int) -> np.ndarray:
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)


def depolarizing(d: int, p: float) -> KrausChannel:
    """rho -> (1 - p) rho + p I/d as weighted shift/clock conjugations."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"depolarizing probability must lie in [0, 1], got {p}")
    ops = []
    for a in range(d):
        for b in range(d):
            weight = p / d**2 + (1.0 - p if a == b == 0 else 0.0)
            if weight > 0.0:
                ops.append(math.sqrt(weight) * _weyl(d, a, b))
    return kraus_channel(ops)


def amplitude_damping(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"damping rate must lie in [0, 1], got {gamma}")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    return kraus_channel([k0, k1])


def dephasing(d: int, p: float) -> KrausChannel:
    """Off-diagonal entries scaled by (1 - p)."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"dephasing probability must lie in [0, 1], got {p}")
    ops = [math.sqrt(1.0 - p) * np.eye(d)] if p < 1.0 else []
    if p > 0.0:
        for k in range(d):
            proj = np.zeros((d, d))
            proj[k, k] = math.sqrt(p)
            ops.append(proj)
    return kraus_channel(ops)


def channel_to_json(channel: KrausChannel) -> Dict[str, Any]:
    return {
        "dim_in": channel.dim_in,
        "dim_out": channel.dim_out,
        "kraus": [encode_matrix(k) for k in channel.kraus_ops],
    }


def channel_from_json(doc: Dict[str, Any], source: str = "channel") -> KrausChannel:
    dim_in = require_key(doc, "dim_in", source)
    dim_out = require_key(doc, "dim_out", source)
    raw = require_key(doc, "kraus", source)
    if not isinstance(raw, list) or not raw:
        raise FormatError(f"{source}: 'kraus' must be a non-empty list of matrices")
    ops = [decode_matrix(m, f"{source} Kraus operator {i}") for i, m in enumerate(raw)]
    for i, op in enumerate(ops):
        if op.shape != (dim_out, dim_in):
            raise FormatError(f"{source}: Kraus operator {i} has shape {op.shape}, expected ({dim_out}, {dim_in})")
    return kraus_channel(ops)
