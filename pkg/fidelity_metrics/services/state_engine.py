"""State construction, validation, Bloch parametrization and random ensembles."""
from typing import Any, Dict, List, Optional

import numpy as np

from fidelity_metrics.config import TOLERANCES
from fidelity_metrics.errors import (
    BlochOutOfBallError,
    DimensionMismatchError,
    FormatError,
    NormError,
    ParameterError,
    StateValidationError,
    Violation,
)
from fidelity_metrics.models.quantum import BlochVector, DensityMatrix, PureState
from fidelity_metrics.services.linalg_engine import hermitian_part, hermiticity_deviation
from fidelity_metrics.utils.formatters import (
    decode_matrix,
    decode_vector,
    encode_matrix,
    encode_vector,
    require_key,
)

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def trial_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``seed``; same inputs, same stream."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


def _require_dim(d: int) -> None:
    if d < 2:
        raise ParameterError(f"dimension must be at least 2, got {d}")


def validate(candidate, trace_tol: Optional[float] = None) -> DensityMatrix:
    """Check hermiticity, unit trace and positivity; return the typed state.

    Every violated invariant is listed in the raised StateValidationError together
    with its measured deviation.
    """
    trace_tol = TOLERANCES.trace if trace_tol is None else trace_tol
    try:
        arr = np.asarray(candidate, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise StateValidationError([Violation("shape", float("nan"), str(exc))]) from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StateValidationError([Violation("shape", float("nan"), f"not square: {arr.shape}")])
    if arr.shape[0] < 2:
        raise StateValidationError([Violation("shape", float("nan"), "dimension must be at least 2")])
    if not np.all(np.isfinite(arr)):
        raise StateValidationError([Violation("shape", float("nan"), "non-finite entries")])

    violations: List[Violation] = []
    herm_dev, (i, j) = hermiticity_deviation(arr)
    if herm_dev > TOLERANCES.hermiticity:
        violations.append(Violation("hermiticity", herm_dev, f"entries ({i},{j}) and ({j},{i})"))

    sym = hermitian_part(arr)
    trace = float(np.real(np.trace(sym)))
    if abs(trace - 1.0) > trace_tol:
        violations.append(Violation("trace", trace, f"trace is {trace:.12g}"))

    lowest = float(np.linalg.eigvalsh(sym)[0])
    if lowest < -TOLERANCES.psd_clamp:
        violations.append(Violation("psd", lowest, f"smallest eigenvalue {lowest:.6g}"))

    if violations:
        raise StateValidationError(violations)
    return DensityMatrix(dim=arr.shape[0], matrix=_frozen(sym))


def pure_state(amplitudes) -> PureState:
    psi = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    _require_dim(psi.size)
    norm_sq = float(np.vdot(psi, psi).real)
    if abs(norm_sq - 1.0) > TOLERANCES.pure_norm:
        raise NormError(norm_sq)
    return PureState(dim=psi.size, amplitudes=_frozen(psi))


def require_in_ball(u: BlochVector) -> np.ndarray:
    arr = u.as_array()
    norm = float(np.linalg.norm(arr))
    if norm > 1.0 + TOLERANCES.bloch_radius:
        raise BlochOutOfBallError(norm)
    return arr


def from_bloch(u: BlochVector) -> DensityMatrix:
    arr = require_in_ball(u)
    rho = 0.5 * (np.eye(2, dtype=np.complex128) + sum(c * p for c, p in zip(arr, PAULI)))
    return DensityMatrix(dim=2, matrix=_frozen(rho))


def to_bloch(rho: DensityMatrix) -> BlochVector:
    if rho.dim != 2:
        raise DimensionMismatchError(2, rho.dim, "qubit state")
    return BlochVector.from_array([np.real(np.trace(rho.matrix @ p)) for p in PAULI])


def purify_projector(psi: PureState) -> DensityMatrix:
    amps = psi.amplitudes
    norm_sq = float(np.vdot(amps, amps).real)
    if abs(norm_sq - 1.0) > TOLERANCES.pure_norm:
        raise NormError(norm_sq)
    return DensityMatrix(dim=psi.dim, matrix=_frozen(np.outer(amps, amps.conj())))


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_pure(d: int, rng: np.random.Generator) -> PureState:
    _require_dim(d)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(dim=d, amplitudes=_frozen(z / np.linalg.norm(z)))


def random_density(d: int, rng: np.random.Generator) -> DensityMatrix:
    """Hilbert-Schmidt distributed mixed state G G^dag / Tr(G G^dag)."""
    _require_dim(d)
    g = _ginibre(rng, d, d)
    w = g @ g.conj().T
    w = hermitian_part(w / np.trace(w).real)
    return DensityMatrix(dim=d, matrix=_frozen(w))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR factorization of a Ginibre matrix with phase fix."""
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_bloch(rng: np.random.Generator, pure: bool = False) -> BlochVector:
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    radius = 1.0 if pure else rng.random() ** (1.0 / 3.0)
    return BlochVector.from_array(radius * direction)


def mix(rho1: DensityMatrix, rho2: DensityMatrix, lam: float) -> DensityMatrix:
    """lam * rho1 + (1 - lam) * rho2."""
    if rho1.dim != rho2.dim:
        raise DimensionMismatchError(rho1.dim, rho2.dim)
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"mixing weight must lie in [0, 1], got {lam}")
    return DensityMatrix(dim=rho1.dim, matrix=_frozen(lam * rho1.matrix + (1.0 - lam) * rho2.matrix))


def conjugate(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != (rho.dim, rho.dim):
        raise DimensionMismatchError(rho.dim, u.shape[0], "unitary")
    return DensityMatrix(dim=rho.dim, matrix=_frozen(hermitian_part(u @ rho.matrix @ u.conj().T)))


def perturb(rho: DensityMatrix, eps: float, rng: np.random.Generator) -> DensityMatrix:
    """(1 - eps) rho + eps * (random Hilbert-Schmidt state)."""
    return mix(random_density(rho.dim, rng), rho, eps)


def purity(rho: DensityMatrix) -> float:
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))


def matrix_rank(rho: DensityMatrix, tol: float = 1e-8) -> int:
    return int(np.sum(np.linalg.eigvalsh(rho.matrix) > tol))


def state_to_json(rho: DensityMatrix) -> Dict[str, Any]:
    return {"dim": rho.dim, "matrix": encode_matrix(rho.matrix)}


def state_from_json(doc: Dict[str, Any], source: str = "state") -> DensityMatrix:
    dim = require_key(doc, "dim", source)
    matrix = decode_matrix(require_key(doc, "matrix", source), f"{source} matrix")
    if not isinstance(dim, int) or matrix.shape != (dim, dim):
        raise FormatError(f"{source}: declared dim {dim!r} does not match matrix shape {matrix.shape}")
    return validate(matrix)


def pure_to_json(psi: PureState) -> Dict[str, Any]:
    return {"dim": psi.dim, "amplitudes": encode_vector(psi.amplitudes)}


def pure_from_json(doc: Dict[str, Any], source: str = "pure state") -> PureState:
    dim = require_key(doc, "dim", source)
    amps = decode_vector(require_key(doc, "amplitudes", source), f"{source} amplitudes")
    if not isinstance(dim, int) or amps.size != dim:
        raise FormatError(f"{source}: declared dim {dim!r} does not match {amps.size} amplitudes")
    return pure_state(amps)
