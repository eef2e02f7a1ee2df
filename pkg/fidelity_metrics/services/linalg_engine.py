"""Dense Hermitian kernels: eigendecomposition, PSD square root, extreme eigenvalues."""
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from fidelity_metrics.config import TOLERANCES
from fidelity_metrics.errors import NotHermitianError, NotPSDError, ParameterError

HermitianMatrix = NDArray[np.complex128]


def as_square(a, name: str = "matrix") -> HermitianMatrix:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ParameterError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def hermiticity_deviation(a: HermitianMatrix) -> Tuple[float, Tuple[int, int]]:
    """Largest |a[i,j] - conj(a[j,i])| and the entry pair where it occurs."""
    diff = np.abs(a - a.conj().T)
    flat = int(np.argmax(diff))
    i, j = divmod(flat, a.shape[1])
    return float(diff[i, j]), (min(i, j), max(i, j))


def check_hermitian(a, tol: float = TOLERANCES.hermiticity) -> HermitianMatrix:
    arr = as_square(a)
    deviation, pair = hermiticity_deviation(arr)
    if deviation > tol:
        raise NotHermitianError(pair, deviation)
    return arr


def hermitian_part(a: HermitianMatrix) -> HermitianMatrix:
    return 0.5 * (a + a.conj().T)


def _normalize_phases(vecs: HermitianMatrix) -> HermitianMatrix:
    # first non-negligible component of every eigenvector made real positive
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            c = col[nz[0]]
            out[:, k] = col * (np.conj(c) / abs(c))
    return out


def _order_ties(vals: NDArray[np.float64], vecs: HermitianMatrix) -> Tuple[NDArray, HermitianMatrix]:
    # by eigenvalue, then for equal eigenvalues by position of the first nonzero
    # component and its (real positive) magnitude descending
    def first_nonzero(col):
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if not nz.size:
            return (vecs.shape[0], 0.0)
        return (int(nz[0]), -float(abs(col[nz[0]])))

    order = sorted(range(len(vals)), key=lambda k: (float(vals[k]), first_nonzero(vecs[:, k])))
    return vals[order], vecs[:, order]


def hermitian_eig(h) -> Tuple[NDArray[np.float64], HermitianMatrix]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian matrix.

    Raises NotHermitianError naming the worst entry pair when ``h`` is not Hermitian
    within the configured tolerance.
    """
    arr = check_hermitian(h)
    vals, vecs = np.linalg.eigh(hermitian_part(arr))
    vecs = _normalize_phases(vecs)
    return _order_ties(vals, vecs)


def rank_cutoff(vals: NDArray[np.float64]) -> float:
    """Magnitude below which an eigenvalue is indistinguishable from roundoff."""
    if vals.size == 0:
        return 0.0
    return float(np.max(np.abs(vals))) * vals.size * np.finfo(np.float64).eps


def clamp_spectrum(vals: NDArray[np.float64], clamp: float = TOLERANCES.psd_clamp) -> NDArray[np.float64]:
    lowest = float(np.min(vals))
    if lowest < -clamp:
        raise NotPSDError(lowest)
    out = np.where(vals < 0.0, 0.0, vals)
    out[np.abs(out) <= rank_cutoff(vals)] = 0.0
    return out


def psd_sqrt(a) -> HermitianMatrix:
    """Principal square root of a PSD matrix.

    Eigenvalues in [-clamp, 0) are set to zero first; anything below -clamp raises
    NotPSDError with the most negative eigenvalue.
    """
    vals, vecs = hermitian_eig(a)
    roots = np.sqrt(clamp_spectrum(vals))
    root = (vecs * roots) @ vecs.conj().T
    return hermitian_part(root)


def largest_eigenvalue(h) -> float:
    vals, _ = hermitian_eig(h)
    return float(vals[-1])


def smallest_eigenvalue(h) -> float:
    # defined through largest_eigenvalue so the two agree bit for bit under negation
    return -largest_eigenvalue(-as_square(h))


def eigvalsh(h) -> NDArray[np.float64]:
    """Eigenvalues only, for hot loops where the eigenvectors are not needed."""
    arr = check_hermitian(h)
    return np.linalg.eigvalsh(hermitian_part(arr))
