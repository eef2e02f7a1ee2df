"""The T-metric: max over states tau of |F(rho, tau) - F(sigma, tau)|.

Qubits have a closed form (the Sine metric) with an explicit optimal state. For
d >= 3 a multi-start Nelder-Mead search runs over tau = V V^dag / Tr(V V^dag).
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import minimize

from fidelity_metrics.config import TOLERANCES
from fidelity_metrics.errors import DimensionMismatchError, UndefinedDirectionError
from fidelity_metrics.models.quantum import BlochVector, DensityMatrix, OptimizerConfig, OptResult
from fidelity_metrics.services.fidelity_engine import (
    StateLike,
    as_state,
    fidelity,
    fidelity_qubit,
    require_same_dim,
)
from fidelity_metrics.services.linalg_engine import hermitian_part, psd_sqrt
from fidelity_metrics.services.metric_engine import pt_metric_witness, sine_metric
from fidelity_metrics.services.state_engine import (
    from_bloch,
    purify_projector,
    random_density,
    random_pure,
    require_in_ball,
    to_bloch,
    trial_stream,
    validate,
)

logger = logging.getLogger(__name__)


def t_metric_qubit(u: BlochVector, v: BlochVector) -> float:
    """Closed form for qubits: sqrt(1 - F(u, v)), the Sine metric."""
    require_in_ball(u)
    require_in_ball(v)
    if u == v:
        return 0.0
    return math.sqrt(max(0.0, 1.0 - fidelity_qubit(u, v)))


def tau_objective_qubit(u: BlochVector, v: BlochVector, w) -> np.ndarray:
    """|F(rho(u), rho(w)) - F(rho(v), rho(w))| for one Bloch vector or an (n, 3) batch."""
    a, b = require_in_ball(u), require_in_ball(v)
    w = np.atleast_2d(np.asarray(w, dtype=float))
    mixedness = math.sqrt(max(0.0, 1.0 - a @ a)) - math.sqrt(max(0.0, 1.0 - b @ b))
    radial = np.sqrt(np.clip(1.0 - np.sum(w * w, axis=1), 0.0, None))
    return 0.5 * np.abs(w @ (a - b) + radial * mixedness)


def optimal_tau_qubit(u: BlochVector, v: BlochVector) -> BlochVector:
    """Bloch vector of the optimal state for t_metric_qubit.

    Parallel to u - v (antiparallel when u is the purer state) with magnitude
    |u - v| / (2 sqrt(1 - F)), always inside the ball.
    """
    a, b = require_in_ball(u), require_in_ball(v)
    diff = a - b
    spread = float(np.linalg.norm(diff))
    if spread == 0.0:
        raise UndefinedDirectionError("optimal state direction is undefined for u = v")
    mixedness = math.sqrt(max(0.0, 1.0 - a @ a)) - math.sqrt(max(0.0, 1.0 - b @ b))
    # hypot(spread, mixedness) == 2 sqrt(1 - F)
    magnitude = min(1.0, spread / math.hypot(spread, mixedness))
    sign = 1.0 if mixedness >= 0.0 else -1.0
    return BlochVector.from_array(sign * magnitude * diff / spread)


def printed_tau_magnitude(u: BlochVector, v: BlochVector) -> float:
    """|u - v| / sqrt(1 - F), twice the optimal-state magnitude.

    It exceeds 1 for pure pairs; kept only for the discrepancy study in the harness.
    """
    spread = float(np.linalg.norm(require_in_ball(u) - require_in_ball(v)))
    sine = t_metric_qubit(u, v)
    return math.inf if sine == 0.0 else spread / sine


class _Objective:
    """Signed objective F(rho, tau) - F(sigma, tau) over tau = V V^dag / Tr(V V^dag).

    V is d x rank, lower trapezoidal with a real diagonal, so the only flat direction
    left is the overall scale of V.
    """

    def __init__(self, rho: DensityMatrix, sigma: DensityMatrix, rank: int):
        self.dim = rho.dim
        self.rank = rank
        self.sqrt_rho = psd_sqrt(rho.matrix)
        self.sqrt_sigma = psd_sqrt(sigma.matrix)
        rows, cols = np.tril_indices(self.dim, m=rank)
        self._rows, self._cols = rows, cols
        self._off = rows != cols

    @property
    def size(self) -> int:
        return self._rows.size + int(np.count_nonzero(self._off))

    def factor(self, x: np.ndarray) -> np.ndarray:
        n = self._rows.size
        entries = x[:n].astype(np.complex128)
        entries[self._off] += 1j * x[n:]
        v = np.zeros((self.dim, self.rank), dtype=np.complex128)
        v[self._rows, self._cols] = entries
        return v

    def state(self, x: np.ndarray) -> Optional[np.ndarray]:
        v = self.factor(x)
        w = v @ v.conj().T
        trace = float(np.real(np.trace(w)))
        if not np.isfinite(trace) or trace <= 1e-300:
            return None
        return hermitian_part(w / trace)

    def params(self, tau: np.ndarray) -> np.ndarray:
        vals, vecs = np.linalg.eigh(tau)
        vals, vecs = vals[::-1][: self.rank], vecs[:, ::-1][:, : self.rank]
        v = vecs * np.sqrt(np.clip(vals, 0.0, None))
        # V^dag = Q R gives V V^dag = R^dag R with R^dag lower trapezoidal
        _, r = np.linalg.qr(v.conj().T)
        lower = r.conj().T
        diag = np.diagonal(lower)
        mags = np.abs(diag)
        phases = np.ones(self.rank, dtype=np.complex128)
        nonzero = mags > 0.0
        phases[nonzero] = np.conj(diag[nonzero]) / mags[nonzero]
        # unit phases on the columns of V leave V V^dag unchanged
        lower = lower * phases
        entries = lower[self._rows, self._cols]
        return np.concatenate([entries.real, entries[self._off].imag])

    def signed(self, x: np.ndarray) -> float:
        # F(rho, V V^dag / t) = (nuclear norm of sqrt(rho) V)^2 / t
        v = self.factor(x)
        trace = float(np.sum(np.abs(v) ** 2))
        if not np.isfinite(trace) or trace <= 1e-300:
            return 0.0
        a = np.linalg.svd(self.sqrt_rho @ v, compute_uv=False)
        b = np.linalg.svd(self.sqrt_sigma @ v, compute_uv=False)
        return float(np.sum(a) ** 2 - np.sum(b) ** 2) / trace


@dataclass(frozen=True)
class _Run:
    value: float
    x: np.ndarray
    iterations: int


def _local_search(objective: _Objective, x0: np.ndarray, sign: float, cfg: OptimizerConfig) -> _Run:
    def loss(x):
        return -sign * objective.signed(x)

    # the scale of V is flat, so only the value spread of the simplex ends a run
    options = {
        "maxiter": cfg.max_iterations,
        "xatol": np.inf,
        "fatol": 0.1 * cfg.value_tolerance,
        "adaptive": objective.size > 10,
    }
    res = minimize(loss, x0, method="Nelder-Mead", options=options)
    x, best, iterations = res.x, float(res.fun), int(res.nit)
    # relaunching from the incumbent rebuilds a full-size simplex
    for _ in range(cfg.polish_rounds):
        res = minimize(loss, x, method="Nelder-Mead", options=options)
        iterations += int(res.nit)
        gain = best - float(res.fun)
        moved = float(np.max(np.abs(res.x - x)))
        if res.fun < best:
            x, best = res.x, float(res.fun)
        if gain < cfg.value_tolerance or moved < cfg.step_tolerance:
            break
    return _Run(value=-best, x=x, iterations=iterations)


def _restart(objective: _Objective, start: np.ndarray, cfg: OptimizerConfig) -> _Run:
    x0 = objective.params(start)
    # the two signs are separate problems so neither sees the kink of |.|
    plus = _local_search(objective, x0, 1.0, cfg)
    minus = _local_search(objective, x0, -1.0, cfg)
    best = plus if plus.value >= minus.value else minus
    return _Run(value=best.value, x=best.x, iterations=plus.iterations + minus.iterations)


def _starts(rho: DensityMatrix, sigma: DensityMatrix, cfg: OptimizerConfig, rank: int) -> List[np.ndarray]:
    d = rho.dim
    starts = []
    for i in range(cfg.restarts):
        rng = trial_stream(cfg.seed, rank, i)
        if i < (cfg.restarts + 1) // 2:
            starts.append(purify_projector(random_pure(d, rng)).matrix)
        else:
            starts.append(random_density(d, rng).matrix)
    # the pure optimum is feasible, so the search never ends below pt_metric
    starts.append(purify_projector(pt_metric_witness(rho, sigma)).matrix)
    return starts


def _maximize(rho: DensityMatrix, sigma: DensityMatrix, cfg: OptimizerConfig, rank: int) -> OptResult:
    if rho == sigma:
        return OptResult(value=0.0, argmax_state=rho, converged=True, iterations_used=0, restarts_agreeing=cfg.restarts)

    objective = _Objective(rho, sigma, rank)
    starts = _starts(rho, sigma, cfg, rank)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(lambda s: _restart(objective, s, cfg), starts))
    else:
        runs = [_restart(objective, s, cfg) for s in starts]

    # ties go to the lowest restart index, the anchor start comes last
    best_index = max(range(len(runs)), key=lambda k: (runs[k].value, -k))
    best = runs[best_index]
    agreeing = sum(1 for r in runs[: cfg.restarts] if best.value - r.value <= cfg.value_tolerance)
    converged = 2 * agreeing >= cfg.restarts

    tau_matrix = objective.state(best.x)
    if tau_matrix is None:
        # a collapsed factor carries no state; the anchor is always feasible
        logger.warning("T-metric search collapsed to V = 0; falling back to the anchor state")
        tau_matrix = starts[-1]
    tau = validate(tau_matrix)
    value = abs(fidelity(rho, tau) - fidelity(sigma, tau))
    bound = sine_metric(rho, sigma)
    if value > bound + TOLERANCES.bound:
        logger.warning("T-metric search exceeded sqrt(1 - F): %.12g > %.12g", value, bound)
    if not converged:
        logger.info(
            "T-metric search not converged: %d of %d restarts within %.1e of %.12g",
            agreeing, cfg.restarts, cfg.value_tolerance, best.value,
        )
    return OptResult(
        value=value,
        argmax_state=tau,
        converged=converged,
        iterations_used=sum(r.iterations for r in runs),
        restarts_agreeing=agreeing,
    )


def t_metric_numeric(rho: StateLike, sigma: StateLike, cfg: Optional[OptimizerConfig] = None) -> OptResult:
    """Multi-start maximization over all density matrices (tau = V V^dag / Tr, V full d x d)."""
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    return _maximize(rho, sigma, cfg or OptimizerConfig(), rank=rho.dim)


def t_metric_rank_sweep(rho: StateLike, sigma: StateLike, cfg: Optional[OptimizerConfig] = None) -> OptResult:
    """Independent second path: tau restricted to rank 1, 2, ..., d in turn; best result wins."""
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    cfg = cfg or OptimizerConfig()
    results = [_maximize(rho, sigma, cfg, rank=r) for r in range(1, rho.dim + 1)]
    return max(results, key=lambda r: r.value)


class CrossCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    full: OptResult
    ranked: OptResult
    agree: bool


def cross_check_t_metric(
    rho: StateLike, sigma: StateLike, cfg: Optional[OptimizerConfig] = None, tol: float = 1e-6
) -> CrossCheck:
    """Run both parametrizations; a qudit value is trusted only when they agree."""
    full = t_metric_numeric(rho, sigma, cfg)
    ranked = t_metric_rank_sweep(rho, sigma, cfg)
    return CrossCheck(full=full, ranked=ranked, agree=abs(full.value - ranked.value) <= tol)


def _qubit_result(rho: DensityMatrix, sigma: DensityMatrix) -> OptResult:
    u, v = to_bloch(rho), to_bloch(sigma)
    if rho == sigma or u == v:
        return OptResult(value=0.0, argmax_state=rho, converged=True, iterations_used=0, restarts_agreeing=0)
    return OptResult(
        value=t_metric_qubit(u, v),
        argmax_state=from_bloch(optimal_tau_qubit(u, v)),
        converged=True,
        iterations_used=0,
        restarts_agreeing=0,
    )


def t_metric(
    rho: StateLike, sigma: StateLike, cfg: Optional[OptimizerConfig] = None, numeric: bool = False
) -> OptResult:
    """Closed form for qubits unless ``numeric`` is set, the multi-start search otherwise."""
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    if rho.dim == 2 and not numeric:
        return _qubit_result(rho, sigma)
    return t_metric_numeric(rho, sigma, cfg)


def bures_equivalent_form(rho: StateLike, sigma: StateLike) -> float:
    """max over tau of sqrt(1 + D) - sqrt(1 - D), D = |F(rho, tau) - F(sigma, tau)|; qubits only.

    The transform is increasing in D, so the maximum sits at D = t_metric_qubit.
    """
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    if rho.dim != 2:
        raise DimensionMismatchError(2, rho.dim, "qubit state")
    if rho == sigma:
        return 0.0
    d_t = min(1.0, t_metric_qubit(to_bloch(rho), to_bloch(sigma)))
    return math.sqrt(1.0 + d_t) - math.sqrt(1.0 - d_t)


def upper_bound_gap(
    rho: StateLike,
    sigma: StateLike,
    cfg: Optional[OptimizerConfig] = None,
    result: Optional[OptResult] = None,
) -> float:
    """sqrt(1 - F(rho, sigma)) minus the numeric T-metric; never below -1e-8.

    Pass ``result`` to reuse an optimizer run already made for the same pair.
    """
    rho, sigma = as_state(rho), as_state(sigma)
    require_same_dim(rho, sigma)
    if result is None:
        result = t_metric_numeric(rho, sigma, cfg)
    return sine_metric(rho, sigma) - result.value
