"""Seeded Monte-Carlo experiments over the metric catalog.

Every trial draws its inputs from a stream keyed by (seed, dim, trial), evaluates a
list of inequality checks ``lhs <= rhs + tol`` and reports the largest excess.
Witnesses carry the inputs of the worst trial and replay exactly.
"""
import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache, partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from fidelity_metrics.config import TOLERANCES
from fidelity_metrics.errors import ParameterError
from fidelity_metrics.models.experiment import (
    DimensionSummary,
    ExperimentKind,
    ExperimentReport,
    ExperimentSpec,
    TrialRecord,
    Witness,
)
from fidelity_metrics.models.quantum import BlochVector, DensityMatrix, KrausChannel, MetricKind, OptimizerConfig
from fidelity_metrics.services.channel_engine import apply, channel_from_json, channel_to_json, random_channel
from fidelity_metrics.services.fidelity_engine import fidelity, fidelity_pure
from fidelity_metrics.services.metric_engine import (
    bures_metric,
    evaluate_metric,
    metric_from_fidelity,
    pt_metric,
    pt_metric_witness,
    spectral_metric,
    trace_distance,
)
from fidelity_metrics.services.state_engine import (
    from_bloch,
    matrix_rank,
    mix,
    perturb,
    random_density,
    state_from_json,
    state_to_json,
    to_bloch,
    trial_stream,
)
from fidelity_metrics.services.tmetric_engine import (
    bures_equivalent_form,
    optimal_tau_qubit,
    printed_tau_magnitude,
    t_metric_numeric,
    t_metric_qubit,
    tau_objective_qubit,
    upper_bound_gap,
)
from fidelity_metrics.utils.formatters import format_seconds, parse_json

logger = logging.getLogger(__name__)

QUBIT_ONLY = (ExperimentKind.THEOREM1, ExperimentKind.THEOREM2, ExperimentKind.EQ5, ExperimentKind.OPTIMAL_TAU)
THEOREM_KINDS = QUBIT_ONLY + (ExperimentKind.SPECTRAL_REDUCTION,)

# sub-streams of one trial
_INPUTS, _OPTIMIZER, _ORACLE = 0, 1, 2


class _NotConverged(Exception):
    pass


@dataclass(frozen=True)
class _Check:
    name: str
    lhs: float
    rhs: float
    tol: float

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs

    @property
    def violated(self) -> bool:
        return self.excess > self.tol


@dataclass
class _Inputs:
    states: List[DensityMatrix]
    channel: Optional[KrausChannel] = None
    lam: Optional[float] = None


@dataclass
class _Outcome:
    dim: int
    trial: int
    inputs: _Inputs
    checks: List[_Check] = field(default_factory=list)
    skipped: bool = False
    observation: Optional[float] = None
    argmax_rank: Optional[int] = None

    @property
    def worst(self) -> Optional[_Check]:
        if not self.checks:
            return None
        violated = [c for c in self.checks if c.violated]
        return max(violated or self.checks, key=lambda c: c.excess)


def _optimizer_seed(spec: ExperimentSpec, dim: int, trial: int) -> int:
    return int(np.random.SeedSequence(spec.seed, spawn_key=(dim, trial, _OPTIMIZER)).generate_state(1)[0])


def _optimizer_config(spec: ExperimentSpec, dim: int, trial: int) -> OptimizerConfig:
    return spec.optimizer.model_copy(update={"seed": _optimizer_seed(spec, dim, trial)})


def _optimizer_backed(spec: ExperimentSpec, dim: int) -> bool:
    return spec.metric == MetricKind.T_METRIC and dim > 2


class _Probe:
    """The selected metric as a plain function; non-converged searches abort the trial."""

    def __init__(self, spec: ExperimentSpec, dim: int, trial: int, squared: bool = False):
        self.kind = spec.metric
        self.cfg = _optimizer_config(spec, dim, trial)
        self.squared = squared

    def __call__(self, rho: DensityMatrix, sigma: DensityMatrix) -> float:
        ev = evaluate_metric(self.kind, rho, sigma, self.cfg)
        if not ev.converged:
            raise _NotConverged()
        return ev.value**2 if self.squared else ev.value


def sampled_pt_maximum(rho: DensityMatrix, sigma: DensityMatrix, samples: int, rng: np.random.Generator) -> float:
    """Largest |Tr(rho tau) - Tr(sigma tau)| over ``samples`` Haar pure states (oracle only)."""
    delta = rho.matrix - sigma.matrix
    best = 0.0
    for start in range(0, samples, 20_000):
        n = min(20_000, samples - start)
        z = rng.standard_normal((n, rho.dim)) + 1j * rng.standard_normal((n, rho.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        vals = np.real(np.einsum("ni,ij,nj->n", z.conj(), delta, z))
        best = max(best, float(np.max(np.abs(vals))))
    return best


@lru_cache(maxsize=4)
def _bloch_grid(points: int) -> np.ndarray:
    n = max(2, round(points ** (1.0 / 3.0)))
    axis = np.linspace(-1.0, 1.0, n)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    return grid[np.sum(grid * grid, axis=1) <= 1.0]


# -- inputs -----------------------------------------------------------------


def _sample_inputs(spec: ExperimentSpec, dim: int, trial: int) -> _Inputs:
    rng = trial_stream(spec.seed, dim, trial, _INPUTS)
    kind = spec.experiment
    if kind == ExperimentKind.AXIOMS:
        rho, sigma, omega = (random_density(dim, rng) for _ in range(3))
        return _Inputs(states=[rho, sigma, omega, perturb(rho, spec.perturbation, rng)])
    if kind == ExperimentKind.CONTRACTIVITY:
        env_dim = spec.env_dims[trial % len(spec.env_dims)]
        rho, sigma = random_density(dim, rng), random_density(dim, rng)
        return _Inputs(states=[rho, sigma], channel=random_channel(dim, env_dim, rng))
    if kind in (ExperimentKind.JOINT_CONVEXITY_SQ, ExperimentKind.JOINT_CONVEXITY_RAW):
        # both endpoints are always exercised
        lam = {0: 0.0, 1: 1.0}.get(trial, float(rng.random()))
        return _Inputs(states=[random_density(dim, rng) for _ in range(4)], lam=lam)
    return _Inputs(states=[random_density(dim, rng), random_density(dim, rng)])


# -- checks -----------------------------------------------------------------


def _axiom_checks(spec: ExperimentSpec, dim: int, trial: int, inputs: _Inputs) -> List[_Check]:
    rho, sigma, omega, rho_eps = inputs.states
    f = _Probe(spec, dim, trial)
    tol = TOLERANCES.optimizer_equality if _optimizer_backed(spec, dim) else TOLERANCES.closed_form
    d_rs, d_sr = f(rho, sigma), f(sigma, rho)
    d_ro, d_so = f(rho, omega), f(sigma, omega)
    d_rr, d_eps = f(rho, rho), f(rho, rho_eps)
    return [
        _Check("M1", -d_rs, 0.0, tol),
        _Check("M2_identity", d_rr, 0.0, tol),
        # perturbed pairs must sit farther apart than the tolerance
        _Check("M2_separation", 2.0 * tol, d_eps, tol),
        _Check("M3", abs(d_rs - d_sr), 0.0, tol),
        _Check("M4", d_rs, d_ro + d_so, tol),
    ]


def _contractivity_checks(spec: ExperimentSpec, dim: int, trial: int, inputs: _Inputs) -> List[_Check]:
    rho, sigma = inputs.states
    f = _Probe(spec, dim, trial)
    tol = TOLERANCES.optimizer_composed if _optimizer_backed(spec, dim) else TOLERANCES.closed_form_composed
    out_rho, out_sigma = apply(inputs.channel, rho), apply(inputs.channel, sigma)
    return [_Check("contraction", f(out_rho, out_sigma), f(rho, sigma), tol)]


def _joint_convexity_checks(spec: ExperimentSpec, dim: int, trial: int, inputs: _Inputs) -> List[_Check]:
    rho1, rho2, sigma1, sigma2 = inputs.states
    lam = inputs.lam
    f = _Probe(spec, dim, trial, squared=spec.experiment == ExperimentKind.JOINT_CONVEXITY_SQ)
    tol = TOLERANCES.optimizer_composed if _optimizer_backed(spec, dim) else TOLERANCES.closed_form_composed
    lhs = f(mix(rho1, rho2, lam), mix(sigma1, sigma2, lam))
    rhs = lam * f(rho1, sigma1) + (1.0 - lam) * f(rho2, sigma2)
    return [_Check("joint_convexity", lhs, rhs, tol)]


def _upper_bound_checks(spec: ExperimentSpec, dim: int, trial: int, inputs: _Inputs, outcome: _Outcome) -> List[_Check]:
    rho, sigma = inputs.states
    result = t_metric_numeric(rho, sigma, _optimizer_config(spec, dim, trial))
    if not result.converged:
        raise _NotConverged()
    gap = upper_bound_gap(rho, sigma, result=result)
    outcome.observation = gap
    outcome.argmax_rank = matrix_rank(result.argmax_state)
    checks = [_Check("bound", -gap, 0.0, TOLERANCES.bound)]
    if dim == 2:
        checks.append(_Check("qubit_equality", abs(gap), 0.0, TOLERANCES.qubit_equality))
    return checks


def _theorem_checks(spec: ExperimentSpec, dim: int, trial: int, inputs: _Inputs, outcome: _Outcome) -> List[_Check]:
    rho, sigma = inputs.states
    kind = spec.experiment
    exact = TOLERANCES.closed_form

    if kind == ExperimentKind.SPECTRAL_REDUCTION:
        spectral = spectral_metric(rho, sigma)
        sampled = sampled_pt_maximum(rho, sigma, spec.oracle_samples, trial_stream(spec.seed, dim, trial, _ORACLE))
        top = pt_metric_witness(rho, sigma)
        attained = abs(fidelity_pure(rho, top) - fidelity_pure(sigma, top))
        outcome.observation = spectral - sampled
        checks = [
            _Check("never_exceeds", sampled, spectral, exact),
            _Check("eigenvector_attains", abs(spectral - attained), 0.0, exact),
        ]
        if dim <= 3:
            checks.append(_Check("approaches", spectral - sampled, 0.0, TOLERANCES.oracle_approach))
        return checks

    u, v = to_bloch(rho), to_bloch(sigma)
    if kind == ExperimentKind.THEOREM1:
        pt = pt_metric(rho, sigma)
        half_euclid = 0.5 * float(np.linalg.norm(u.as_array() - v.as_array()))
        return [
            _Check("pt_vs_bloch", abs(pt - half_euclid), 0.0, exact),
            _Check("pt_vs_trace", abs(pt - trace_distance(rho, sigma)), 0.0, exact),
        ]

    if kind == ExperimentKind.EQ5:
        form = bures_equivalent_form(rho, sigma)
        closed = metric_from_fidelity(MetricKind.BURES_METRIC, fidelity(rho, sigma))
        return [
            _Check("eq5_vs_bures", abs(form - bures_metric(rho, sigma)), 0.0, exact),
            _Check("eq5_vs_closed_form", abs(form - closed), 0.0, exact),
        ]

    if kind == ExperimentKind.THEOREM2:
        result = t_metric_numeric(rho, sigma, _optimizer_config(spec, dim, trial))
        if not result.converged:
            raise _NotConverged()
        sine = math.sqrt(max(0.0, 1.0 - fidelity(rho, sigma)))
        w = to_bloch(result.argmax_state).as_array()
        diff = u.as_array() - v.as_array()
        direction = diff / np.linalg.norm(diff)
        expected = optimal_tau_qubit(u, v).norm
        outcome.observation = result.value - sine
        outcome.argmax_rank = matrix_rank(result.argmax_state)
        align = TOLERANCES.argmax_alignment
        return [
            _Check("sine_equality", abs(result.value - sine), 0.0, TOLERANCES.qubit_equality),
            _Check("argmax_parallel", float(np.linalg.norm(np.cross(w, direction))), 0.0, align),
            _Check("argmax_magnitude", abs(float(np.linalg.norm(w)) - expected), 0.0, align),
        ]

    # optimal_tau: the derived magnitude against a dense grid over the Bloch ball
    grid_best = float(np.max(tau_objective_qubit(u, v, _bloch_grid(spec.grid_points))))
    derived = float(tau_objective_qubit(u, v, optimal_tau_qubit(u, v).as_array())[0])
    outcome.observation = printed_tau_magnitude(u, v)
    return [
        _Check("beats_grid", grid_best, derived, TOLERANCES.qubit_equality),
        _Check("reaches_sine", abs(derived - t_metric_qubit(u, v)), 0.0, TOLERANCES.closed_form),
    ]


def _evaluate(spec: ExperimentSpec, dim: int, trial: int, inputs: _Inputs) -> _Outcome:
    outcome = _Outcome(dim=dim, trial=trial, inputs=inputs)
    kind = spec.experiment
    try:
        if kind == ExperimentKind.AXIOMS:
            outcome.checks = _axiom_checks(spec, dim, trial, inputs)
        elif kind == ExperimentKind.CONTRACTIVITY:
            outcome.checks = _contractivity_checks(spec, dim, trial, inputs)
        elif kind in (ExperimentKind.JOINT_CONVEXITY_SQ, ExperimentKind.JOINT_CONVEXITY_RAW):
            outcome.checks = _joint_convexity_checks(spec, dim, trial, inputs)
        elif kind == ExperimentKind.UPPER_BOUND:
            outcome.checks = _upper_bound_checks(spec, dim, trial, inputs, outcome)
        else:
            outcome.checks = _theorem_checks(spec, dim, trial, inputs, outcome)
    except _NotConverged:
        outcome.skipped = True
    return outcome


# -- counterexample refinement ---------------------------------------------


def _nudge(rho: DensityMatrix, eta: float, rng: np.random.Generator) -> DensityMatrix:
    # qubits move in the Bloch ball and may land on its surface
    if rho.dim == 2:
        u = to_bloch(rho).as_array() + eta * rng.standard_normal(3)
        return from_bloch(BlochVector.from_array(u / max(1.0, float(np.linalg.norm(u)))))
    return perturb(rho, eta, rng)


def _refine(spec: ExperimentSpec, dim: int, outcomes: List[_Outcome], steps: int) -> List[_Outcome]:
    """Greedy local search around the worst candidate found by the random phase."""
    completed = [o for o in outcomes if not o.skipped and o.checks]
    if not completed or steps == 0:
        return []
    incumbent = max(completed, key=lambda o: (o.worst.excess, -o.trial))
    refined = []
    first = outcomes[-1].trial + 1
    for k in range(steps):
        trial = first + k
        rng = trial_stream(spec.seed, dim, trial, _INPUTS)
        eta = 0.2 * (1.0 - k / steps) + 1e-3
        base = incumbent.inputs
        states = [_nudge(s, eta, rng) for s in base.states]
        lam = float(np.clip(base.lam + 0.5 * eta * rng.standard_normal(), 0.0, 1.0))
        outcome = _evaluate(spec, dim, trial, _Inputs(states=states, lam=lam))
        refined.append(outcome)
        if not outcome.skipped and outcome.worst.excess > incumbent.worst.excess:
            incumbent = outcome
    return refined


# -- runner -----------------------------------------------------------------


def _run_trial(spec: ExperimentSpec, dim: int, trial: int) -> _Outcome:
    return _evaluate(spec, dim, trial, _sample_inputs(spec, dim, trial))


def _run_dim(spec: ExperimentSpec, dim: int) -> List[_Outcome]:
    refine_steps = min(spec.refine_steps, spec.trials // 2) if spec.is_counterexample_search else 0
    coarse = spec.trials - refine_steps
    run_trial = partial(_run_trial, spec, dim)

    # trials are independent and the simplex search holds the GIL, so they run in processes
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(run_trial, range(coarse), chunksize=max(1, coarse // (4 * spec.workers))))
    else:
        outcomes = [run_trial(t) for t in range(coarse)]
    return outcomes + _refine(spec, dim, outcomes, refine_steps)


def _witness(spec: ExperimentSpec, outcome: _Outcome, check: _Check) -> Witness:
    channel = outcome.inputs.channel
    return Witness(
        trial=outcome.trial,
        dim=outcome.dim,
        check=check.name,
        states=[state_to_json(s) for s in outcome.inputs.states],
        channel=channel_to_json(channel) if channel is not None else None,
        lam=outcome.inputs.lam,
        optimizer_seed=_optimizer_seed(spec, outcome.dim, outcome.trial),
        lhs=check.lhs,
        rhs=check.rhs,
        violation=check.excess,
    )


def _summarize(dim: int, outcomes: List[_Outcome]) -> DimensionSummary:
    done = [o for o in outcomes if not o.skipped]
    observed = [o.observation for o in done if o.observation is not None]
    ranks: Dict[str, int] = {}
    for o in done:
        if o.argmax_rank is not None:
            ranks[str(o.argmax_rank)] = ranks.get(str(o.argmax_rank), 0) + 1
    return DimensionSummary(
        dim=dim,
        trials_run=len(done),
        violations=sum(1 for o in done if any(c.violated for c in o.checks)),
        max_excess=max((o.worst.excess for o in done), default=None),
        min_observed=min(observed, default=None),
        mean_observed=float(np.mean(observed)) if observed else None,
        max_observed=max(observed, default=None),
        argmax_ranks=ranks,
    )


def _run(spec: ExperimentSpec) -> ExperimentReport:
    started = time.perf_counter()
    trials_run = violations = non_converged = 0
    worst: Optional[Tuple[float, Witness]] = None
    margin = -math.inf
    summary: List[DimensionSummary] = []
    records: List[TrialRecord] = []

    for dim in spec.dims:
        outcomes = _run_dim(spec, dim)
        summary.append(_summarize(dim, outcomes))
        for o in outcomes:
            if o.skipped:
                non_converged += 1
                records.append(TrialRecord(dim=dim, trial=o.trial, check="", excess=math.nan, skipped=True))
                continue
            trials_run += 1
            top = o.worst
            records.append(TrialRecord(dim=dim, trial=o.trial, check=top.name, excess=top.excess))
            margin = max(margin, top.excess)
            if top.violated:
                violations += 1
                if worst is None or top.excess > worst[0]:
                    worst = (top.excess, _witness(spec, o, top))

    report = ExperimentReport(
        spec=spec,
        trials_run=trials_run,
        violations=violations,
        max_violation=worst[0] if worst else (margin if trials_run else 0.0),
        witness=worst[1] if worst else None,
        non_converged=non_converged,
        wall_time_s=time.perf_counter() - started,
        summary=summary,
        records=records,
    )
    logger.info(
        "%s/%s: %d trials, %d violations, max excess %.3e, %d non-converged in %s",
        spec.experiment.value, spec.metric.value, trials_run, violations,
        report.max_violation, non_converged, format_seconds(report.wall_time_s),
    )
    return report


def _expect(spec: ExperimentSpec, *kinds: ExperimentKind) -> None:
    if spec.experiment not in kinds:
        raise ParameterError(
            f"experiment {spec.experiment.value!r} is not one of {[k.value for k in kinds]}"
        )


def run_axioms(spec: ExperimentSpec) -> ExperimentReport:
    """M1-M4 for the selected metric over random triples."""
    _expect(spec, ExperimentKind.AXIOMS)
    return _run(spec)


def run_contractivity(spec: ExperimentSpec) -> ExperimentReport:
    """d(Phi rho, Phi sigma) <= d(rho, sigma) over random Stinespring channels."""
    _expect(spec, ExperimentKind.CONTRACTIVITY)
    return _run(spec)


def run_joint_convexity(spec: ExperimentSpec, squared: bool) -> ExperimentReport:
    """Joint convexity of d (or d^2). For the raw T-metric this is a counterexample search."""
    kind = ExperimentKind.JOINT_CONVEXITY_SQ if squared else ExperimentKind.JOINT_CONVEXITY_RAW
    return _run(spec.model_copy(update={"experiment": kind}))


def run_upper_bound(spec: ExperimentSpec) -> ExperimentReport:
    """Numeric T-metric against sqrt(1 - F); gap statistics per dimension land in the summary."""
    _expect(spec, ExperimentKind.UPPER_BOUND)
    return _run(spec)


def run_theorem_checks(spec: ExperimentSpec) -> ExperimentReport:
    _expect(spec, *THEOREM_KINDS)
    if spec.experiment in QUBIT_ONLY and any(d != 2 for d in spec.dims):
        raise ParameterError(f"{spec.experiment.value} is a qubit statement; dims must be [2], got {spec.dims}")
    return _run(spec)


_RUNNERS: Dict[ExperimentKind, Callable[[ExperimentSpec], ExperimentReport]] = {
    ExperimentKind.AXIOMS: run_axioms,
    ExperimentKind.CONTRACTIVITY: run_contractivity,
    ExperimentKind.JOINT_CONVEXITY_SQ: lambda s: run_joint_convexity(s, squared=True),
    ExperimentKind.JOINT_CONVEXITY_RAW: lambda s: run_joint_convexity(s, squared=False),
    ExperimentKind.UPPER_BOUND: run_upper_bound,
    **{k: run_theorem_checks for k in THEOREM_KINDS},
}


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    return _RUNNERS[spec.experiment](spec)


# -- persistence and replay -------------------------------------------------


def replay_witness(report: ExperimentReport) -> float:
    """Recompute the violated inequality from the persisted witness; returns its excess."""
    witness = report.witness
    if witness is None:
        raise ParameterError("report carries no witness")
    inputs = _Inputs(
        states=[state_from_json(s, f"witness state {i}") for i, s in enumerate(witness.states)],
        channel=channel_from_json(witness.channel, "witness channel") if witness.channel else None,
        lam=witness.lam,
    )
    outcome = _evaluate(report.spec, witness.dim, witness.trial, inputs)
    for check in outcome.checks:
        if check.name == witness.check:
            return check.excess
    raise ParameterError(f"witness check {witness.check!r} was not re-evaluated (optimizer did not converge)")


def write_report(report: ExperimentReport, path, csv_path=None) -> None:
    Path(path).write_text(report.model_dump_json(indent=2, by_alias=True))
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dim", "trial", "check", "excess", "skipped"])
            for r in report.records:
                writer.writerow([r.dim, r.trial, r.check, repr(r.excess), int(r.skipped)])


def load_report(path) -> ExperimentReport:
    doc = parse_json(Path(path).read_text(), str(path))
    return ExperimentReport.model_validate(doc)
