"""Command line: compute a metric, verify a claim, sample states and channels, serve HTTP."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from fidelity_metrics.errors import FidelityMetricsError, FormatError, UsageError
from fidelity_metrics.models.experiment import ExperimentKind, ExperimentSpec
from fidelity_metrics.models.quantum import MetricKind, OptimizerConfig
from fidelity_metrics.services.channel_engine import channel_to_json, random_channel
from fidelity_metrics.services.harness_engine import run_experiment, write_report
from fidelity_metrics.services.metric_engine import evaluate_metric
from fidelity_metrics.services.state_engine import (
    pure_to_json,
    random_density,
    random_pure,
    state_from_json,
    state_to_json,
    trial_stream,
)
from fidelity_metrics.utils.formatters import format_value, parse_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VIOLATIONS = 2
EXIT_NOT_CONVERGED = 3

# trial counts each claim is checked at when --trials is not given
DEFAULT_TRIALS = {
    ExperimentKind.AXIOMS: 1_000,
    ExperimentKind.CONTRACTIVITY: 1_000,
    ExperimentKind.JOINT_CONVEXITY_SQ: 10_000,
    ExperimentKind.JOINT_CONVEXITY_RAW: 100_000,
    ExperimentKind.UPPER_BOUND: 1_000,
    ExperimentKind.THEOREM1: 1_000,
    ExperimentKind.THEOREM2: 1_000,
    ExperimentKind.EQ5: 1_000,
    ExperimentKind.SPECTRAL_REDUCTION: 100,
    ExperimentKind.OPTIMAL_TAU: 100,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fidelity-metrics", description=__doc__)
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    compute = sub.add_parser("compute", help="distance between two states stored as JSON")
    compute.add_argument("--metric", required=True, choices=[k.value for k in MetricKind])
    compute.add_argument("states", nargs="*", help="state files a and b (alternative to --state-a/--state-b)")
    compute.add_argument("--state-a")
    compute.add_argument("--state-b")
    compute.add_argument("--optimizer-restarts", type=int, default=OptimizerConfig().restarts)
    compute.add_argument("--seed", type=int, default=0)
    compute.add_argument("--numeric", action="store_true", help="use the optimizer for qubits too")
    compute.add_argument("--argmax-out", default="tmetric_argmax.json")

    verify = sub.add_parser("verify", help="run a seeded Monte-Carlo experiment")
    verify.add_argument("experiment", choices=[k.value for k in ExperimentKind] + ["joint_convexity"])
    verify.add_argument("--metric", default=MetricKind.T_METRIC.value, choices=[k.value for k in MetricKind])
    verify.add_argument("--dims", type=_int_list, default=[2])
    verify.add_argument("--trials", type=int, help="defaults to the size the claim is checked at")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--env-dims", type=_int_list, default=[1])
    verify.add_argument("--squared", action="store_true")
    verify.add_argument("--optimizer-restarts", type=int, default=OptimizerConfig().restarts)
    verify.add_argument("--max-iterations", type=int, default=OptimizerConfig().max_iterations)
    verify.add_argument("--workers", type=int, default=1)
    verify.add_argument("--oracle-samples", type=int, default=100_000)
    verify.add_argument("--grid-points", type=int, default=1_000_000)
    verify.add_argument("--refine-steps", type=int, default=2000)
    verify.add_argument("--max-non-converged", type=float, default=0.01,
                        help="largest tolerated fraction of non-converged trials")
    verify.add_argument("--out", help="report path (default report_<experiment>_<seed>.json)")
    verify.add_argument("--csv", help="optional CSV of per-trial excesses")

    sample = sub.add_parser("sample", help="emit a random state, pure state or channel as JSON")
    sample.add_argument("--kind", required=True, choices=["state", "pure", "channel"])
    sample.add_argument("--dim", type=int, required=True)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--env-dim", type=int, default=1)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_state(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    return state_from_json(parse_json(text, path), path)


def _compute(args) -> int:
    paths = list(args.states)
    if args.state_a or args.state_b:
        if paths or not (args.state_a and args.state_b):
            raise UsageError("give both --state-a and --state-b, or two positional state files")
        paths = [args.state_a, args.state_b]
    if len(paths) != 2:
        raise UsageError(f"compute needs exactly two state files, got {len(paths)}")
    rho, sigma = (_load_state(p) for p in paths)
    kind = MetricKind(args.metric)
    cfg = OptimizerConfig(restarts=args.optimizer_restarts, seed=args.seed)
    ev = evaluate_metric(kind, rho, sigma, cfg, numeric=args.numeric)
    print(format_value(ev.value))
    if kind == MetricKind.T_METRIC:
        Path(args.argmax_out).write_text(json.dumps(state_to_json(ev.argmax_state)))
        print(f"argmax_state: {args.argmax_out}")
        if not ev.converged:
            logger.warning("optimizer restarts did not agree; value is a lower bound")
            return EXIT_NOT_CONVERGED
    return EXIT_OK


def _verify(args) -> int:
    experiment = args.experiment
    if experiment.startswith("joint_convexity"):
        experiment = "joint_convexity_sq" if args.squared or experiment == "joint_convexity_sq" else "joint_convexity_raw"
    kind = ExperimentKind(experiment)
    spec = ExperimentSpec(
        experiment=kind,
        metric=MetricKind(args.metric),
        dims=args.dims,
        trials=DEFAULT_TRIALS[kind] if args.trials is None else args.trials,
        seed=args.seed,
        env_dims=args.env_dims,
        optimizer=OptimizerConfig(restarts=args.optimizer_restarts, max_iterations=args.max_iterations),
        workers=args.workers,
        oracle_samples=args.oracle_samples,
        grid_points=args.grid_points,
        refine_steps=args.refine_steps,
    )
    report = run_experiment(spec)
    out = args.out or f"report_{spec.experiment.value}_{spec.seed}.json"
    write_report(report, out, args.csv)
    print(
        f"{spec.experiment.value}: trials_run={report.trials_run} violations={report.violations} "
        f"max_violation={report.max_violation:.3e} non_converged={report.non_converged} report={out}"
    )
    if report.unexpected:
        return EXIT_VIOLATIONS
    attempted = report.trials_run + report.non_converged
    if attempted and report.non_converged / attempted > args.max_non_converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _sample(args) -> int:
    rng = trial_stream(args.seed, args.dim)
    if args.kind == "state":
        doc = state_to_json(random_density(args.dim, rng))
    elif args.kind == "pure":
        doc = pure_to_json(random_pure(args.dim, rng))
    else:
        doc = channel_to_json(random_channel(args.dim, args.env_dim, rng))
    print(json.dumps(doc))
    return EXIT_OK


def _serve(args) -> int:
    import uvicorn

    uvicorn.run("fidelity_metrics.main:app", host=args.host, port=args.port)
    return EXIT_OK


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    handlers = {"compute": _compute, "verify": _verify, "sample": _sample, "serve": _serve}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
    except ValidationError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
    except FidelityMetricsError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
    return EXIT_INVALID


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
