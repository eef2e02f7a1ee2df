import logging
from typing import Any, Dict

from fastapi import APIRouter, HTTPException

from fidelity_metrics.errors import FidelityMetricsError
from fidelity_metrics.models.api import ComputeRequest, ComputeResponse, SampleKind, SampleRequest
from fidelity_metrics.models.experiment import ExperimentReport, ExperimentSpec
from fidelity_metrics.services.channel_engine import channel_to_json, random_channel
from fidelity_metrics.services.harness_engine import run_experiment
from fidelity_metrics.services.metric_engine import evaluate_metric
from fidelity_metrics.services.state_engine import (
    pure_to_json,
    random_density,
    random_pure,
    state_from_json,
    state_to_json,
    trial_stream,
)

logger = logging.getLogger(__name__)

router = APIRouter()


# Handlers are sync so FastAPI runs the numerics in its worker pool.
@router.post("/api/compute", response_model=ComputeResponse)
def compute(request: ComputeRequest):
    try:
        rho = state_from_json(request.state_a, "state_a")
        sigma = state_from_json(request.state_b, "state_b")
        ev = evaluate_metric(request.metric, rho, sigma, request.optimizer, numeric=request.numeric)
        return ComputeResponse(
            metric=ev.kind,
            value=ev.value,
            converged=ev.converged,
            argmax_state=state_to_json(ev.argmax_state) if ev.argmax_state is not None else None,
        )
    except FidelityMetricsError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.exception("compute failed")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/api/sample")
def sample(request: SampleRequest) -> Dict[str, Any]:
    try:
        rng = trial_stream(request.seed, request.dim)
        if request.kind == SampleKind.STATE:
            return state_to_json(random_density(request.dim, rng))
        if request.kind == SampleKind.PURE:
            return pure_to_json(random_pure(request.dim, rng))
        return channel_to_json(random_channel(request.dim, request.env_dim, rng))
    except FidelityMetricsError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.exception("sampling failed")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/api/verify", response_model=ExperimentReport)
def verify(spec: ExperimentSpec):
    try:
        return run_experiment(spec)
    except FidelityMetricsError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.exception("experiment %s failed", spec.experiment.value)
        raise HTTPException(status_code=500, detail=str(e))
