import numpy as np
import pytest

from fidelity_metrics.models.quantum import BlochVector, OptimizerConfig
from fidelity_metrics.services.state_engine import from_bloch, validate


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def fast_optimizer():
    """Small search budget that still converges on qutrits."""
    return OptimizerConfig(restarts=4, max_iterations=1500, value_tolerance=1e-9, polish_rounds=2, seed=3)


@pytest.fixture
def ket0():
    return from_bloch(BlochVector(u3=1.0))


@pytest.fixture
def ket1():
    return from_bloch(BlochVector(u3=-1.0))


@pytest.fixture
def maximally_mixed():
    return validate(np.eye(2) / 2)
