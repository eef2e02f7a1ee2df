"""Tests for the T-metric: qubit closed form, optimal state and the multi-start search."""

import math

import numpy as np
import pytest

from fidelity_metrics.errors import BlochOutOfBallError, DimensionMismatchError, UndefinedDirectionError
from fidelity_metrics.models.quantum import BlochVector
from fidelity_metrics.services import tmetric_engine
from fidelity_metrics.services.fidelity_engine import fidelity
from fidelity_metrics.services.metric_engine import bures_metric, pt_metric, pt_metric_witness, sine_metric
from fidelity_metrics.services.state_engine import (
    from_bloch,
    purify_projector,
    random_bloch,
    random_density,
    trial_stream,
    validate,
)
from fidelity_metrics.services.tmetric_engine import (
    bures_equivalent_form,
    cross_check_t_metric,
    optimal_tau_qubit,
    printed_tau_magnitude,
    t_metric,
    t_metric_numeric,
    t_metric_qubit,
    tau_objective_qubit,
    upper_bound_gap,
)

NORTH = BlochVector(u3=1.0)
SOUTH = BlochVector(u3=-1.0)
ORIGIN = BlochVector()


class TestTMetricQubit:

    def test_antipodal(self):
        assert t_metric_qubit(NORTH, SOUTH) == pytest.approx(1.0)

    def test_identical(self, rng):
        u = random_bloch(rng)
        assert t_metric_qubit(u, u) == 0.0

    def test_pure_against_center(self):
        assert t_metric_qubit(NORTH, ORIGIN) == pytest.approx(math.sqrt(0.5))

    def test_out_of_ball(self):
        with pytest.raises(BlochOutOfBallError):
            t_metric_qubit(BlochVector(u1=1.0, u3=1.0), ORIGIN)

    def test_equals_sine_metric(self, rng):
        for _ in range(50):
            u, v = random_bloch(rng), random_bloch(rng)
            assert t_metric_qubit(u, v) == pytest.approx(sine_metric(from_bloch(u), from_bloch(v)), abs=1e-9)


class TestOptimalTau:

    def test_antipodal_pure(self):
        np.testing.assert_allclose(optimal_tau_qubit(NORTH, SOUTH).as_array(), [0.0, 0.0, 1.0])

    def test_undefined_for_equal_vectors(self):
        with pytest.raises(UndefinedDirectionError):
            optimal_tau_qubit(ORIGIN, ORIGIN)

    def test_attains_closed_form(self, rng):
        for _ in range(50):
            u, v = random_bloch(rng), random_bloch(rng)
            w = optimal_tau_qubit(u, v)
            assert w.norm <= 1.0 + 1e-12
            attained = tau_objective_qubit(u, v, w.as_array())[0]
            assert attained == pytest.approx(t_metric_qubit(u, v), abs=1e-9)

    def test_direction_follows_mixedness(self):
        mixed, pure = BlochVector(u3=0.2), BlochVector(u3=0.9)
        # points away from the purer state whichever argument it is
        assert optimal_tau_qubit(mixed, pure).u3 < 0
        assert optimal_tau_qubit(pure, mixed) == optimal_tau_qubit(mixed, pure)

    def test_random_states_never_beat_it(self, rng):
        u, v = random_bloch(rng), random_bloch(rng)
        samples = np.array([random_bloch(rng).as_array() for _ in range(5000)])
        assert tau_objective_qubit(u, v, samples).max() <= t_metric_qubit(u, v) + 1e-12

    def test_printed_magnitude_leaves_the_ball(self):
        assert printed_tau_magnitude(NORTH, SOUTH) == pytest.approx(2.0)
        assert optimal_tau_qubit(NORTH, SOUTH).norm == pytest.approx(1.0)


class TestTMetricNumeric:

    def test_qubit_antipodal(self, ket0, ket1, fast_optimizer):
        result = t_metric_numeric(ket0, ket1, fast_optimizer)
        assert result.value == pytest.approx(1.0, abs=1e-6)

    def test_identical_is_zero_and_converged(self, rng, fast_optimizer):
        rho = random_density(3, rng)
        result = t_metric_numeric(rho, rho, fast_optimizer)
        assert result.value == 0.0
        assert result.converged

    def test_qutrit_between_bounds(self, fast_optimizer):
        rng = trial_stream(7, 3)
        rho, sigma = random_density(3, rng), random_density(3, rng)
        result = t_metric_numeric(rho, sigma, fast_optimizer)
        assert pt_metric(rho, sigma) - 1e-10 <= result.value <= sine_metric(rho, sigma) + 1e-8
        tau = result.argmax_state
        assert abs(fidelity(rho, tau) - fidelity(sigma, tau)) == pytest.approx(result.value, abs=1e-12)

    def test_deterministic_for_fixed_seed(self, fast_optimizer):
        rng = trial_stream(1, 3)
        rho, sigma = random_density(3, rng), random_density(3, rng)
        first = t_metric_numeric(rho, sigma, fast_optimizer)
        second = t_metric_numeric(rho, sigma, fast_optimizer)
        assert first.value == second.value
        assert first.argmax_state == second.argmax_state

    def test_worker_pool_matches_serial(self, fast_optimizer):
        rng = trial_stream(2, 3)
        rho, sigma = random_density(3, rng), random_density(3, rng)
        serial = t_metric_numeric(rho, sigma, fast_optimizer)
        pooled = t_metric_numeric(rho, sigma, fast_optimizer.model_copy(update={"workers": 3}))
        assert pooled.value == serial.value

    def test_two_parametrizations_agree(self, fast_optimizer):
        rng = trial_stream(4, 3)
        rho, sigma = random_density(3, rng), random_density(3, rng)
        check = cross_check_t_metric(rho, sigma, fast_optimizer)
        assert check.full.converged and check.ranked.converged
        assert check.agree

    def test_collapsed_factor_falls_back_to_anchor(self, monkeypatch, fast_optimizer):
        rng = trial_stream(5, 3)
        rho, sigma = random_density(3, rng), random_density(3, rng)
        monkeypatch.setattr(tmetric_engine._Objective, "state", lambda self, x: None)
        result = t_metric_numeric(rho, sigma, fast_optimizer)
        anchor = purify_projector(pt_metric_witness(rho, sigma))
        np.testing.assert_allclose(result.argmax_state.matrix, anchor.matrix, atol=1e-12)
        assert result.value == pytest.approx(pt_metric(rho, sigma), abs=1e-9)

    def test_qubit_search_reaches_sine_metric(self):
        rng = trial_stream(6, 2)
        rho, sigma = random_density(2, rng), random_density(2, rng)
        result = t_metric_numeric(rho, sigma)
        assert result.converged
        assert result.value == pytest.approx(sine_metric(rho, sigma), abs=1e-6)


class TestTMetricDispatch:

    def test_qubit_uses_closed_form(self, rng):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        result = t_metric(rho, sigma)
        assert result.iterations_used == 0
        assert result.value == pytest.approx(sine_metric(rho, sigma), abs=1e-9)
        tau = result.argmax_state
        assert abs(fidelity(rho, tau) - fidelity(sigma, tau)) == pytest.approx(result.value, abs=1e-9)

    def test_dimension_mismatch(self, ket0):
        with pytest.raises(DimensionMismatchError):
            t_metric(ket0, validate(np.eye(3) / 3))


class TestBuresEquivalentForm:

    def test_identical(self, ket0):
        assert bures_equivalent_form(ket0, ket0) == 0.0

    def test_antipodal(self, ket0, ket1):
        assert bures_equivalent_form(ket0, ket1) == pytest.approx(math.sqrt(2))

    def test_half_fidelity(self, ket0, maximally_mixed):
        assert bures_equivalent_form(ket0, maximally_mixed) == pytest.approx(math.sqrt(2 - math.sqrt(2)), abs=1e-9)

    def test_matches_bures_metric(self, rng):
        for _ in range(50):
            rho, sigma = random_density(2, rng), random_density(2, rng)
            assert bures_equivalent_form(rho, sigma) == pytest.approx(bures_metric(rho, sigma), abs=1e-9)

    def test_qubits_only(self, rng):
        with pytest.raises(DimensionMismatchError):
            bures_equivalent_form(random_density(3, rng), random_density(3, rng))


class TestUpperBoundGap:

    def test_identical_is_exactly_zero(self, rng):
        rho = random_density(3, rng)
        assert upper_bound_gap(rho, rho) == 0.0

    def test_qubit_gap_vanishes(self, fast_optimizer):
        rng = trial_stream(9, 2)
        rho, sigma = random_density(2, rng), random_density(2, rng)
        assert upper_bound_gap(rho, sigma, fast_optimizer) == pytest.approx(0.0, abs=1e-6)

    def test_qudit_gap_non_negative(self, fast_optimizer):
        rng = trial_stream(9, 4)
        rho, sigma = random_density(4, rng), random_density(4, rng)
        assert upper_bound_gap(rho, sigma, fast_optimizer) >= -1e-8
