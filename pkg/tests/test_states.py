"""Tests for state validation, Bloch parametrization and the random ensembles."""

import numpy as np
import pytest

from fidelity_metrics.errors import (
    BlochOutOfBallError,
    DimensionMismatchError,
    FormatError,
    NormError,
    StateValidationError,
)
from fidelity_metrics.models.quantum import BlochVector
from fidelity_metrics.services.state_engine import (
    PAULI,
    from_bloch,
    matrix_rank,
    mix,
    pure_from_json,
    pure_state,
    pure_to_json,
    purify_projector,
    purity,
    random_bloch,
    random_density,
    random_pure,
    random_unitary,
    state_from_json,
    state_to_json,
    to_bloch,
    trial_stream,
    validate,
)


class TestValidate:

    def test_maximally_mixed_is_valid(self):
        rho = validate(np.eye(2) / 2)
        assert rho.dim == 2
        assert not rho.matrix.flags.writeable

    def test_trace_violation_reports_trace(self):
        with pytest.raises(StateValidationError) as exc:
            validate(np.diag([0.6, 0.6]))
        assert exc.value.kinds == ["trace"]
        assert exc.value.deviation("trace") == pytest.approx(1.2)

    def test_psd_violation_reports_eigenvalue(self):
        with pytest.raises(StateValidationError) as exc:
            validate(np.diag([1.5, -0.5]))
        assert exc.value.kinds == ["psd"]
        assert exc.value.deviation("psd") == pytest.approx(-0.5)

    def test_all_violations_listed(self):
        with pytest.raises(StateValidationError) as exc:
            validate([[2.0, 1.0], [0.0, -1.5]])
        assert set(exc.value.kinds) == {"hermiticity", "trace", "psd"}

    def test_rejects_one_dimensional(self):
        with pytest.raises(StateValidationError):
            validate([[1.0]])


class TestBloch:

    def test_origin_is_maximally_mixed(self):
        np.testing.assert_allclose(from_bloch(BlochVector()).matrix, np.eye(2) / 2)

    def test_north_pole(self):
        np.testing.assert_allclose(from_bloch(BlochVector(u3=1.0)).matrix, np.diag([1.0, 0.0]))

    def test_plus_state(self):
        np.testing.assert_allclose(from_bloch(BlochVector(u1=1.0)).matrix, 0.5 * np.ones((2, 2)))

    def test_outside_ball(self):
        with pytest.raises(BlochOutOfBallError):
            from_bloch(BlochVector(u1=0.8, u2=0.8))

    @pytest.mark.parametrize(
        "matrix, expected",
        [
            (np.eye(2) / 2, (0.0, 0.0, 0.0)),
            (np.diag([1.0, 0.0]), (0.0, 0.0, 1.0)),
            (0.5 * (np.eye(2) + 0.5 * PAULI[2]), (0.0, 0.0, 0.5)),
        ],
    )
    def test_to_bloch(self, matrix, expected):
        np.testing.assert_allclose(to_bloch(validate(matrix)).as_array(), expected, atol=1e-15)

    def test_round_trip(self, rng):
        for _ in range(20):
            u = random_bloch(rng)
            np.testing.assert_allclose(to_bloch(from_bloch(u)).as_array(), u.as_array(), atol=1e-14)

    def test_to_bloch_needs_qubit(self):
        with pytest.raises(DimensionMismatchError):
            to_bloch(validate(np.eye(3) / 3))


class TestPureStates:

    @pytest.mark.parametrize(
        "amps, expected",
        [
            ([1, 0], np.diag([1.0, 0.0])),
            (np.array([1, 1]) / np.sqrt(2), 0.5 * np.ones((2, 2))),
            (np.array([1, 1j]) / np.sqrt(2), 0.5 * np.array([[1, -1j], [1j, 1]])),
        ],
    )
    def test_projector(self, amps, expected):
        np.testing.assert_allclose(purify_projector(pure_state(amps)).matrix, expected, atol=1e-15)

    def test_unnormalized_rejected(self):
        with pytest.raises(NormError):
            pure_state([1.0, 1.0])


class TestEnsembles:

    def test_pure_is_deterministic(self):
        a = random_pure(2, trial_stream(11, 2))
        b = random_pure(2, trial_stream(11, 2))
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)

    def test_pure_normalized_and_unbiased(self, rng):
        d = 3
        total = np.zeros((d, d), dtype=complex)
        n = 20_000
        for _ in range(n):
            psi = random_pure(d, rng)
            assert abs(np.vdot(psi.amplitudes, psi.amplitudes).real - 1.0) < 1e-12
            total += np.outer(psi.amplitudes, psi.amplitudes.conj())
        np.testing.assert_allclose(total / n, np.eye(d) / d, atol=0.01)

    def test_density_is_deterministic_and_valid(self):
        a = random_density(4, trial_stream(5, 4, 0))
        b = random_density(4, trial_stream(5, 4, 0))
        np.testing.assert_array_equal(a.matrix, b.matrix)
        validate(a.matrix)
        assert matrix_rank(a) == 4

    def test_density_mean(self, rng):
        n = 20_000
        total = sum(random_density(2, rng).matrix for _ in range(n))
        np.testing.assert_allclose(total / n, np.eye(2) / 2, atol=0.01)

    def test_unitary_is_unitary(self, rng):
        u = random_unitary(4, rng)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)

    def test_streams_are_independent(self):
        a = random_density(3, trial_stream(1, 3, 0))
        b = random_density(3, trial_stream(1, 3, 1))
        assert not np.allclose(a.matrix, b.matrix)


class TestOperations:

    def test_mix_endpoints(self, ket0, ket1):
        assert mix(ket0, ket1, 1.0) == ket0
        assert mix(ket0, ket1, 0.0) == ket1
        np.testing.assert_allclose(mix(ket0, ket1, 0.5).matrix, np.eye(2) / 2)

    def test_purity(self, ket0, maximally_mixed):
        assert purity(ket0) == pytest.approx(1.0)
        assert purity(maximally_mixed) == pytest.approx(0.5)


class TestJson:

    def test_state_round_trip_is_exact(self, rng):
        rho = random_density(3, rng)
        assert state_from_json(state_to_json(rho)) == rho

    def test_pure_round_trip(self, rng):
        psi = random_pure(3, rng)
        assert pure_from_json(pure_to_json(psi)) == psi

    def test_dim_mismatch(self):
        doc = state_to_json(validate(np.eye(2) / 2))
        doc["dim"] = 3
        with pytest.raises(FormatError):
            state_from_json(doc)

    def test_bad_entry(self):
        with pytest.raises(FormatError):
            state_from_json({"dim": 2, "matrix": [[[0.5, 0.0], [0.0]], [[0.0, 0.0], [0.5, 0.0]]]})

    def test_invalid_state_surfaces_validation(self):
        doc = {"dim": 2, "matrix": [[[0.6, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.6, 0.0]]]}
        with pytest.raises(StateValidationError):
            state_from_json(doc)
