"""Tests for the Hermitian kernels."""

import numpy as np
import pytest

from fidelity_metrics.errors import NotHermitianError, NotPSDError, ParameterError
from fidelity_metrics.services.linalg_engine import (
    check_hermitian,
    eigvalsh,
    hermitian_eig,
    largest_eigenvalue,
    psd_sqrt,
    smallest_eigenvalue,
)


class TestHermitianEig:

    def test_diagonal_sorted_ascending(self):
        vals, vecs = hermitian_eig(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(vals, [1.0, 2.0])
        np.testing.assert_allclose(np.abs(vecs), [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)

    def test_pauli_x(self):
        vals, _ = hermitian_eig([[0, 1], [1, 0]])
        np.testing.assert_allclose(vals, [-1.0, 1.0], atol=1e-15)

    def test_identity_gives_orthonormal_triple(self):
        vals, vecs = hermitian_eig(np.eye(3))
        np.testing.assert_allclose(vals, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(3), atol=1e-14)

    def test_reconstruction(self, rng):
        g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        h = g + g.conj().T
        vals, vecs = hermitian_eig(h)
        np.testing.assert_allclose((vecs * vals) @ vecs.conj().T, h, atol=1e-8)
        assert np.all(np.diff(vals) >= 0)

    def test_first_component_real_positive(self, rng):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        _, vecs = hermitian_eig(g + g.conj().T)
        for k in range(4):
            col = vecs[:, k]
            lead = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert lead.real > 0 and abs(lead.imag) < 1e-14

    def test_near_tie_keeps_ascending_order(self):
        vals, vecs = hermitian_eig(np.diag([1.0 + 5e-11, 1.0]))
        assert np.all(np.diff(vals) >= 0)
        np.testing.assert_allclose(np.abs(vecs[:, 1]), [1.0, 0.0], atol=1e-15)
        assert largest_eigenvalue(np.diag([1.0 + 5e-11, 1.0])) == 1.0 + 5e-11

    def test_exact_tie_ordered_by_leading_component(self):
        _, vecs = hermitian_eig(np.diag([0.5, 0.5]))
        np.testing.assert_allclose(vecs, np.eye(2), atol=1e-15)

    def test_non_hermitian_names_pair(self):
        with pytest.raises(NotHermitianError) as exc:
            hermitian_eig([[1.0, 0.0, 0.0], [0.0, 1.0, 0.5], [0.0, 0.0, 1.0]])
        assert exc.value.pair == (1, 2)
        assert exc.value.deviation == pytest.approx(0.5)

    def test_rejects_non_square(self):
        with pytest.raises(ParameterError):
            check_hermitian(np.zeros((2, 3)))


class TestPsdSqrt:

    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(2)), np.eye(2), atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_projector_is_idempotent(self):
        p = np.diag([1.0, 0.0])
        np.testing.assert_allclose(psd_sqrt(p), p, atol=1e-15)

    def test_squares_back(self, rng):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a = g @ g.conj().T
        root = psd_sqrt(a)
        np.testing.assert_allclose(root @ root, a, atol=1e-10)

    def test_small_negative_clamped(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([1.0, -1e-12])), np.diag([1.0, 0.0]))

    def test_negative_eigenvalue_raises(self):
        with pytest.raises(NotPSDError) as exc:
            psd_sqrt(np.diag([1.0, -0.5]))
        assert exc.value.eigenvalue == pytest.approx(-0.5)


class TestExtremeEigenvalues:

    @pytest.mark.parametrize(
        "diag, expected",
        [([1.0, -1.0], 1.0), ([0.0, 0.0], 0.0), ([-0.5, 0.5], 0.5)],
    )
    def test_largest(self, diag, expected):
        assert largest_eigenvalue(np.diag(diag)) == pytest.approx(expected)

    def test_smallest_is_negated_largest(self, rng):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h = g + g.conj().T
        assert smallest_eigenvalue(h) == -largest_eigenvalue(-h)
        assert smallest_eigenvalue(h) == pytest.approx(eigvalsh(h)[0])
