"""
Tests for the small linear algebra helpers.
Run from project root with: pytest tests/test_linalg_core.py
"""

import numpy as np
import pytest

from src.linalg_core import DensityMatrix4, SpectrumError, eig_nonneg4, tensor, validate_density
from src.measures import spin_flip

LABELS = ('00', '01', '10', '11')


def random_density(rng, dim):
    """Full-rank density matrix G G† / trace"""
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def test_tensor_identity():
    """Test I2 ⊗ I2 = I4."""
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_block_convention():
    """Test entry (j*p + r, k*p + s) = A[j, k] * B[r, s]."""
    A = np.array([[1, 2j], [3, 4]])
    B = np.array([[5, 6], [7j, 8]])
    K = tensor(A, B)
    for j in range(2):
        for k in range(2):
            for r in range(2):
                for s in range(2):
                    assert K[j * 2 + r, k * 2 + s] == A[j, k] * B[r, s]


def test_tensor_of_pair_state():
    """Test the total state has ab on both middle diagonal entries and |c|² at (2,3)."""
    a, b, c = 0.7, 0.3, 0.2
    rho = np.array([[a, c], [c, b]])
    K = tensor(rho, rho)
    assert K[1, 1] == pytest.approx(a * b)
    assert K[2, 2] == pytest.approx(a * b)
    assert K[1, 2] == pytest.approx(c * c)
    assert np.trace(K).real == pytest.approx(1.0)


def test_tensor_rejects_non_square():
    with pytest.raises(ValueError):
        tensor(np.ones((2, 3)), np.eye(2))


def test_tensor_associative_and_trace_multiplicative():
    """Test (A⊗B)⊗C = A⊗(B⊗C) and trace(A⊗B) = trace(A)·trace(B) on random density matrices."""
    rng = np.random.default_rng(7)
    for dims in [(2, 2, 2), (2, 3, 2), (3, 2, 2)]:
        A, B, C = (random_density(rng, d) for d in dims)
        left = tensor(tensor(A, B), C)
        right = tensor(A, tensor(B, C))
        assert np.max(np.abs(left - right)) <= 1e-14
        assert abs(np.trace(tensor(A, B)) - np.trace(A) * np.trace(B)) <= 1e-14
        assert abs(np.trace(tensor(A, B)) - 1.0) <= 1e-14


def test_density_matrix_is_read_only_copy():
    """Test DensityMatrix4 keeps its own immutable copy of the entries."""
    source = np.eye(4) / 4
    rho = DensityMatrix4(source, LABELS)
    source[0, 0] = 1.0
    assert rho.entries[0, 0] == 0.25
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 0.5


def test_density_matrix_rejects_bad_shape_and_labels():
    with pytest.raises(ValueError):
        DensityMatrix4(np.eye(2), LABELS)
    with pytest.raises(ValueError):
        DensityMatrix4(np.eye(4), LABELS[:3])
    with pytest.raises(ValueError):
        DensityMatrix4(np.full((4, 4), np.nan), LABELS)


def test_relabel_keeps_entries():
    rho = DensityMatrix4(np.eye(4) / 4, LABELS)
    renamed = rho.relabel(('a', 'b', 'c', 'd'), flipped=True)
    assert renamed.flipped
    assert renamed.basis_labels == ('a', 'b', 'c', 'd')
    assert np.array_equal(renamed.entries, rho.entries)
    assert rho.purity() == pytest.approx(0.25)


def test_validate_maximally_mixed():
    """Test I/4 passes every check."""
    report = validate_density(np.eye(4) / 4)
    assert report.ok
    assert bool(report)
    assert report.violations == []
    assert report.summary() == 'ok'


def test_validate_reports_non_hermitian():
    rho = np.eye(4) / 4
    rho = rho.astype(complex)
    rho[0, 1] = 0.1j
    report = validate_density(rho)
    assert not report.ok
    assert 'Hermitian' in report.violations


def test_validate_reports_trace():
    report = validate_density(np.eye(4) / 2)
    assert report.violations == ['UnitTrace']
    assert report.worst_deviation == pytest.approx(1.0)


def test_validate_reports_negative_eigenvalue():
    """Test diag(0.6, 0.6, -0.1, -0.1) fails PSD with min eigenvalue -0.1."""
    report = validate_density(np.diag([0.6, 0.6, -0.1, -0.1]))
    assert report.violations == ['PSD']
    assert report.min_eigenvalue == pytest.approx(-0.1)


def test_validate_reports_off_diagonal_coherence_too_large():
    """Test diag(0.5, 0.5, 0, 0) with a 0.6 coherence between the first two states fails PSD by 0.1."""
    rho = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    rho[0, 1] = rho[1, 0] = 0.6
    report = validate_density(rho)
    assert not report.ok
    assert report.violations == ['PSD']
    assert report.min_eigenvalue == pytest.approx(-0.1, abs=1e-12)
    assert report.worst_deviation == pytest.approx(0.1, abs=1e-12)


def test_validate_rejects_non_positive_tolerance():
    with pytest.raises(ValueError):
        validate_density(np.eye(4) / 4, tol=0.0)


def test_eig_nonneg4_diagonal():
    values = eig_nonneg4(np.diag([0.1, 0.4, 0.2, 0.3]))
    assert np.allclose(values, [0.4, 0.3, 0.2, 0.1])


def test_eig_nonneg4_clamps_rounding():
    """Test tiny negative and imaginary parts are clamped to zero."""
    M = np.diag([0.5, 0.5, -1e-13, 1e-13j])
    values = eig_nonneg4(M)
    assert values[-1] == 0.0
    assert np.all(values >= 0)


def test_eig_nonneg4_rejects_negative_spectrum():
    with pytest.raises(SpectrumError):
        eig_nonneg4(np.diag([1.0, 0.5, 0.2, -0.3]))


def test_eig_nonneg4_rejects_complex_spectrum():
    """Test a rotation generator (eigenvalues ±i) is rejected."""
    M = np.zeros((4, 4))
    M[0, 1], M[1, 0] = -1.0, 1.0
    with pytest.raises(SpectrumError):
        eig_nonneg4(M)


def test_eig_nonneg4_maximally_mixed_square():
    """Test M = I4/16 gives four eigenvalues of 1/16."""
    values = eig_nonneg4(np.eye(4) / 16)
    assert values == pytest.approx([1 / 16] * 4, abs=1e-15)


def test_eig_nonneg4_bell_state():
    """Test rho * rho_tilde for the Bell projector has spectrum (1, 0, 0, 0)."""
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = np.outer(phi, phi.conj())
    values = eig_nonneg4(rho @ spin_flip(rho))
    assert values == pytest.approx([1.0, 0.0, 0.0, 0.0], abs=1e-12)


def test_eig_nonneg4_sums_to_trace():
    rng = np.random.default_rng(11)
    for _ in range(50):
        rho = random_density(rng, 4)
        M = rho @ spin_flip(rho)
        values = eig_nonneg4(M)
        assert np.all(values >= 0)
        assert abs(values.sum() - np.trace(M).real) <= 1e-10
