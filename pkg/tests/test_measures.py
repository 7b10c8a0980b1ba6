"""
Tests for concurrence and the asymptotic summary.
Run from project root with: pytest tests/test_measures.py
"""

import math

import numpy as np
import pytest

from src.linalg_core import DensityMatrix4
from src.measures import (SPIN_FLIP, NotXStateError, concurrence, concurrence_x, fidelity_to_target, is_x_state,
                          max_asymptotic_probability, spin_flip, summarize, wootters_roots)
from src.protocol import ProtocolConfig, distill, final_state_closed_form, make_pair_state, random_pair_state


def embedded_pair(a: float, b: float, c: complex) -> np.ndarray:
    """[[a, c], [c*, b]] placed in the middle block of the two-qubit space"""
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1], rho[2, 2] = a, b
    rho[1, 2], rho[2, 1] = c, np.conj(c)
    return rho


def bell_projector() -> np.ndarray:
    psi = np.array([0, 1, 1, 0]) / math.sqrt(2)
    return np.outer(psi, psi.conj())


def test_spin_flip_matrix():
    assert np.array_equal(SPIN_FLIP, np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]]))
    rho = embedded_pair(0.7, 0.3, 0.2 + 0.1j)
    assert np.allclose(spin_flip(spin_flip(rho)), rho)


def test_bell_state_is_maximally_entangled():
    assert concurrence(bell_projector()) == pytest.approx(1.0, abs=1e-12)


def test_maximally_mixed_is_separable():
    assert concurrence(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-12)


def test_embedded_pair_example():
    """Test a = 0.7, b = 0.3, c = 0.2 gives 2|c| = 0.4."""
    assert concurrence(embedded_pair(0.7, 0.3, 0.2)) == pytest.approx(0.4, abs=1e-12)


def test_accepts_density_matrix4():
    rho = DensityMatrix4(bell_projector(), ('00', '01', '10', '11'))
    assert concurrence(rho) == pytest.approx(1.0, abs=1e-12)


def test_wootters_roots_of_product_state():
    """Test |00><00| has no spin-flip overlap at all."""
    rho = np.zeros((4, 4))
    rho[0, 0] = 1.0
    assert np.allclose(wootters_roots(rho), 0.0, atol=1e-12)


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        concurrence(np.eye(2) / 2)


def test_x_form_examples():
    assert concurrence_x(np.eye(4) / 4) == 0.0
    asymptotic = np.zeros((4, 4))
    asymptotic[1, 1] = asymptotic[2, 2] = 0.5
    asymptotic[1, 2] = asymptotic[2, 1] = 0.16 / (2 * 0.25)
    assert concurrence_x(asymptotic) == pytest.approx(0.64, abs=1e-12)
    assert concurrence(asymptotic) == pytest.approx(0.64, abs=1e-10)


def test_x_form_on_single_step_bell_state():
    """Test the pure Bell input after one step has concurrence 1/3."""
    state = distill(ProtocolConfig(make_pair_state(0.5, 0.5, 0.5), 1)).final_state
    assert not is_x_state(state)
    assert concurrence_x(state, strict=False) == pytest.approx(1 / 3, abs=1e-12)
    assert concurrence(state) == pytest.approx(1 / 3, abs=1e-10)


def test_x_form_strict_rejects_non_x():
    rho = np.full((4, 4), 0.25)
    with pytest.raises(NotXStateError):
        concurrence_x(rho)


def test_x_form_agrees_with_general_on_protocol_states():
    rng = np.random.default_rng(11)
    for _ in range(20):
        pair = random_pair_state(rng)
        for n in range(0, 31, 3):
            state, _ = final_state_closed_form(pair, n)
            assert concurrence_x(state, strict=False) == pytest.approx(concurrence(state), abs=1e-10)


def test_local_phase_invariance():
    rng = np.random.default_rng(12)
    for _ in range(10):
        state, _ = final_state_closed_form(random_pair_state(rng), 3)
        theta = rng.uniform(0, 2 * math.pi)
        phase = np.diag([1, np.exp(1j * theta)])
        for U in (np.kron(phase, np.eye(2)), np.kron(np.eye(2), phase)):
            rotated = U @ state.entries @ U.conj().T
            assert concurrence(rotated) == pytest.approx(concurrence(state), abs=1e-10)


def test_fidelity_to_target():
    target = bell_projector()
    assert fidelity_to_target(target) == pytest.approx(1.0)
    assert fidelity_to_target(np.eye(4) / 4) == pytest.approx(0.25)


def test_summary_boundary_case():
    """Test a = b = c = 1/2 sits on the threshold and is not distillable."""
    summary = summarize(make_pair_state(0.5, 0.5, 0.5))
    assert summary.initial_concurrence == pytest.approx(1.0)
    assert summary.asymptotic_concurrence == pytest.approx(1.0)
    assert summary.asymptotic_probability == pytest.approx(0.5)
    assert summary.distillable is False
    assert summary.gain == pytest.approx(0.0)


def test_summary_distillable_case():
    """Test ab = 0.1, |c| = 0.3: distillable with gain 0.9 - 0.6."""
    a = (1 + math.sqrt(1 - 0.4)) / 2
    summary = summarize(make_pair_state(a, 1 - a, 0.3))
    assert a * (1 - a) == pytest.approx(0.1)
    assert summary.distillable
    assert summary.asymptotic_concurrence == pytest.approx(0.9)
    assert summary.gain == pytest.approx(0.3)


def test_summary_without_coherence():
    summary = summarize(make_pair_state(0.5, 0.5, 0.0))
    assert summary.initial_concurrence == 0.0
    assert summary.asymptotic_concurrence == 0.0
    assert not summary.distillable


def test_summary_undefined_limit():
    """Test ab = 0 leaves the limit and gain undefined."""
    summary = summarize(make_pair_state(1.0, 0.0, 0.0))
    assert summary.asymptotic_concurrence is None
    assert summary.gain is None
    assert summary.to_dict()['asymptotic_probability'] == 0.0


def test_max_asymptotic_probability():
    best, at = max_asymptotic_probability(0.01)
    assert best == pytest.approx(0.5, abs=1e-12)
    assert at == pytest.approx(0.5)
    with pytest.raises(ValueError):
        max_asymptotic_probability(0.0)
