"""
Entanglement and distillability measures.

Wootters concurrence in its general form and in the closed form for
X-shaped states, plus the asymptotic summary of a shared pair: initial and
limiting concurrence, limiting efficiency and the distillability threshold.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import Config, config as default_config
from src.linalg_core import DensityMatrix4, eig_nonneg4

logger = logging.getLogger(__name__)

# Y ⊗ Y written out
SPIN_FLIP = np.array([
    [0, 0, 0, -1],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [-1, 0, 0, 0],
], dtype=np.complex128)

# (row, col) pairs that vanish in an X-shaped matrix, upper triangle
_NON_X = ((0, 1), (0, 2), (1, 3), (2, 3))
X_TOL = 1e-12


class NotXStateError(ValueError):
    """Raised when the X-state closed form is asked for a non-X matrix."""


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix4):
        return rho.entries
    matrix = np.asarray(rho, dtype=np.complex128)
    if matrix.shape != (4, 4):
        raise ValueError(f"Expected a 4x4 two-qubit matrix, got shape {matrix.shape}")
    return matrix


def spin_flip(rho) -> np.ndarray:
    """rho_tilde = F rho* F"""
    matrix = _as_matrix(rho)
    return SPIN_FLIP @ matrix.conj() @ SPIN_FLIP


def wootters_roots(rho, cfg: Config = default_config) -> np.ndarray:
    """
    Square roots of the eigenvalues of rho * rho_tilde, descending.

    Computed as the singular values of tau = W^T F W with rho = W W^dagger,
    which gives the roots directly instead of square-rooting eigenvalues
    that sit at rounding level.
    """
    matrix = _as_matrix(rho)
    hermitian = 0.5 * (matrix + matrix.conj().T)
    weights, vectors = np.linalg.eigh(hermitian)
    weights = np.where(weights > cfg.RANK_CUTOFF, weights, 0.0)
    W = vectors * np.sqrt(weights)[None, :]
    tau = W.T @ SPIN_FLIP @ W
    return np.sort(np.linalg.svd(tau, compute_uv=False))[::-1]


def concurrence(rho, cfg: Config = default_config) -> float:
    """
    Wootters concurrence of a two-qubit density matrix.

    C = max(0, √λ1 − √λ2 − √λ3 − √λ4) with λ the eigenvalues of
    rho · F rho* F, descending.

    Args:
        rho: DensityMatrix4 or 4x4 array, valid and normalised

    Returns:
        Concurrence in [0, 1]

    Raises:
        SpectrumError: If rho * rho_tilde has a non-real spectrum, which
            means rho is not a valid density matrix
    """
    matrix = _as_matrix(rho)
    spectrum = eig_nonneg4(matrix @ spin_flip(matrix), cfg=cfg)
    roots = wootters_roots(matrix, cfg)

    mismatch = float(np.max(np.abs(roots ** 2 - spectrum)))
    if mismatch > cfg.SPECTRUM_TOL:
        logger.debug(f"Wootters roots vs eigenvalues differ by {mismatch:.3e}")

    value = roots[0] - roots[1] - roots[2] - roots[3]
    return float(min(1.0, max(0.0, value)))


def is_x_state(rho, tol: float = X_TOL) -> bool:
    matrix = _as_matrix(rho)
    return all(abs(matrix[j, k]) <= tol and abs(matrix[k, j]) <= tol for j, k in _NON_X)


def concurrence_x(rho, strict: bool = True) -> float:
    """
    Closed-form concurrence of an X-shaped state.

    C = 2 max(0, |ρ14| − √(ρ22 ρ33), |ρ23| − √(ρ11 ρ44))

    Args:
        rho: DensityMatrix4 or 4x4 array
        strict: reject matrices with nonzero (1,2), (1,3), (2,4), (3,4)
            entries. The protocol passes False: its states carry those
            entries, yet the closed form stays exact on them because a
            local diagonal filter maps every protocol state onto the
            a = b family, where the two formulas coincide.

    Raises:
        NotXStateError: strict and rho is not X-shaped
    """
    matrix = _as_matrix(rho)
    if strict and not is_x_state(matrix):
        worst = max(max(abs(matrix[j, k]), abs(matrix[k, j])) for j, k in _NON_X)
        raise NotXStateError(f"Matrix is not X-shaped (largest off-X entry {worst:.3e})")

    diag = np.clip(np.diag(matrix).real, 0.0, None)
    outer = abs(matrix[0, 3]) - np.sqrt(diag[1] * diag[2])
    inner = abs(matrix[1, 2]) - np.sqrt(diag[0] * diag[3])
    return float(2.0 * max(0.0, outer, inner))


def fidelity_to_target(rho) -> float:
    """
    Overlap with the maximally entangled target (|β> + |γ>)/√2 of the
    collective basis, the state pure inputs converge to.
    """
    matrix = _as_matrix(rho)
    return float(0.5 * (matrix[1, 1] + matrix[2, 2] + matrix[1, 2] + matrix[2, 1]).real)


@dataclass
class DistillationSummary:
    """Asymptotic figures of merit for a shared pair (a, b, c)."""
    initial_concurrence: float
    asymptotic_concurrence: Optional[float]
    asymptotic_probability: float
    distillable: bool
    gain: Optional[float]

    def to_dict(self) -> Dict:
        return asdict(self)


def summarize(pair) -> DistillationSummary:
    """
    Initial concurrence 2|c|, limiting concurrence |c|²/ab, limiting
    efficiency 2ab and the strict threshold |c| > 2ab.

    Args:
        pair: SharedPairState (anything with a, b, c)

    Returns:
        DistillationSummary; limiting concurrence and gain are None when
        ab = 0
    """
    c_abs = abs(complex(pair.c))
    ab = pair.a * pair.b

    initial = 2.0 * c_abs
    distillable = c_abs > 2.0 * ab
    if ab > 0:
        asymptotic = c_abs ** 2 / ab
        # = asymptotic − initial, written so its sign is exactly that of |c| − 2ab
        gain = c_abs * (c_abs - 2.0 * ab) / ab
    else:
        asymptotic = None
        gain = None
        logger.debug("ab = 0: limiting concurrence undefined")

    return DistillationSummary(
        initial_concurrence=initial,
        asymptotic_concurrence=asymptotic,
        asymptotic_probability=2.0 * ab,
        distillable=distillable,
        gain=gain,
    )


def max_asymptotic_probability(step: float = default_config.LIMITS_GRID_STEP) -> Tuple[float, float]:
    """
    Grid maximum of 2ab over a in [0, 1] (b = 1 − a).

    Returns:
        (maximum, a at the maximum)
    """
    if not 0 < step <= 1:
        raise ValueError(f"Grid step must be in (0, 1], got {step}")
    a = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    values = 2.0 * a * (1.0 - a)
    best = int(np.argmax(values))
    return float(values[best]), float(a[best])
