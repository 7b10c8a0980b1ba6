"""
Small dense linear algebra for two-qubit density matrices.

Everything here works at dimension 2 and 4: Kronecker products, density
matrix validation, and the sorted nonnegative spectrum of rho * rho_tilde
that the Wootters concurrence is built from.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.config import Config, config as default_config

logger = logging.getLogger(__name__)


class SpectrumError(ValueError):
    """Raised when a spectrum that must be real and nonnegative is not."""


@dataclass(frozen=True, eq=False)
class DensityMatrix4:
    """
    4x4 complex density matrix plus the labels of the basis it is written in.

    ``flipped`` records whether Bob's L-side spins in the labels have already
    been inverted by the spin-flip step.
    """
    entries: np.ndarray
    basis_labels: Tuple[str, str, str, str]
    flipped: bool = False

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.shape != (4, 4):
            raise ValueError(f"DensityMatrix4 needs a 4x4 matrix, got shape {entries.shape}")
        if len(self.basis_labels) != 4:
            raise ValueError(f"DensityMatrix4 needs 4 basis labels, got {len(self.basis_labels)}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("DensityMatrix4 entries must be finite")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'basis_labels', tuple(self.basis_labels))

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        """trace(rho^2)"""
        return float(np.trace(self.entries @ self.entries).real)

    def relabel(self, labels: Sequence[str], flipped: Optional[bool] = None) -> 'DensityMatrix4':
        return DensityMatrix4(self.entries, tuple(labels), self.flipped if flipped is None else flipped)


@dataclass
class ValidationReport:
    """Outcome of validate_density. ``ok`` is False when any property failed."""
    ok: bool
    violations: List[str] = field(default_factory=list)
    worst_deviation: float = 0.0
    min_eigenvalue: float = 0.0

    def __bool__(self):
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return f"violations: {', '.join(self.violations)} (worst deviation {self.worst_deviation:.3e})"


def tensor(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Kronecker product with the row-major block convention.

    entry(j*p + r, k*p + s) = A[j, k] * B[r, s]

    Args:
        A: square m x m matrix
        B: square p x p matrix

    Returns:
        mp x mp complex matrix

    Raises:
        ValueError: If either input is not square
    """
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    for name, mat in (('A', A), ('B', B)):
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"tensor: {name} must be square, got shape {mat.shape}")
    return np.kron(A, B)


def validate_density(rho, tol: Optional[float] = None, cfg: Config = default_config) -> ValidationReport:
    """
    Check Hermiticity, unit trace and positive semidefiniteness.

    Never raises for a bad matrix: the report names every failed property
    together with the worst deviation found.

    Args:
        rho: DensityMatrix4 or a raw 4x4 array
        tol: single tolerance for all three checks; when omitted the
            configured HERMITIAN_TOL / TRACE_TOL / PSD_TOL are used

    Returns:
        ValidationReport
    """
    if tol is not None and not tol > 0:
        raise ValueError(f"validate_density: tol must be positive, got {tol}")

    herm_tol = tol if tol is not None else cfg.HERMITIAN_TOL
    trace_tol = tol if tol is not None else cfg.TRACE_TOL
    psd_tol = tol if tol is not None else cfg.PSD_TOL

    matrix = rho.entries if isinstance(rho, DensityMatrix4) else np.asarray(rho, dtype=np.complex128)
    violations = []
    worst = 0.0

    herm_dev = float(np.max(np.abs(matrix - matrix.conj().T)))
    if herm_dev > herm_tol:
        violations.append('Hermitian')
        worst = max(worst, herm_dev)

    tr = np.trace(matrix)
    trace_dev = float(abs(tr - 1.0))
    if trace_dev > trace_tol:
        violations.append('UnitTrace')
        worst = max(worst, trace_dev)

    # eigvalsh only reads one triangle, so symmetrise first
    hermitian_part = 0.5 * (matrix + matrix.conj().T)
    min_eig = float(np.min(np.linalg.eigvalsh(hermitian_part)))
    if min_eig < -psd_tol:
        violations.append('PSD')
        worst = max(worst, -min_eig)

    report = ValidationReport(ok=not violations, violations=violations,
                              worst_deviation=worst, min_eigenvalue=min_eig)
    if not report.ok:
        logger.debug(f"Density validation failed: {report.summary()}")
    return report


def eig_nonneg4(M: np.ndarray, tol: Optional[float] = None, cfg: Config = default_config) -> np.ndarray:
    """
    Eigenvalues of a 4x4 matrix whose spectrum is real and nonnegative.

    Meant for products rho * rho_tilde. Imaginary parts and negative parts
    smaller than ``tol`` are rounding and get clamped to zero.

    Args:
        M: 4x4 complex matrix
        tol: clamping tolerance (default Config.SPECTRUM_TOL)

    Returns:
        Four real eigenvalues, descending

    Raises:
        SpectrumError: If an eigenvalue has an imaginary part or a negative
            real part larger than ``tol``
    """
    tol = cfg.SPECTRUM_TOL if tol is None else tol
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (4, 4):
        raise ValueError(f"eig_nonneg4 needs a 4x4 matrix, got shape {M.shape}")

    eigenvalues = np.linalg.eigvals(M)

    worst_imag = float(np.max(np.abs(eigenvalues.imag)))
    if worst_imag > tol:
        raise SpectrumError(f"Non-real spectrum: imaginary part {worst_imag:.3e} exceeds {tol:.1e}")

    real = eigenvalues.real
    worst_negative = float(-np.min(real))
    if worst_negative > tol:
        raise SpectrumError(f"Negative eigenvalue {-worst_negative:.3e} below -{tol:.1e}")

    return np.sort(np.clip(real, 0.0, None))[::-1]
