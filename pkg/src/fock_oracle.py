"""
Second-quantized oracle for one of Bob's pairs at a 50/50 beam splitter.

States live in the occupation-number representation of four single
particle modes (side x spin). Amplitudes are stored on normalised Fock
basis states; for fermions a basis state means the creation operators
applied in the canonical mode order (L,up) < (L,down) < (R,up) < (R,down),
so every fermionic sign is absorbed when a term is inserted.

The oracle derives, rather than assumes, the per-step attenuation factors
used by the protocol module.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Occupation = Tuple[int, int, int, int]

VACUUM: Occupation = (0, 0, 0, 0)
MAX_PARTICLES = 2
MAX_CHAIN_PAIRS = 2

# amplitudes below this after an expansion are cancellation leftovers
AMPLITUDE_FLOOR = 1e-15


class FockStateError(ValueError):
    """Raised for occupations the oracle does not represent."""


class Statistics(str, Enum):
    FERMION = 'fermion'
    BOSON = 'boson'

    @classmethod
    def parse(cls, value) -> 'Statistics':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"Unknown statistics '{value}' (expected fermion or boson)")


class Side(Enum):
    L = 0
    R = 1


class Spin(Enum):
    UP = 0
    DOWN = 1

    @property
    def arrow(self) -> str:
        return '↑' if self is Spin.UP else '↓'

    def flipped(self) -> 'Spin':
        return Spin.DOWN if self is Spin.UP else Spin.UP


@dataclass(frozen=True)
class Mode:
    side: Side
    spin: Spin

    @property
    def index(self) -> int:
        return 2 * self.side.value + self.spin.value

    def __str__(self):
        return f"{self.side.name}{self.spin.arrow}"


MODES: Tuple[Mode, ...] = tuple(Mode(side, spin) for side in Side for spin in Spin)

# a†(L,s) -> (a†(L,s) + i a†(R,s))/√2,  a†(R,s) -> (i a†(L,s) + a†(R,s))/√2
# Column m holds the image of a†_m, rows are the output modes.
_SPLITTER_2 = np.array([[1, 1j], [1j, 1]], dtype=np.complex128) / np.sqrt(2)
BEAM_SPLITTER = np.kron(_SPLITTER_2, np.eye(2))


def occupation_label(occ: Occupation) -> str:
    """Human readable occupation, e.g. ``L↑R↓`` or ``2×L↑``"""
    parts = []
    for mode, count in zip(MODES, occ):
        if count == 1:
            parts.append(str(mode))
        elif count > 1:
            parts.append(f"{count}×{mode}")
    return ''.join(parts) or 'vac'


def _check_occupation(occ: Sequence[int], statistics: Statistics) -> Occupation:
    occ = tuple(int(n) for n in occ)
    if len(occ) != len(MODES):
        raise FockStateError(f"Occupation needs {len(MODES)} counts, got {len(occ)}")
    if any(n < 0 for n in occ):
        raise FockStateError(f"Negative occupation {occ}")
    if statistics is Statistics.FERMION and any(n > 1 for n in occ):
        raise FockStateError(f"Fermionic double occupancy in {occupation_label(occ)}")
    if sum(occ) > MAX_PARTICLES:
        raise FockStateError(f"{sum(occ)} particles exceed the oracle limit of {MAX_PARTICLES}")
    return occ


def _create(occ: Occupation, mode: int, statistics: Statistics) -> Optional[Tuple[float, Occupation]]:
    """
    Apply a†_mode to a basis state.

    Returns (coefficient, new occupation), or None when the result vanishes
    (Pauli exclusion).
    """
    new = list(occ)
    new[mode] += 1
    if statistics is Statistics.FERMION:
        if occ[mode]:
            return None
        # (-1)^(occupied modes ordered before `mode`)
        sign = -1.0 if sum(occ[:mode]) % 2 else 1.0
        return sign, tuple(new)
    return math.sqrt(occ[mode] + 1), tuple(new)


@dataclass
class FockVector:
    """Superposition over occupation configurations of the four modes."""
    statistics: Statistics
    terms: Dict[Occupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        self.statistics = Statistics.parse(self.statistics)
        checked = {}
        for occ, amp in self.terms.items():
            occ = _check_occupation(occ, self.statistics)
            checked[occ] = checked.get(occ, 0j) + complex(amp)
        self.terms = checked

    @classmethod
    def vacuum(cls, statistics) -> 'FockVector':
        return cls(statistics, {VACUUM: 1.0})

    @classmethod
    def from_modes(cls, statistics, modes: Sequence[Mode], amplitude: complex = 1.0) -> 'FockVector':
        """
        amplitude * a†_{m1} a†_{m2} ... |0>, operators written left to right.

        The product is brought to canonical order, so for fermions listing
        the modes out of order flips the stored sign.
        """
        statistics = Statistics.parse(statistics)
        if len(modes) > MAX_PARTICLES:
            raise FockStateError(f"{len(modes)} particles exceed the oracle limit of {MAX_PARTICLES}")

        state, coef = VACUUM, complex(amplitude)
        for mode in reversed(list(modes)):
            created = _create(state, mode.index, statistics)
            if created is None:
                raise FockStateError(f"Fermionic double occupancy of mode {mode}")
            factor, state = created
            coef *= factor
        return cls(statistics, {state: coef})

    def amplitude(self, occ: Sequence[int]) -> complex:
        return self.terms.get(tuple(occ), 0j)

    def norm(self) -> float:
        # basis states are normalised, so bosonic multiplicities are already folded in
        return math.sqrt(sum(abs(amp) ** 2 for amp in self.terms.values()))

    def normalized(self) -> 'FockVector':
        n = self.norm()
        if n == 0:
            return FockVector(self.statistics, {})
        return self.scaled(1.0 / n)

    def scaled(self, factor: complex) -> 'FockVector':
        return FockVector(self.statistics, {occ: amp * factor for occ, amp in self.terms.items()})

    def project(self, keep) -> 'FockVector':
        """Keep only the terms whose occupation satisfies ``keep(occ)``"""
        return FockVector(self.statistics, {occ: amp for occ, amp in self.terms.items() if keep(occ)})

    def inner(self, other: 'FockVector') -> complex:
        """<self|other>"""
        return sum((amp.conjugate() * other.amplitude(occ) for occ, amp in self.terms.items()), 0j)

    def max_deviation(self, other: 'FockVector') -> float:
        """Largest amplitude difference over the union of both supports"""
        keys = set(self.terms) | set(other.terms)
        if not keys:
            return 0.0
        return max(abs(self.amplitude(k) - other.amplitude(k)) for k in keys)

    def __str__(self):
        if not self.terms:
            return '0'
        return ' + '.join(f"({amp.real:+.4f}{amp.imag:+.4f}j)|{occupation_label(occ)}>"
                          for occ, amp in sorted(self.terms.items(), reverse=True))


@dataclass
class OutcomeSplit:
    """Bunching / antibunching split of a two-particle beam-splitter output."""
    bunch_prob: float
    antibunch_prob: float
    kept_state: FockVector
    output_state: FockVector
    statistics: Statistics

    @property
    def kept_prob(self) -> float:
        if self.statistics is Statistics.FERMION:
            return self.antibunch_prob
        return self.bunch_prob


def _side_counts(occ: Occupation) -> Tuple[int, int]:
    return occ[0] + occ[1], occ[2] + occ[3]


def is_bunched(occ: Occupation) -> bool:
    """Both particles left through the same port"""
    left, right = _side_counts(occ)
    return sum(occ) == 2 and (left == 2 or right == 2)


def is_antibunched(occ: Occupation) -> bool:
    """One particle per port"""
    return _side_counts(occ) == (1, 1)


def keeps(statistics: Statistics):
    """Occupation filter for the branch the measurement keeps"""
    return is_antibunched if Statistics.parse(statistics) is Statistics.FERMION else is_bunched


def apply_mode_transform(psi: FockVector, U: np.ndarray) -> FockVector:
    """
    Transform every creation operator a†_m -> sum_k U[k, m] a†_k.

    Args:
        psi: state with at most two particles
        U: 4x4 single-particle mode matrix

    Returns:
        Transformed FockVector (same statistics)
    """
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (4, 4):
        raise ValueError(f"Mode transform must be 4x4, got shape {U.shape}")

    stats = psi.statistics
    result: Dict[Occupation, complex] = {}

    for occ, amp in psi.terms.items():
        _check_occupation(occ, stats)
        ops = [m for m in range(len(MODES)) for _ in range(occ[m])]
        # |n> = prod (a†)^n / sqrt(n!) |0>
        norm = math.prod(math.sqrt(math.factorial(n)) for n in occ)

        partial: Dict[Occupation, complex] = {VACUUM: amp / norm}
        for m in reversed(ops):
            expanded: Dict[Occupation, complex] = {}
            for state, coef in partial.items():
                for k in range(len(MODES)):
                    u = U[k, m]
                    if u == 0:
                        continue
                    created = _create(state, k, stats)
                    if created is None:
                        continue
                    factor, nxt = created
                    expanded[nxt] = expanded.get(nxt, 0j) + coef * u * factor
            partial = expanded

        for state, coef in partial.items():
            result[state] = result.get(state, 0j) + coef

    return FockVector(stats, {occ: amp for occ, amp in result.items() if abs(amp) > AMPLITUDE_FLOOR})


def apply_beam_splitter(psi: FockVector) -> FockVector:
    """
    Send both sides through the 50/50 beam splitter.

    Raises:
        FockStateError: fermionic double occupancy or more than two particles
    """
    out = apply_mode_transform(psi, BEAM_SPLITTER)
    logger.debug(f"Beam splitter: {psi} -> {out}")
    return out


def pair_input(spins: Tuple[Spin, Spin], statistics) -> FockVector:
    """a†(L, s_L) a†(R, s_R) |0>: one of Bob's pairs before the splitter"""
    spin_l, spin_r = spins
    return FockVector.from_modes(statistics, [Mode(Side.L, spin_l), Mode(Side.R, spin_r)])


def outcome_split(spins: Tuple[Spin, Spin], statistics) -> OutcomeSplit:
    """
    Run one pair through the splitter and split bunching from antibunching.

    The kept branch is antibunching for fermions and bunching for bosons,
    renormalised.

    Args:
        spins: (spin at L, spin at R) before the splitter
        statistics: Statistics or 'fermion' / 'boson'

    Returns:
        OutcomeSplit
    """
    statistics = Statistics.parse(statistics)
    out = apply_beam_splitter(pair_input(spins, statistics))

    bunch = out.project(is_bunched)
    antibunch = out.project(is_antibunched)
    bunch_prob = bunch.norm() ** 2
    antibunch_prob = antibunch.norm() ** 2

    kept = antibunch if statistics is Statistics.FERMION else bunch

    split = OutcomeSplit(
        bunch_prob=bunch_prob,
        antibunch_prob=antibunch_prob,
        kept_state=kept.normalized(),
        output_state=out,
        statistics=statistics,
    )
    logger.debug(
        f"{statistics.value} ({spins[0].arrow},{spins[1].arrow}): "
        f"bunch {bunch_prob:.6f}, antibunch {antibunch_prob:.6f}"
    )
    return split


# Pair-1 spins (L, R) of each basis component once Bob's L side is flipped
COMPONENT_SPINS: Dict[str, Tuple[Spin, Spin]] = {
    'alpha': (Spin.UP, Spin.DOWN),
    'beta': (Spin.UP, Spin.UP),
    'gamma': (Spin.DOWN, Spin.DOWN),
    'kappa': (Spin.DOWN, Spin.UP),
}
COMPONENTS = tuple(COMPONENT_SPINS)


@lru_cache(maxsize=None)
def derive_step_factors(statistics) -> Tuple[float, float, float, float]:
    """
    Amplitude attenuation of the kept branch for each basis component.

    sqrt of the kept-branch probability given the component's pair spins,
    in the order (alpha, beta, gamma, kappa).
    """
    statistics = Statistics.parse(statistics)
    factors = tuple(math.sqrt(outcome_split(COMPONENT_SPINS[name], statistics).kept_prob)
                    for name in COMPONENTS)
    logger.info(f"Derived step factors for {statistics.value}: {factors}")
    return factors


def printed_b1() -> FockVector:
    """Reference |B1>: i/2 (L↑L↓ + R↑R↓) + 1/2 (L↑R↓ + L↓R↑)"""
    return FockVector(Statistics.FERMION, {
        (1, 1, 0, 0): 0.5j,
        (0, 0, 1, 1): 0.5j,
        (1, 0, 0, 1): 0.5,
        (0, 1, 1, 0): 0.5,
    })


def printed_b2() -> FockVector:
    """Reference |B2>: -i/2 (L↑L↓ + R↑R↓) + 1/2 (L↓R↑ + L↑R↓)"""
    return FockVector(Statistics.FERMION, {
        (1, 1, 0, 0): -0.5j,
        (0, 0, 1, 1): -0.5j,
        (0, 1, 1, 0): 0.5,
        (1, 0, 0, 1): 0.5,
    })


def printed_triplet() -> FockVector:
    """(L↑R↓ + L↓R↑)/√2"""
    s = 1 / math.sqrt(2)
    return FockVector(Statistics.FERMION, {(1, 0, 0, 1): s, (0, 1, 1, 0): s})


def compare_with_printed(spins: Tuple[Spin, Spin], printed: FockVector) -> float:
    """Max amplitude deviation between the oracle output and a reference vector"""
    out = apply_beam_splitter(pair_input(spins, printed.statistics))
    deviation = out.max_deviation(printed)
    if deviation > 1e-12:
        logger.warning(f"Oracle output for {spins[0].arrow}{spins[1].arrow} deviates from the reference "
                       f"vector by {deviation:.3e}")
    return deviation


def reference_kept_states(statistics) -> Dict[str, FockVector]:
    """
    Kept Bob state each component is expected to end in.

    Fermions use the reference vectors (triplet, parallel spins). Bosonic
    kept states have no written reference form, so the alpha outcome stands
    in for both alpha and kappa.
    """
    statistics = Statistics.parse(statistics)
    if statistics is Statistics.FERMION:
        return {
            'alpha': printed_triplet(),
            'beta': FockVector(statistics, {(1, 0, 1, 0): 1.0}),
            'gamma': FockVector(statistics, {(0, 1, 0, 1): 1.0}),
            'kappa': printed_triplet(),
        }
    antiparallel = outcome_split(COMPONENT_SPINS['alpha'], statistics).kept_state
    return {
        'alpha': antiparallel,
        'beta': outcome_split(COMPONENT_SPINS['beta'], statistics).kept_state,
        'gamma': outcome_split(COMPONENT_SPINS['gamma'], statistics).kept_state,
        'kappa': antiparallel,
    }


@dataclass
class ChainResult:
    """Outcome of simulate_chain"""
    matrix: np.ndarray
    probability: float
    leakage: float


def _pair_kept_branch(spins: Tuple[Spin, Spin], statistics: Statistics) -> FockVector:
    out = apply_beam_splitter(pair_input(spins, statistics))
    return out.project(keeps(statistics))


def _tensor_terms(left: Dict[tuple, complex], right: FockVector) -> Dict[tuple, complex]:
    return {key + (occ,): a * b for key, a in left.items() for occ, b in right.terms.items()}


def simulate_chain(rho: np.ndarray, n_pairs: int, statistics) -> ChainResult:
    """
    End-to-end post-selection of n_pairs of Bob's pairs, built from per-pair
    oracle outputs.

    Each basis component j carries Bob pairs with the spins COMPONENT_SPINS[j].
    Their kept branches are tensored into a collective vector K_j, which is
    then read in the reference kept basis. Since Alice's labels differ
    between components, the collective basis stays orthonormal.

    Args:
        rho: 4x4 matrix in the flipped (alpha, beta, gamma, kappa) basis
        n_pairs: number of pairs sent through splitters, 0..MAX_CHAIN_PAIRS
        statistics: Statistics or name

    Returns:
        ChainResult with the renormalised 4x4 matrix, the success
        probability and the worst norm left outside the reference state
    """
    statistics = Statistics.parse(statistics)
    rho = np.asarray(rho, dtype=np.complex128)
    if not 0 <= n_pairs <= MAX_CHAIN_PAIRS:
        raise ValueError(f"simulate_chain supports 0..{MAX_CHAIN_PAIRS} pairs, got {n_pairs}")
    if n_pairs == 0:
        return ChainResult(matrix=rho.copy(), probability=1.0, leakage=0.0)

    references = reference_kept_states(statistics)
    overlaps = np.zeros(len(COMPONENTS), dtype=np.complex128)
    leakage = 0.0

    for j, name in enumerate(COMPONENTS):
        branch = _pair_kept_branch(COMPONENT_SPINS[name], statistics)
        collective: Dict[tuple, complex] = {(): 1.0}
        reference: Dict[tuple, complex] = {(): 1.0}
        for _ in range(n_pairs):
            collective = _tensor_terms(collective, branch)
            reference = _tensor_terms(reference, references[name])

        overlap = sum((amp.conjugate() * collective.get(key, 0j) for key, amp in reference.items()), 0j)
        collective_norm2 = sum(abs(a) ** 2 for a in collective.values())
        leakage = max(leakage, abs(collective_norm2 - abs(overlap) ** 2))
        overlaps[j] = overlap

    sigma = overlaps[:, None] * rho * overlaps.conj()[None, :]
    probability = float(np.trace(sigma).real)
    logger.debug(f"Chain of {n_pairs} pair(s), {statistics.value}: probability {probability:.12f}")
    return ChainResult(matrix=sigma / probability, probability=probability, leakage=leakage)
