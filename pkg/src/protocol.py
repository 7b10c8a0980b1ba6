"""
Distillation protocol driven purely by particle statistics.

Alice and Bob share n pairs on each side L and R, every side in the mixed
state [[a, c], [c*, b]]. Bob flips the spins of his L-side particles, sends
his pairs one at a time through 50/50 beam splitters and keeps only the
outcomes the statistics allow (antibunching for fermions, bunching for
bosons). Each step is a conjugation by the oracle-derived attenuation
D = diag(1/√2, 1, 1, 1/√2) followed by renormalisation.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.config import Config, config as default_config
from src.fock_oracle import COMPONENTS, Spin, Statistics, derive_step_factors
from src.linalg_core import DensityMatrix4, tensor, validate_density
from src.measures import concurrence_x

logger = logging.getLogger(__name__)


class PairStateError(ValueError):
    """Invalid (a, b, c). ``invariant`` names the violated condition."""
    invariant = 'PairState'

    def __init__(self, message: str):
        super().__init__(f"{self.invariant}: {message}")


class NegativeWeightError(PairStateError):
    invariant = 'NegativeWeight'


class NotNormalizedError(PairStateError):
    invariant = 'NotNormalized'


class NotPSDError(PairStateError):
    invariant = 'NotPSD'


class SpinFlipError(ValueError):
    """Raised when the spin flip is applied to already flipped labels."""


class DegenerateStateError(ValueError):
    """Raised when a step would succeed with vanishing probability."""


class ConfigError(ValueError):
    """Raised for an invalid ProtocolConfig."""


# Alice's spins (L, R) per component, and Bob's before the flip
ALICE_SPINS: Dict[str, Tuple[Spin, Spin]] = {
    'alpha': (Spin.UP, Spin.UP),
    'beta': (Spin.UP, Spin.DOWN),
    'gamma': (Spin.DOWN, Spin.UP),
    'kappa': (Spin.DOWN, Spin.DOWN),
}
BOB_SPINS: Dict[str, Tuple[Spin, Spin]] = {
    name: (left.flipped(), right.flipped()) for name, (left, right) in ALICE_SPINS.items()
}


def _ket(party: str, spin: Spin, side: str, power: str = 'ⁿ') -> str:
    return f"|{party}{spin.arrow}̃⟩{power}_{side}"


def _alice_label(name: str) -> str:
    left, right = ALICE_SPINS[name]
    return _ket('A', left, 'L') + _ket('A', right, 'R')


def initial_labels() -> Tuple[str, ...]:
    """Basis (alpha, beta, gamma, kappa) of the total initial state"""
    return tuple(_alice_label(name) + _ket('B', BOB_SPINS[name][0], 'L') + _ket('B', BOB_SPINS[name][1], 'R')
                 for name in COMPONENTS)


def flipped_labels() -> Tuple[str, ...]:
    """Same basis after Bob's L-side spins are inverted"""
    return tuple(_alice_label(name) + _ket('B', BOB_SPINS[name][0].flipped(), 'L')
                 + _ket('B', BOB_SPINS[name][1], 'R')
                 for name in COMPONENTS)


def final_labels(statistics=Statistics.FERMION) -> Tuple[str, ...]:
    """Collective basis once pairs have been post-selected"""
    kept = '|B_triplet⟩' if Statistics.parse(statistics) is Statistics.FERMION else '|B_bunched⟩'
    return (
        _alice_label('alpha') + kept,
        _alice_label('beta') + _ket('B', Spin.UP, 'L', '') + _ket('B', Spin.UP, 'R', ''),
        _alice_label('gamma') + _ket('B', Spin.DOWN, 'L', '') + _ket('B', Spin.DOWN, 'R', ''),
        _alice_label('kappa') + kept,
    )


@dataclass(frozen=True)
class SharedPairState:
    """One side's pair state [[a, c], [c*, b]]."""
    a: float
    b: float
    c: complex = 0j

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.c], [np.conj(self.c), self.b]], dtype=np.complex128)


def make_pair_state(a: float, b: float, c: complex = 0j, cfg: Config = default_config) -> SharedPairState:
    """
    Validate and build a shared pair state.

    Raises:
        NegativeWeightError: a < 0 or b < 0
        NotNormalizedError: a + b differs from 1
        NotPSDError: |c|² > ab
    """
    a, b, c = float(a), float(b), complex(c)
    tol = cfg.PROBABILITY_TOL

    if not all(math.isfinite(x) for x in (a, b, c.real, c.imag)):
        raise PairStateError(f"non-finite parameter in (a={a}, b={b}, c={c})")
    if a < 0 or b < 0:
        raise NegativeWeightError(f"weights must be nonnegative, got a={a}, b={b}")
    if abs(a + b - 1.0) > tol:
        raise NotNormalizedError(f"a + b = {a + b!r}, expected 1")
    if abs(c) ** 2 > a * b + tol:
        raise NotPSDError(f"|c|² = {abs(c) ** 2:.6g} exceeds ab = {a * b:.6g}")

    return SharedPairState(a, b, c)


@dataclass
class ProtocolConfig:
    pair: SharedPairState
    n_steps: int = 1
    statistics: Statistics = Statistics.FERMION
    max_steps: int = default_config.MAX_STEPS

    def __post_init__(self):
        self.statistics = Statistics.parse(self.statistics)
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ConfigError(f"n_steps must be a nonnegative integer, got {self.n_steps}")
        self.n_steps = int(self.n_steps)
        if self.n_steps > self.max_steps:
            raise ConfigError(f"n_steps = {self.n_steps} exceeds the maximum of {self.max_steps}")
        # re-validate, the pair may have been built directly
        self.pair = make_pair_state(self.pair.a, self.pair.b, self.pair.c)


@dataclass
class StepOutcome:
    state: DensityMatrix4
    step_prob: float
    cumulative_prob: float


@dataclass
class ProtocolResult:
    config: ProtocolConfig
    final_state: DensityMatrix4
    p_f: float
    per_step: List[StepOutcome] = field(default_factory=list)
    concurrence_series: List[float] = field(default_factory=list)

    @property
    def probability_series(self) -> List[float]:
        """Cumulative success probability after k = 0..n steps"""
        return [1.0] + [step.cumulative_prob for step in self.per_step]


def make_total_state(pair: SharedPairState) -> DensityMatrix4:
    """rho_L ⊗ rho_R in the (alpha, beta, gamma, kappa) basis"""
    return DensityMatrix4(tensor(pair.matrix, pair.matrix), initial_labels())


def apply_spin_flip(rho: DensityMatrix4) -> DensityMatrix4:
    """
    Invert Bob's L-side spins. A real ↑↔↓ exchange only renames the basis,
    so the entries stay as they are.

    Raises:
        SpinFlipError: labels already flipped
    """
    if rho.flipped:
        raise SpinFlipError("Spin flip already applied to this state")
    return rho.relabel(flipped_labels(), flipped=True)


def step_operator(statistics) -> np.ndarray:
    return np.diag(np.array(derive_step_factors(Statistics.parse(statistics)), dtype=np.complex128))


def distill_step(rho: DensityMatrix4, statistics=Statistics.FERMION, prior_prob: float = 1.0,
                 cfg: Config = default_config) -> StepOutcome:
    """
    Send one of Bob's pairs through a splitter and keep the allowed outcome.

    sigma = D rho D, step_prob = trace(sigma), state = sigma / step_prob.
    A state still in the unflipped basis is flipped first.

    Args:
        rho: normalised state
        statistics: Statistics or name
        prior_prob: cumulative probability before this step

    Returns:
        StepOutcome

    Raises:
        DegenerateStateError: step_prob at or below Config.DEGENERATE_PROB
    """
    statistics = Statistics.parse(statistics)
    if not rho.flipped:
        logger.debug("distill_step got an unflipped state, applying the spin flip first")
        rho = apply_spin_flip(rho)

    D = step_operator(statistics)
    sigma = D @ rho.entries @ D
    step_prob = float(np.trace(sigma).real)
    if step_prob <= cfg.DEGENERATE_PROB:
        raise DegenerateStateError(f"Step probability {step_prob:.3e} vanished; the input is degenerate")

    state = DensityMatrix4(sigma / step_prob, final_labels(statistics), flipped=True)
    logger.debug(f"Step probability {step_prob:.15f}, cumulative {prior_prob * step_prob:.15f}")
    return StepOutcome(state=state, step_prob=step_prob, cumulative_prob=prior_prob * step_prob)


def distill(config: ProtocolConfig, cfg: Config = default_config) -> ProtocolResult:
    """
    Run config.n_steps post-selection steps from the total initial state.

    Returns:
        ProtocolResult with p_f the product of the step probabilities and
        the concurrence after every step (index 0 is the initial state)
    """
    state = make_total_state(config.pair)
    series = [concurrence_x(state, strict=False)]
    per_step: List[StepOutcome] = []
    cumulative = 1.0

    if config.n_steps > 0:
        state = apply_spin_flip(state)

    for k in range(1, config.n_steps + 1):
        outcome = distill_step(state, config.statistics, cumulative, cfg)
        report = validate_density(outcome.state, tol=cfg.PSD_TOL)
        if not report.ok:
            logger.warning(f"Step {k} produced an invalid state: {report.summary()}")
        per_step.append(outcome)
        state = outcome.state
        cumulative = outcome.cumulative_prob
        series.append(concurrence_x(state, strict=False))

    logger.info(
        f"Distilled a={config.pair.a:.6g}, b={config.pair.b:.6g}, c={config.pair.c:.6g} over "
        f"{config.n_steps} step(s) ({config.statistics.value}): p_f={cumulative:.12g}, C={series[-1]:.12g}"
    )
    return ProtocolResult(config=config, final_state=state, p_f=cumulative,
                          per_step=per_step, concurrence_series=series)


def success_probability(pair: SharedPairState, n: int) -> float:
    """(1/2)^n a² + (1/2)^n b² + 2ab"""
    h = 0.5 ** n
    return h * pair.a ** 2 + h * pair.b ** 2 + 2.0 * pair.a * pair.b


def final_state_closed_form(pair: SharedPairState, n: int,
                            statistics=Statistics.FERMION) -> Tuple[DensityMatrix4, float]:
    """
    The n-step state written down directly, normalised by N_n² = 1/p_f.

    The entries do not depend on the statistics; only the kept-state labels do.

    Returns:
        (state, p_f)
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")

    a, b, c = pair.a, pair.b, complex(pair.c)
    cc = c.conjugate()
    h = 0.5 ** n
    r = 2.0 ** (-n / 2)
    c2 = abs(c) ** 2

    matrix = np.array([
        [h * a * a, r * a * c, r * a * c, h * c * c],
        [r * a * cc, a * b, c2, r * b * c],
        [r * a * cc, c2, a * b, r * b * c],
        [h * cc * cc, r * b * cc, r * b * cc, h * b * b],
    ], dtype=np.complex128)

    p_f = success_probability(pair, n)
    if n == 0:
        return DensityMatrix4(matrix / p_f, initial_labels()), p_f
    return DensityMatrix4(matrix / p_f, final_labels(statistics), flipped=True), p_f


def random_pair_state(rng: np.random.Generator, pure: bool = False) -> SharedPairState:
    """
    Draw a valid pair: a uniform in [0, 1], |c| uniform in [0, √ab] (or on
    the boundary when ``pure``) and a uniform phase.
    """
    a = float(rng.uniform(0.0, 1.0))
    b = 1.0 - a
    radius = math.sqrt(a * b) * (1.0 if pure else float(rng.uniform(0.0, 1.0)))
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    return make_pair_state(a, b, radius * complex(math.cos(phase), math.sin(phase)))
