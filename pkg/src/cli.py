"""
Command line front end.

    python -m src.cli run    --a 0.5 --b 0.5 --c-re 0.5 --n 10 --statistics fermion
    python -m src.cli sweep  --a-range 0.1:0.9:0.1 --c-abs-range 0:0.5:0.1 --n 10 --out sweep.csv
    python -m src.cli verify --n-max 30 --tol 1e-10 --seed 42
    python -m src.cli limits --a 0.5 --b 0.5 --c-re 0.4

Exit codes: 0 success, 1 verification failure, 2 usage or parameter error.
"""

import argparse
import cmath
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.config import LOG_LEVELS, Config, load_config
from src.fock_oracle import (COMPONENT_SPINS, COMPONENTS, Spin, Statistics, compare_with_printed,
                             derive_step_factors, outcome_split, printed_b1, printed_b2, simulate_chain)
from src.measures import concurrence, concurrence_x, fidelity_to_target, max_asymptotic_probability, summarize
from src.protocol import (PairStateError, ProtocolConfig, ProtocolResult, SharedPairState, apply_spin_flip,
                          distill, final_state_closed_form, make_pair_state, make_total_state, random_pair_state)
from src.session_log import SessionLogger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

CSV_FIELDS = (
    'statistics', 'a', 'b', 'c_re', 'c_im', 'n', 'p_cum', 'concurrence_n',
    'initial_concurrence', 'asymptotic_concurrence', 'asymptotic_probability', 'distillable',
)
EXPECTED_FACTORS = (1 / math.sqrt(2), 1.0, 1.0, 1 / math.sqrt(2))


@dataclass
class RunRecord:
    """One row of run/sweep output"""
    statistics: str
    a: float
    b: float
    c_re: float
    c_im: float
    n: int
    p_cum: float
    concurrence_n: float
    initial_concurrence: float
    asymptotic_concurrence: Optional[float]
    asymptotic_probability: float
    distillable: bool

    @classmethod
    def from_result(cls, result: ProtocolResult) -> 'RunRecord':
        pair = result.config.pair
        summary = summarize(pair)
        return cls(
            statistics=result.config.statistics.value,
            a=pair.a,
            b=pair.b,
            c_re=pair.c.real,
            c_im=pair.c.imag,
            n=result.config.n_steps,
            p_cum=result.p_f,
            concurrence_n=result.concurrence_series[-1],
            initial_concurrence=summary.initial_concurrence,
            asymptotic_concurrence=summary.asymptotic_concurrence,
            asymptotic_probability=summary.asymptotic_probability,
            distillable=summary.distillable,
        )

    def to_row(self) -> List[str]:
        return [format_field(getattr(self, name)) for name in CSV_FIELDS]

    def to_dict(self) -> Dict:
        return asdict(self)


def format_field(value) -> str:
    """CSV cell: 17 significant digits, true/false, empty for undefined"""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        # -0.0 and 0.0 print the same
        return f"{value + 0.0:.17g}"
    return str(value)


def write_csv(records: Sequence[RunRecord], handle):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(CSV_FIELDS)
    for record in records:
        writer.writerow(record.to_row())


def parse_range(text: str) -> Tuple[float, float, float]:
    """'start:stop:step' -> floats; a single value means start = stop"""
    parts = text.split(':')
    try:
        if len(parts) == 1:
            value = float(parts[0])
            return value, value, 1.0
        if len(parts) == 3:
            return float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected start:stop:step, got '{text}'")


def range_values(start: float, stop: float, step: float) -> List[float]:
    """Inclusive grid start, start+step, ..., stop (values rounded to 12 decimals)"""
    if not step > 0:
        raise ValueError(f"Range step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"Empty range {start}:{stop}:{step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


@dataclass
class SweepSpec:
    a_range: Tuple[float, float, float]
    c_abs_range: Tuple[float, float, float]
    c_phase: float = 0.0
    n_steps: int = 1
    statistics: Statistics = Statistics.FERMION

    def __post_init__(self):
        self.statistics = Statistics.parse(self.statistics)
        self.a_values = range_values(*self.a_range)
        if self.c_abs_range[0] < 0:
            raise ValueError(f"|c| range must start at or above 0, got {self.c_abs_range[0]:g}")
        self.c_values = range_values(*self.c_abs_range)

    def points(self) -> Iterator[Tuple[float, complex]]:
        """(a, c) in row order: a ascending, then |c| ascending"""
        for a in self.a_values:
            for c_abs in self.c_values:
                yield a, cmath.rect(c_abs, self.c_phase)


def run_sweep(spec: SweepSpec, cfg: Config) -> Tuple[List[RunRecord], int]:
    """
    Run every admissible grid point.

    Returns:
        (records, number of skipped points)
    """
    records: List[RunRecord] = []
    skipped = 0
    for a, c in spec.points():
        try:
            pair = make_pair_state(a, 1.0 - a, c, cfg)
        except PairStateError as e:
            skipped += 1
            logger.debug(f"Skipping grid point a={a}, |c|={abs(c)}: {e}")
            continue
        config = ProtocolConfig(pair, spec.n_steps, spec.statistics, cfg.MAX_STEPS)
        records.append(RunRecord.from_result(distill(config, cfg)))
    return records, skipped


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    deviation: float
    passed: bool
    informational: bool = False


def _matrix_deviation(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(x) - np.asarray(y))))


def run_checks(n_max: int, tol: float, seed: int, cfg: Config) -> List[CheckResult]:
    """Oracle, step-factor, closed-form and concurrence cross-checks"""
    checks: List[CheckResult] = []

    def record(name: str, deviation: float, informational: bool = False):
        checks.append(CheckResult(name, deviation, deviation <= tol, informational))

    record('beam splitter vs printed B1', compare_with_printed((Spin.UP, Spin.DOWN), printed_b1()))
    record('beam splitter vs printed B2', compare_with_printed((Spin.DOWN, Spin.UP), printed_b2()),
           informational=True)

    for statistics in Statistics:
        factors = derive_step_factors(statistics)
        record(f'step factors ({statistics.value})', max(abs(f - e) for f, e in zip(factors, EXPECTED_FACTORS)))

    duality = max(
        abs(outcome_split(COMPONENT_SPINS[name], Statistics.FERMION).antibunch_prob
            - outcome_split(COMPONENT_SPINS[name], Statistics.BOSON).bunch_prob)
        for name in COMPONENTS
    )
    record('fermion antibunch vs boson bunch', duality)

    rng = np.random.default_rng(seed)
    pairs = [random_pair_state(rng) for _ in range(cfg.VERIFY_PAIRS)]

    closed_dev = 0.0
    prob_dev = 0.0
    conc_dev = 0.0
    for pair in pairs:
        result = distill(ProtocolConfig(pair, n_max, Statistics.FERMION, cfg.MAX_STEPS), cfg)
        states = [make_total_state(pair)] + [step.state for step in result.per_step]
        for k, (state, p_cum) in enumerate(zip(states, result.probability_series)):
            expected, p_f = final_state_closed_form(pair, k)
            closed_dev = max(closed_dev, _matrix_deviation(state.entries, expected.entries))
            prob_dev = max(prob_dev, abs(p_cum - p_f))
            conc_dev = max(conc_dev, abs(concurrence(state, cfg) - concurrence_x(state, strict=False)))
    record(f'iterated distill vs closed form (n <= {n_max})', closed_dev)
    record(f'cumulative probability vs closed form (n <= {n_max})', prob_dev)
    record('general vs X-form concurrence', conc_dev)

    chain_dev = 0.0
    for statistics in Statistics:
        for pair in pairs[:5]:
            flipped = apply_spin_flip(make_total_state(pair))
            for n_pairs in (1, 2):
                chain = simulate_chain(flipped.entries, n_pairs, statistics)
                expected, p_f = final_state_closed_form(pair, n_pairs, statistics)
                chain_dev = max(chain_dev, _matrix_deviation(chain.matrix, expected.entries),
                                abs(chain.probability - p_f), chain.leakage)
    record('composite oracle chain vs closed form (n <= 2)', chain_dev)

    return checks


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', default=None, help='dotenv-format file overriding tolerances and limits')
    parser.add_argument('--log-file', action='store_true', help='also write a detailed session log under logs/')
    parser.add_argument('--log-level', default=None, choices=LOG_LEVELS)


def _add_pair(parser: argparse.ArgumentParser):
    parser.add_argument('--a', type=float, required=True, help='weight of the first basis state')
    parser.add_argument('--b', type=float, default=None, help='weight of the second basis state (default 1 - a)')
    parser.add_argument('--c-re', type=float, default=None, help='real part of the coherence c')
    parser.add_argument('--c-im', type=float, default=None, help='imaginary part of the coherence c')
    parser.add_argument('--c-abs', type=float, default=None, help='|c|, alternative to --c-re/--c-im')
    parser.add_argument('--c-phase', type=float, default=None, help='arg(c) in radians, used with --c-abs')


def _add_protocol(parser: argparse.ArgumentParser):
    parser.add_argument('--n', type=int, default=1, help='number of distillation steps')
    parser.add_argument('--statistics', default='fermion', choices=[s.value for s in Statistics])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='distill',
        description='Entanglement distillation by particle statistics: single runs, sweeps, checks and limits',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='distill one shared pair state')
    _add_pair(run)
    _add_protocol(run)
    run.add_argument('--format', default='json', choices=['csv', 'json'])
    _add_common(run)

    sweep = sub.add_parser('sweep', help='CSV table over a grid of (a, |c|)')
    sweep.add_argument('--a-range', type=parse_range, required=True, help='start:stop:step')
    sweep.add_argument('--c-abs-range', type=parse_range, required=True, help='start:stop:step')
    sweep.add_argument('--c-phase', type=float, default=0.0)
    _add_protocol(sweep)
    sweep.add_argument('--out', default=None, help='output CSV path (default stdout)')
    _add_common(sweep)

    verify = sub.add_parser('verify', help='cross-check oracle, iteration and closed forms')
    verify.add_argument('--n-max', type=int, default=30)
    verify.add_argument('--tol', type=float, default=None)
    verify.add_argument('--seed', type=int, default=None)
    _add_common(verify)

    limits = sub.add_parser('limits', help='asymptotic concurrence and efficiency of a pair')
    _add_pair(limits)
    _add_common(limits)

    return parser


def pair_from_args(args: argparse.Namespace, cfg: Config) -> SharedPairState:
    cartesian = args.c_re is not None or args.c_im is not None
    polar = args.c_abs is not None or args.c_phase is not None
    if cartesian and polar:
        raise ValueError("InvalidArguments: give c either as --c-re/--c-im or as --c-abs/--c-phase, not both")

    if polar:
        c = cmath.rect(args.c_abs or 0.0, args.c_phase or 0.0)
    else:
        c = complex(args.c_re or 0.0, args.c_im or 0.0)

    # an explicit b must agree with 1 - a, make_pair_state checks it at PROBABILITY_TOL
    b = 1.0 - args.a if args.b is None else args.b
    return make_pair_state(args.a, b, c, cfg)


def _diagnostic(exc: Exception) -> str:
    message = str(exc)
    if isinstance(exc, PairStateError) or ':' in message.split(' ', 1)[0]:
        return f"error: {message}"
    return f"error: {type(exc).__name__}: {message}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace, cfg: Config, session: SessionLogger) -> int:
    pair = pair_from_args(args, cfg)
    config = ProtocolConfig(pair, args.n, args.statistics, cfg.MAX_STEPS)
    result = distill(config, cfg)
    record = RunRecord.from_result(result)

    if args.format == 'csv':
        write_csv([record], sys.stdout)
    else:
        payload = record.to_dict()
        payload['target_fidelity'] = fidelity_to_target(result.final_state)
        print(json.dumps(payload))

    session.log_file(f"run: {record.to_dict()}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, cfg: Config, session: SessionLogger) -> int:
    spec = SweepSpec(args.a_range, args.c_abs_range, args.c_phase, args.n, args.statistics)
    # fail on a bad --n before running the grid
    ProtocolConfig(make_pair_state(1.0, 0.0), spec.n_steps, spec.statistics, cfg.MAX_STEPS)

    records, skipped = run_sweep(spec, cfg)

    buffer = io.StringIO()
    write_csv(records, buffer)
    if args.out:
        try:
            with open(args.out, 'w', encoding='utf-8', newline='') as f:
                f.write(buffer.getvalue())
        except OSError as e:
            print(f"error: Unwritable: cannot write {args.out}: {e}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(buffer.getvalue())

    session.log_both(
        f"sweep: {len(records)} row(s) written, {skipped} point(s) skipped",
        f"sweep {spec.a_range} x {spec.c_abs_range}, n={spec.n_steps}, {spec.statistics.value}: "
        f"{len(records)} rows, {skipped} skipped (|c|^2 > ab)",
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, cfg: Config, session: SessionLogger) -> int:
    tol = cfg.VERIFY_TOL if args.tol is None else args.tol
    seed = cfg.DEFAULT_SEED if args.seed is None else args.seed
    if not 0 <= args.n_max <= cfg.MAX_STEPS:
        raise ValueError(f"InvalidArguments: --n-max must be in 0..{cfg.MAX_STEPS}, got {args.n_max}")
    if not tol > 0:
        raise ValueError(f"InvalidArguments: --tol must be positive, got {tol}")

    checks = run_checks(args.n_max, tol, seed, cfg)
    for check in checks:
        status = 'INFO' if check.informational else ('PASS' if check.passed else 'FAIL')
        print(f"{status:<5} {check.name:<50} max deviation {check.deviation:.3e}")
        session.log_file(f"{check.name}: deviation {check.deviation!r} (tol {tol!r})",
                         'INFO' if check.passed or check.informational else 'ERROR')

    gating = [check for check in checks if not check.informational]
    worst = max(gating, key=lambda check: check.deviation)
    if all(check.passed for check in gating):
        print(f"all checks passed (tol {tol:.1e}, seed {seed})")
        return EXIT_OK

    print(f"verification failed: worst deviation {worst.deviation:.3e} in '{worst.name}' (tol {tol:.1e})")
    session.log_file(f"verification failed in '{worst.name}'", 'ERROR')
    return EXIT_VERIFY_FAILED


def cmd_limits(args: argparse.Namespace, cfg: Config, session: SessionLogger) -> int:
    pair = pair_from_args(args, cfg)
    summary = summarize(pair)
    best, best_a = max_asymptotic_probability(cfg.LIMITS_GRID_STEP)

    payload = {'a': pair.a, 'b': pair.b, 'c_re': pair.c.real, 'c_im': pair.c.imag}
    payload.update(summary.to_dict())
    payload['max_asymptotic_probability'] = best
    payload['max_asymptotic_probability_at_a'] = best_a
    print(json.dumps(payload))

    session.log_file(f"limits: {payload}")
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'sweep': cmd_sweep,
    'verify': cmd_verify,
    'limits': cmd_limits,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 for --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        cfg = load_config(args.config)
    except ValueError as e:
        print(f"error: ConfigError: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        logging.basicConfig(format='%(asctime)s [%(levelname)s] %(name)s: %(message)s', stream=sys.stderr)
        logging.getLogger().setLevel(str(args.log_level or cfg.LOG_LEVEL).upper())
        session = SessionLogger(args.command, enable_file_logging=args.log_file, log_dir=cfg.LOG_DIR)
    except (ValueError, OSError) as e:
        print(f"error: LogSetup: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args, cfg, session)
    except ValueError as e:
        print(_diagnostic(e), file=sys.stderr)
        session.log_file(f"{args.command} rejected its input: {e}", 'ERROR')
        return EXIT_USAGE
    finally:
        session.close()


if __name__ == "__main__":
    sys.exit(main())
