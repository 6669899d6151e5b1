"""Statevector simulation of the quantum query model.

Oracles are phase oracles over the index register. Every oracle application and
every classical read is charged to a ``QueryTally``.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from src.config import MAX_AMPLITUDES
from src.core_model import make_one_to_one, make_r_to_one
from src.errors import InvariantViolation, PreconditionError
from src.models import AcceptanceTable, Decision, FunctionPair, PairOrigin, PairRelationship, PromiseKind
from src.reductions import REDUCTIONS, pair_relationship
from src.rng import Rng
from src.telemetry import get_tracer
from src.trials import run_trials

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-9

Marked = Callable[[int], bool] | np.ndarray
Distinguisher = Callable[[FunctionPair, Rng], bool]


@dataclass
class QueryTally:
    """Oracle calls to a and b plus classical reads, all monotone within a run."""

    oracle_calls_a: int = 0
    oracle_calls_b: int = 0
    classical_reads: int = 0

    @property
    def total(self) -> int:
        return self.oracle_calls_a + self.oracle_calls_b

    def charge(self, oracle: str, count: int = 1, *, classical: bool = False) -> None:
        if oracle == "a":
            self.oracle_calls_a += count
        elif oracle == "b":
            self.oracle_calls_b += count
        else:
            raise PreconditionError(f"unknown oracle: {oracle}")
        if classical:
            self.classical_reads += count

    def as_dict(self) -> dict[str, int]:
        return {
            "oracle_calls_a": self.oracle_calls_a,
            "oracle_calls_b": self.oracle_calls_b,
            "classical_reads": self.classical_reads,
            "total": self.total,
        }


@dataclass
class StateVector:
    """Complex amplitudes over the index basis |1>, ..., |n>."""

    amplitudes: np.ndarray
    tally: QueryTally = field(default_factory=QueryTally)

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.ndim != 1 or self.amplitudes.size == 0:
            raise PreconditionError("state must be a nonempty vector")
        if self.amplitudes.size > MAX_AMPLITUDES:
            raise PreconditionError("statevector too large")
        self.check_normalized()

    @classmethod
    def uniform(cls, n: int, tally: QueryTally | None = None) -> "StateVector":
        return cls(np.full(n, 1 / math.sqrt(n), dtype=np.complex128), tally or QueryTally())

    @classmethod
    def basis(cls, n: int, index: int, tally: QueryTally | None = None) -> "StateVector":
        amplitudes = np.zeros(n, dtype=np.complex128)
        amplitudes[index - 1] = 1
        return cls(amplitudes, tally or QueryTally())

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def check_normalized(self) -> None:
        norm = float(self.probabilities().sum())
        if abs(norm - 1) > NORM_TOLERANCE:
            raise InvariantViolation(f"state norm drifted to {norm!r}")


def _mask(n: int, marked: Marked) -> np.ndarray:
    if isinstance(marked, np.ndarray):
        if marked.shape != (n,):
            raise PreconditionError("dimension mismatch")
        return marked.astype(bool)
    return np.fromiter((bool(marked(i)) for i in range(1, n + 1)), dtype=bool, count=n)


def phase_oracle(state: StateVector, marked: Marked, oracle: str = "b") -> StateVector:
    """Negate the amplitude of every marked |i>; one oracle call."""
    mask = _mask(state.dimension, marked)
    state.tally.charge(oracle)
    return StateVector(np.where(mask, -state.amplitudes, state.amplitudes), state.tally)


def diffusion(state: StateVector) -> StateVector:
    """Reflection about the uniform superposition, 2|s><s| - I."""
    mean = state.amplitudes.mean()
    return StateVector(2 * mean - state.amplitudes, state.tally)


@dataclass
class GroverResult:
    found: int | None
    success_prob: float
    iterations: int
    tally: QueryTally


def _search(
    n: int, mask: np.ndarray, iterations: int, rng: Rng, tally: QueryTally, oracle: str
) -> tuple[int, float]:
    """Run the iterations, measure, and return (1-based index, success probability)."""
    if iterations < 0:
        raise PreconditionError("iterations must be non-negative")
    state = StateVector.uniform(n, tally)
    for _ in range(iterations):
        state = diffusion(phase_oracle(state, mask, oracle))
    probs = state.probabilities()
    success = float(probs[mask].sum())
    index = int(rng.generator.choice(n, p=probs / probs.sum())) + 1
    return index, success


def grover_search(n: int, marked: Marked, iterations: int, rng: Rng) -> GroverResult:
    """Grover iterations from the uniform state, then a measurement and one verifying read."""
    if n < 1:
        raise PreconditionError("n must be positive")
    if n > MAX_AMPLITUDES:
        raise PreconditionError("statevector too large")
    tally = QueryTally()
    mask = _mask(n, marked)
    index, success = _search(n, mask, iterations, rng, tally, "b")
    tally.charge("b", classical=True)
    found = index if mask[index - 1] else None
    return GroverResult(found=found, success_prob=success, iterations=iterations, tally=tally)


def grover_closed_form(n: int, marked_count: int, iterations: int) -> float:
    """sin^2((2k+1) arcsin(sqrt(m/n)))."""
    theta = math.asin(math.sqrt(marked_count / n))
    return math.sin((2 * iterations + 1) * theta) ** 2


def grover_iterations(domain: int, marked_count: int) -> int:
    """floor((π/4) sqrt(domain / marked_count)), at least 1 while some item is unmarked."""
    if marked_count < 1:
        raise PreconditionError("marked count must be positive")
    iterations = math.floor(math.pi / 4 * math.sqrt(domain / marked_count))
    return max(1, iterations) if marked_count < domain else iterations


# ---------------------------------------------------------------------------
# Amplitude amplification
# ---------------------------------------------------------------------------


def amplitude_amplify(p: float, rounds: int) -> float:
    """Success probability after ``rounds`` rounds, simulated on the good/bad plane."""
    if not 0 <= p <= 1:
        raise PreconditionError("probability out of range")
    if rounds < 0:
        raise PreconditionError("rounds must be non-negative")
    theta = math.asin(math.sqrt(p))
    start = np.array([math.cos(theta), math.sin(theta)])
    reflect_start = 2 * np.outer(start, start) - np.eye(2)
    flip_good = np.diag([1.0, -1.0])
    step = reflect_start @ flip_good
    vector = np.linalg.matrix_power(step, rounds) @ start
    return float(vector[1] ** 2)


def amplitude_amplify_statevector(initial: np.ndarray, good: np.ndarray, rounds: int) -> float:
    """Same rounds on a full statevector: S_ψ0 · S_good applied ``rounds`` times."""
    state = StateVector(initial)
    start = state.amplitudes.copy()
    good = good.astype(bool)
    for _ in range(rounds):
        flipped = np.where(good, -state.amplitudes, state.amplitudes)
        state = StateVector(2 * start * np.vdot(start, flipped) - flipped, state.tally)
    return float(state.probabilities()[good].sum())


# ---------------------------------------------------------------------------
# Set-equality algorithms
# ---------------------------------------------------------------------------


@dataclass
class SetEqualityRun:
    decision: Decision
    tally: QueryTally
    iterations: int
    flagged_overlap: bool = False


def _flag_overlap(pair: FunctionPair) -> bool:
    if pair_relationship(pair) is PairRelationship.OVERLAPPING:
        logger.debug("pair violates the set-equality promise; decision is undefined")
        return True
    return False


def sqrt_n_budget(half: int) -> int:
    """2 + ceil((π/4) sqrt(n/2)), with n/2 the pair's half-domain size."""
    return 2 + math.ceil(math.pi / 4 * math.sqrt(half))


def cuberoot_budget(half: int, k: int) -> int:
    """k + ceil((π/4) sqrt((n/2)/k)) + 2."""
    return k + math.ceil(math.pi / 4 * math.sqrt(half / k)) + 2


def ceil_cuberoot(value: int) -> int:
    k = max(1, round(value ** (1 / 3)))
    while k**3 < value:
        k += 1
    while k > 1 and (k - 1) ** 3 >= value:
        k -= 1
    return k


def set_equality_sqrt_n(pair: FunctionPair, rng: Rng) -> SetEqualityRun:
    """Read a(1), Grover-search b for it, verify the hit."""
    half = pair.half
    tally = QueryTally()
    target = pair.a[0]
    tally.charge("a", classical=True)
    b = np.asarray(pair.b, dtype=np.int64)
    iterations = grover_iterations(half, 1)
    index, _ = _search(half, b == target, iterations, rng, tally, "b")
    tally.charge("b", classical=True)
    decision = Decision.EQUAL if pair.b[index - 1] == target else Decision.DISJOINT
    return SetEqualityRun(decision, tally, iterations, _flag_overlap(pair))


def set_equality_cuberoot(pair: FunctionPair, rng: Rng, k: int | None = None) -> SetEqualityRun:
    """Sample k values of a classically, Grover-search b for any of them, verify."""
    half = pair.half
    k = ceil_cuberoot(half) if k is None else k
    if k > half:
        raise PreconditionError("sample exceeds domain")
    if k < 1:
        raise PreconditionError("sample size must be positive")
    tally = QueryTally()
    positions = rng.sample(half, k)
    sampled = {pair.a[int(i)] for i in positions}
    tally.charge("a", k, classical=True)
    b = np.asarray(pair.b, dtype=np.int64)
    iterations = grover_iterations(half, k)
    index, _ = _search(half, np.isin(b, list(sampled)), iterations, rng, tally, "b")
    tally.charge("b", classical=True)
    decision = Decision.EQUAL if pair.b[index - 1] in sampled else Decision.DISJOINT
    return SetEqualityRun(decision, tally, iterations, _flag_overlap(pair))


# ---------------------------------------------------------------------------
# Distinguishers and the acceptance table
# ---------------------------------------------------------------------------
# A distinguisher accepts a pair when it answers "Disjoint".


def exact_set_comparison(pair: FunctionPair, rng: Rng) -> bool:
    return set(pair.a).isdisjoint(pair.b)


def always_accept(pair: FunctionPair, rng: Rng) -> bool:
    return True


def always_reject(pair: FunctionPair, rng: Rng) -> bool:
    return False


def sqrt_n_distinguisher(pair: FunctionPair, rng: Rng) -> bool:
    return set_equality_sqrt_n(pair, rng).decision is Decision.DISJOINT


def cuberoot_distinguisher(pair: FunctionPair, rng: Rng) -> bool:
    return set_equality_cuberoot(pair, rng).decision is Decision.DISJOINT


class MajorityVote:
    """Odd number of independent repetitions of a distinguisher, majority answer."""

    def __init__(self, distinguisher: Distinguisher, repetitions: int = 5) -> None:
        if repetitions < 1 or repetitions % 2 == 0:
            raise PreconditionError("repetitions must be a positive odd number")
        self.distinguisher = distinguisher
        self.repetitions = repetitions

    def __call__(self, pair: FunctionPair, rng: Rng) -> bool:
        votes = sum(bool(self.distinguisher(pair, rng)) for _ in range(self.repetitions))
        return 2 * votes > self.repetitions


DISTINGUISHERS: dict[str, Distinguisher] = {
    "exact": exact_set_comparison,
    "accept": always_accept,
    "reject": always_reject,
    "sqrtn": MajorityVote(sqrt_n_distinguisher),
    "cuberoot": MajorityVote(cuberoot_distinguisher),
}

_TABLE_CELLS = (
    ("p_c1", PairOrigin.COMPLEMENTARY, PromiseKind.ONE_TO_ONE),
    ("p_c2", PairOrigin.COMPLEMENTARY, PromiseKind.R_TO_ONE),
    ("p_e1", PairOrigin.EQUIVALENT, PromiseKind.ONE_TO_ONE),
    ("p_e2", PairOrigin.EQUIVALENT, PromiseKind.R_TO_ONE),
)


def _acceptance_chunk(
    rng: Rng,
    count: int,
    *,
    distinguisher: Distinguisher,
    n: int,
    r: int,
    N: int,
    origin: PairOrigin,
    source: PromiseKind,
) -> int:
    reduce = REDUCTIONS[origin]
    accepted = 0
    for _ in range(count):
        f = make_one_to_one(n, N, rng) if source is PromiseKind.ONE_TO_ONE else make_r_to_one(n, r, N, rng)
        accepted += int(bool(distinguisher(reduce(f, rng), rng)))
    return accepted


def acceptance_table(
    distinguisher: Distinguisher,
    n: int,
    r: int,
    trials: int,
    rng: Rng,
    jobs: int = 1,
    N: int | None = None,
) -> AcceptanceTable:
    """Monte Carlo acceptance rates for each reduction x source type."""
    N = n if N is None else N
    cells: dict[str, float] = {}
    with get_tracer().start_as_current_span("simulate.acceptance_table") as span:
        span.set_attribute("qqlab.n", n)
        span.set_attribute("qqlab.r", r)
        span.set_attribute("qqlab.trials", trials)
        for name, origin, source in _TABLE_CELLS:
            task = partial(
                _acceptance_chunk, distinguisher=distinguisher, n=n, r=r, N=N, origin=origin, source=source
            )
            accepted = run_trials(task, trials, rng, label=f"table:{name}", jobs=jobs)
            cells[name] = accepted / trials
            logger.debug("acceptance %s: %d/%d", name, accepted, trials)
    return AcceptanceTable(trials=trials, **cells)
