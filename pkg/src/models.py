"""Pydantic data models for qqlab.

Value tables and permutations are 1-based, matching the [n] notation used in
reports. Kernels may convert to 0-based numpy arrays internally.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from enum import StrEnum
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, model_validator


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise ValueError(f"cannot interpret {value!r} as a rational")


ExactRational = Annotated[Fraction, PlainValidator(_to_fraction), PlainSerializer(str, return_type=str)]
"""Exact reduced rational; serialized as "p/q" (or "p" for integers)."""


# ---------------------------------------------------------------------------
# core_model
# ---------------------------------------------------------------------------


class PromiseKind(StrEnum):
    """Promise attached to an oracle function."""

    ONE_TO_ONE = "one_to_one"
    R_TO_ONE = "r_to_one"


class Promise(BaseModel):
    """Declared promise: one-to-one, or r-to-one with its r."""

    model_config = ConfigDict(frozen=True)

    kind: PromiseKind
    r: int | None = Field(None, ge=2, description="Preimage count per image (r_to_one only)")

    @model_validator(mode="after")
    def _check_r(self) -> Promise:
        if self.kind is PromiseKind.R_TO_ONE and self.r is None:
            raise ValueError("r_to_one promise needs r")
        if self.kind is PromiseKind.ONE_TO_ONE and self.r is not None:
            raise ValueError("one_to_one promise takes no r")
        return self

    @classmethod
    def one_to_one(cls) -> Promise:
        return cls(kind=PromiseKind.ONE_TO_ONE)

    @classmethod
    def r_to_one(cls, r: int) -> Promise:
        return cls(kind=PromiseKind.R_TO_ONE, r=r)


class OracleFunction(BaseModel):
    """A total function [n] -> [N] stored as a value table.

    Shape invariants (length, range, r | n) are enforced here; whether the table
    actually honours its promise is answered by ``core_model.is_promise_valid``.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(..., gt=0, description="Domain size")
    range_size: int = Field(..., alias="N", gt=0, description="Range size N")
    promise: Promise
    values: tuple[int, ...] = Field(..., description="f(1), ..., f(n), each in [1..N]")

    @model_validator(mode="after")
    def _check_table(self) -> OracleFunction:
        if len(self.values) != self.n:
            raise ValueError("value table length must equal n")
        if self.values and (min(self.values) < 1 or max(self.values) > self.range_size):
            raise ValueError("value outside [1..N]")
        if self.promise.r is not None and self.n % self.promise.r:
            raise ValueError("r does not divide n")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)


class PartialFunction(BaseModel):
    """A partial function [n] -> [N] as its set of (i, f(i)) pairs."""

    model_config = ConfigDict(frozen=True)

    pairs: frozenset[tuple[int, int]]

    @model_validator(mode="after")
    def _check_pairs(self) -> PartialFunction:
        firsts = [i for i, _ in self.pairs]
        if len(firsts) != len(set(firsts)):
            raise ValueError("two pairs share a first coordinate")
        if any(i < 1 or j < 1 for i, j in self.pairs):
            raise ValueError("pairs must be 1-based")
        return self

    @classmethod
    def of(cls, pairs: Sequence[tuple[int, int]]) -> PartialFunction:
        return cls(pairs=frozenset(pairs))

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.pairs)

    @property
    def image(self) -> frozenset[int]:
        return frozenset(j for _, j in self.pairs)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)


class Permutation(BaseModel):
    """A bijection on [1..k]."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(..., gt=0)
    mapping: tuple[int, ...] = Field(..., description="mapping[i-1] is the image of i")

    @model_validator(mode="after")
    def _check_bijection(self) -> Permutation:
        if len(self.mapping) != self.k:
            raise ValueError("mapping length must equal k")
        if sorted(self.mapping) != list(range(1, self.k + 1)):
            raise ValueError("mapping is not a bijection on [1..k]")
        return self

    def __call__(self, i: int) -> int:
        return self.mapping[i - 1]

    def as_array(self) -> np.ndarray:
        """0-based image array: ``arr[i] = sigma(i + 1) - 1``."""
        return np.asarray(self.mapping, dtype=np.int64) - 1

    @classmethod
    def from_array(cls, arr: np.ndarray) -> Permutation:
        return cls(k=len(arr), mapping=tuple(int(x) + 1 for x in arr))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


class PairOrigin(StrEnum):
    """Which process produced a FunctionPair."""

    COMPLEMENTARY = "complementary"
    EQUIVALENT = "equivalent"
    EXTERNAL = "external"


class PairRelationship(StrEnum):
    """How range(a) and range(b) relate as sets."""

    EQUAL_SETS = "equal_sets"
    DISJOINT_SETS = "disjoint_sets"
    OVERLAPPING = "overlapping"


class SourceMeta(BaseModel):
    """Seed and promise of the function a pair was reduced from."""

    model_config = ConfigDict(frozen=True)

    seed: int | None = None
    promise: Promise


class FunctionPair(BaseModel):
    """The pair (a, b), each with domain [n/2]."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    origin: PairOrigin = PairOrigin.EXTERNAL
    a: tuple[int, ...]
    b: tuple[int, ...]
    images: tuple[int, ...] | None = Field(None, description="Image set of the randomized source function")
    range_size: int | None = Field(None, alias="N", gt=0)
    source_meta: SourceMeta | None = None

    @model_validator(mode="after")
    def _check_tables(self) -> FunctionPair:
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        values = self.a + self.b
        if values and min(values) < 1:
            raise ValueError("values must lie in [1..N]")
        if self.range_size is not None and values and max(values) > self.range_size:
            raise ValueError("values must lie in [1..N]")
        if self.images is not None and not set(values) <= set(self.images):
            raise ValueError("pair uses a value outside its image set")
        return self

    @property
    def half(self) -> int:
        return len(self.a)


# ---------------------------------------------------------------------------
# inv_stats
# ---------------------------------------------------------------------------


class InvProfile(BaseModel):
    """Image-multiplicity histogram (a_0, ..., a_r) of a half-function."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(..., gt=0)
    n: int = Field(..., gt=0, description="Domain size of the source function")
    counts: tuple[int, ...]

    @model_validator(mode="after")
    def _check_counts(self) -> InvProfile:
        if len(self.counts) != self.r + 1:
            raise ValueError("counts must have r+1 entries")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")
        if self.n % self.r:
            raise ValueError("r does not divide n")
        if sum(self.counts) != self.n // self.r:
            raise ValueError("counts must sum to n/r")
        return self

    @property
    def image_count(self) -> int:
        return self.n // self.r

    @property
    def point_count(self) -> int:
        """Sum of i * a_i: the number of domain points the profile accounts for."""
        return sum(i * c for i, c in enumerate(self.counts))


# ---------------------------------------------------------------------------
# probability
# ---------------------------------------------------------------------------


class TailLaw(StrEnum):
    HYPERGEOMETRIC = "hypergeometric"
    BINOMIAL = "binomial"


class TailQuery(BaseModel):
    """Population n with r marked, a sample of ``draw``, deviation threshold s."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0)
    r: int = Field(..., ge=0)
    draw: int = Field(..., ge=0)
    s: ExactRational

    @model_validator(mode="after")
    def _check_sizes(self) -> TailQuery:
        if self.r > self.n or self.draw > self.n:
            raise ValueError("need 0 <= r, draw <= n")
        return self

    @classmethod
    def binomial(cls, r: int, s: Fraction | int | float) -> TailQuery:
        """Query for r fair coin flips (population fields mirror r)."""
        return cls(n=r, r=r, draw=r, s=s)

    @classmethod
    def half_split(cls, n: int, r: int, s: Fraction | int | float) -> TailQuery:
        """Query for the marked points landing in a uniform half of [n]."""
        return cls(n=n, r=r, draw=n // 2, s=s)


class BadProbability(BaseModel):
    """Certified per-image BAD tail and its union bound."""

    model_config = ConfigDict(frozen=True)

    n: int
    r: int
    constant: float
    threshold: float = Field(..., description="constant * sqrt(r ln(n/r)), display only")
    exact_per_image: ExactRational
    union_bound: ExactRational
    epsilon: float = Field(..., description="Chernoff epsilon matching the threshold")
    chernoff_window: bool = Field(..., description="Whether epsilon lies in [0, 1]")
    chernoff_union_bound: float | None = None


class MonteCarloEstimate(BaseModel):
    """Empirical rate with its Wilson score interval."""

    model_config = ConfigDict(frozen=True)

    successes: int = Field(..., ge=0)
    trials: int = Field(..., ge=1)
    rate: float
    wilson: tuple[float, float]
    confidence: float = 0.99


# ---------------------------------------------------------------------------
# adversary
# ---------------------------------------------------------------------------


class RelationSpec(BaseModel):
    """Explicit input sets X, Y with a relation predicate on X x Y."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xs: tuple[tuple[int, ...], ...]
    ys: tuple[tuple[int, ...], ...]
    related: Callable[[tuple[int, ...], tuple[int, ...]], bool]
    label: str = "custom"

    @model_validator(mode="after")
    def _check_shapes(self) -> RelationSpec:
        if not self.xs or not self.ys:
            raise ValueError("X and Y must be nonempty")
        lengths = {len(x) for x in self.xs} | {len(y) for y in self.ys}
        if len(lengths) != 1:
            raise ValueError("all inputs must have identical length")
        return self

    @property
    def length(self) -> int:
        return len(self.xs[0])


class MultiplicityProfile(BaseModel):
    """Per-image preimage counts (m_1, ..., m_{n/r}) of a half-function b."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(..., gt=0)
    mults: tuple[int, ...]

    @model_validator(mode="after")
    def _check_mults(self) -> MultiplicityProfile:
        if not self.mults:
            raise ValueError("profile needs at least one image")
        if any(m < 0 or m > self.r for m in self.mults):
            raise ValueError("multiplicities must lie in [0..r]")
        if 2 * sum(self.mults) != self.r * len(self.mults):
            raise ValueError("multiplicities must sum to n/2")
        return self

    @property
    def n(self) -> int:
        return self.r * len(self.mults)

    def complement(self) -> MultiplicityProfile:
        """Per-image counts r - m_j: the profile a complementary partner carries."""
        return MultiplicityProfile(r=self.r, mults=tuple(self.r - m for m in self.mults))


class AdversaryCounts(BaseModel):
    """Relation counts m, m', l, l' and the bound sqrt(m m' / (l l'))."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1)
    m_prime: int = Field(..., ge=1)
    l: int = Field(..., ge=1)  # noqa: E741
    l_prime: int = Field(..., ge=1)
    bound: float
    bound_squared: ExactRational

    @classmethod
    def from_counts(cls, m: int, m_prime: int, l: int, l_prime: int) -> AdversaryCounts:  # noqa: E741
        squared = Fraction(m * m_prime, l * l_prime)
        return cls(
            m=m,
            m_prime=m_prime,
            l=l,
            l_prime=l_prime,
            bound=float(np.sqrt(float(squared))),
            bound_squared=squared,
        )


# ---------------------------------------------------------------------------
# query_sim / bounds_pipeline
# ---------------------------------------------------------------------------


class Decision(StrEnum):
    EQUAL = "equal"
    DISJOINT = "disjoint"


class AcceptanceTable(BaseModel):
    """Acceptance ("answers Disjoint") rates per reduction x source type."""

    model_config = ConfigDict(frozen=True)

    p_c1: float = Field(..., ge=0, le=1, description="complementary, one-to-one source")
    p_c2: float = Field(..., ge=0, le=1, description="complementary, r-to-one source")
    p_e1: float = Field(..., ge=0, le=1, description="equivalent, one-to-one source")
    p_e2: float = Field(..., ge=0, le=1, description="equivalent, r-to-one source")
    trials: int = Field(0, ge=0)


class DichotomyOutcome(StrEnum):
    COLLISION_SOLVER_EXISTS = "collision_solver_exists"
    DISTINCTION_SOLVER_EXISTS = "distinction_solver_exists"


class BoundReport(BaseModel):
    """Lower-bound terms at r and the best r on a grid (up to constant factors)."""

    model_config = ConfigDict(frozen=True)

    n: int
    r: int
    collision_term: float
    distinction_term: float
    composed: float
    optimal_r: int
    optimal_value: float
    headline_term: float = Field(..., description="(n / ln n)^(1/5)")
    grid: str = "pow2"
    note: str = "raw term values, up to constant factors"

    @model_validator(mode="after")
    def _check_composition(self) -> BoundReport:
        if self.composed > min(self.collision_term, self.distinction_term):
            raise ValueError("composed bound exceeds a term")
        if self.optimal_value < self.composed:
            raise ValueError("optimal value below the composed bound at r")
        return self


# ---------------------------------------------------------------------------
# cli
# ---------------------------------------------------------------------------


class Command(StrEnum):
    REDUCE = "reduce"
    INV = "inv"
    BADPROB = "badprob"
    ADVERSARY = "adversary"
    SIMULATE = "simulate"
    BOUNDS = "bounds"


class ReportFormat(StrEnum):
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """Parsed, validated command-line configuration."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    command: Command
    n: int | None = Field(None, gt=0)
    r: int | None = Field(None, gt=0)
    range_size: int | None = Field(None, alias="N", gt=0)
    trials: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    format: ReportFormat = ReportFormat.JSON
    out: Path | None = None
    jobs: int = Field(1, ge=1)
    constant: float | None = Field(None, gt=0)

    # command-specific
    reduction: PairOrigin = PairOrigin.COMPLEMENTARY
    source: PromiseKind = PromiseKind.R_TO_ONE
    mode: str = "comesfrom"
    profile: tuple[int, ...] | None = None
    relation: Path | None = None
    alg: str = "grover"
    marked: int = Field(1, ge=0)
    iterations: int | None = Field(None, ge=0)
    k: int | None = Field(None, ge=1)
    distinguisher: str = "exact"
    grid: str = "pow2"
    sweep: str | None = None
