"""The complementary and equivalent reductions, symmetrization and pair checks.

Both reductions randomize f by Γ^σ_τ and cut the result into two half-tables.
``ReductionDraws`` lets tests force the permutations normally drawn from the rng.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from src.config import BAD_CONSTANT
from src.core_model import gamma_table, make_r_to_one
from src.errors import InvariantViolation, PreconditionError
from src.inv_stats import inv_profile, is_bad
from src.models import (
    FunctionPair,
    InvProfile,
    OracleFunction,
    PairOrigin,
    PairRelationship,
    Permutation,
    SourceMeta,
)
from src.rng import Rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReductionDraws:
    """Permutations to use instead of random draws (None = draw from the rng)."""

    sigma: Permutation | None = None
    tau: Permutation | None = None
    sigma1: Permutation | None = None
    sigma2: Permutation | None = None


_NO_DRAWS = ReductionDraws()


def _draw(forced: Permutation | None, k: int, rng: Rng) -> np.ndarray:
    if forced is None:
        return rng.permutation(k)
    if forced.k != k:
        raise PreconditionError("dimension mismatch")
    return forced.as_array()


# ---------------------------------------------------------------------------
# Table kernels
# ---------------------------------------------------------------------------


def complementary_tables(
    values: np.ndarray, N: int, rng: Rng, draws: ReductionDraws = _NO_DRAWS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, tau) with a, b the two halves of Γ^σ_τ(f)."""
    n = len(values)
    if n % 2:
        raise PreconditionError("n must be even")
    sigma = _draw(draws.sigma, n, rng)
    tau = _draw(draws.tau, N, rng)
    g = gamma_table(values, sigma, tau)
    return g[: n // 2], g[n // 2 :], tau


def equivalent_tables(
    values: np.ndarray, N: int, rng: Rng, draws: ReductionDraws = _NO_DRAWS
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, tau) with a, b two independent reindexings of the first half of Γ^σ_τ(f)."""
    n = len(values)
    if n % 2:
        raise PreconditionError("n must be even")
    half = n // 2
    sigma = _draw(draws.sigma, n, rng)
    tau = _draw(draws.tau, N, rng)
    sigma1 = _draw(draws.sigma1, half, rng)
    sigma2 = _draw(draws.sigma2, half, rng)
    first = gamma_table(values, sigma, tau)[:half]
    a = np.empty_like(first)
    b = np.empty_like(first)
    a[sigma1] = first
    b[sigma2] = first
    return a, b, tau


_TABLE_KERNELS = {
    PairOrigin.COMPLEMENTARY: complementary_tables,
    PairOrigin.EQUIVALENT: equivalent_tables,
}


def reduce_tables(
    origin: PairOrigin, values: np.ndarray, N: int, rng: Rng
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return _TABLE_KERNELS[PairOrigin(origin)](values, N, rng)


# ---------------------------------------------------------------------------
# Reductions on models
# ---------------------------------------------------------------------------


def _reduce(origin: PairOrigin, f: OracleFunction, rng: Rng, draws: ReductionDraws) -> FunctionPair:
    if f.n % 2:
        raise PreconditionError("n must be even")
    values = f.as_array()
    a, b, tau = _TABLE_KERNELS[origin](values, f.range_size, rng, draws)
    images = np.unique(tau[np.unique(values) - 1] + 1)
    return FunctionPair(
        origin=origin,
        a=tuple(a.tolist()),
        b=tuple(b.tolist()),
        images=tuple(images.tolist()),
        N=f.range_size,
        source_meta=SourceMeta(seed=rng.seed, promise=f.promise),
    )


def complementary_reduce(f: OracleFunction, rng: Rng, draws: ReductionDraws = _NO_DRAWS) -> FunctionPair:
    """a(i) = Γ^σ_τ(f)(i), b(i) = Γ^σ_τ(f)(n/2 + i)."""
    return _reduce(PairOrigin.COMPLEMENTARY, f, rng, draws)


def equivalent_reduce(f: OracleFunction, rng: Rng, draws: ReductionDraws = _NO_DRAWS) -> FunctionPair:
    """a(σ1(i)) = Γ^σ_τ(f)(i), b(σ2(i)) = Γ^σ_τ(f)(i) for i ≤ n/2."""
    return _reduce(PairOrigin.EQUIVALENT, f, rng, draws)


REDUCTIONS = {
    PairOrigin.COMPLEMENTARY: complementary_reduce,
    PairOrigin.EQUIVALENT: equivalent_reduce,
}


def _range_size(p: FunctionPair) -> int:
    if p.range_size is not None:
        return p.range_size
    return max(p.a + p.b + (p.images or ()))


def symmetrize_pair(p: FunctionPair, rng: Rng, draws: ReductionDraws = _NO_DRAWS) -> FunctionPair:
    """(Γ^{σ1}_τ(a), Γ^{σ2}_τ(b)) for fresh σ1, σ2 on [n/2] and a shared τ."""
    N = _range_size(p)
    half = p.half
    sigma1 = _draw(draws.sigma1, half, rng)
    sigma2 = _draw(draws.sigma2, half, rng)
    tau = _draw(draws.tau, N, rng)
    a = gamma_table(np.asarray(p.a, dtype=np.int64), sigma1, tau)
    b = gamma_table(np.asarray(p.b, dtype=np.int64), sigma2, tau)
    images = None
    if p.images is not None:
        images = tuple(sorted(int(tau[x - 1]) + 1 for x in p.images))
    return p.model_copy(update={"a": tuple(a.tolist()), "b": tuple(b.tolist()), "images": images})


def pair_relationship(p: FunctionPair) -> PairRelationship:
    range_a, range_b = set(p.a), set(p.b)
    if range_a == range_b:
        return PairRelationship.EQUAL_SETS
    if range_a.isdisjoint(range_b):
        return PairRelationship.DISJOINT_SETS
    return PairRelationship.OVERLAPPING


def inv_pair(p: FunctionPair, r: int) -> tuple[InvProfile, InvProfile]:
    """(INV(a), INV(b)) relative to the pair's recorded image set."""
    if p.images is None:
        raise PreconditionError("pair carries no image set")
    return inv_profile(p.a, p.images, r), inv_profile(p.b, p.images, r)


# ---------------------------------------------------------------------------
# Γ-equivalence witness
# ---------------------------------------------------------------------------


def _signatures(p: FunctionPair) -> dict[int, tuple[int, int]]:
    count_a, count_b = Counter(p.a), Counter(p.b)
    universe = set(p.images) if p.images is not None else set(p.a) | set(p.b)
    return {x: (count_a[x], count_b[x]) for x in universe}


def _positions(table: tuple[int, ...]) -> dict[int, list[int]]:
    where: dict[int, list[int]] = defaultdict(list)
    for i, x in enumerate(table):
        where[x].append(i)
    return where


def gamma_witness(p: FunctionPair, q: FunctionPair) -> tuple[Permutation, Permutation, Permutation] | None:
    """(σ1, σ2, τ) with q = (Γ^{σ1}_τ(p.a), Γ^{σ2}_τ(p.b)), or None if no such triple exists.

    Two pairs are in the same orbit iff their images match up one-to-one with
    equal (count in a, count in b) signatures.
    """
    if p.half != q.half:
        return None
    N = max(_range_size(p), _range_size(q))
    sig_p, sig_q = _signatures(p), _signatures(q)
    groups_q: dict[tuple[int, int], list[int]] = defaultdict(list)
    for x, sig in sorted(sig_q.items()):
        groups_q[sig].append(x)
    if sorted(sig_p.values()) != sorted(sig_q.values()):
        return None

    tau = np.full(N, -1, dtype=np.int64)
    for x, sig in sorted(sig_p.items()):
        tau[x - 1] = groups_q[sig].pop() - 1
    used = set(tau[tau >= 0].tolist())
    spare = iter(sorted(set(range(N)) - used))
    for i in range(N):
        if tau[i] < 0:
            tau[i] = next(spare)

    def _domain_map(src: tuple[int, ...], dst: tuple[int, ...]) -> np.ndarray:
        where_dst = _positions(dst)
        sigma = np.empty(len(src), dtype=np.int64)
        for x, sources in _positions(src).items():
            for i, j in zip(sources, where_dst[int(tau[x - 1]) + 1], strict=True):
                sigma[i] = j
        return sigma

    sigma1 = _domain_map(p.a, q.a)
    sigma2 = _domain_map(p.b, q.b)
    witness = (Permutation.from_array(sigma1), Permutation.from_array(sigma2), Permutation.from_array(tau))
    a = gamma_table(np.asarray(p.a, dtype=np.int64), sigma1, tau)
    b = gamma_table(np.asarray(p.b, dtype=np.int64), sigma2, tau)
    if tuple(a.tolist()) != q.a or tuple(b.tolist()) != q.b:
        raise InvariantViolation("constructed witness does not map p onto q")
    return witness


# ---------------------------------------------------------------------------
# Conditioned sampling
# ---------------------------------------------------------------------------


def sample_comes_from(
    n: int,
    r: int,
    N: int,
    origin: PairOrigin,
    rng: Rng,
    constant: float = BAD_CONSTANT,
    max_attempts: int = 1000,
) -> FunctionPair:
    """A reduced pair from a random r-to-one f, conditioned on INV(a) not being BAD."""
    reduce = REDUCTIONS[PairOrigin(origin)]
    for attempt in range(1, max_attempts + 1):
        pair = reduce(make_r_to_one(n, r, N, rng), rng)
        if not is_bad(inv_profile(pair.a, pair.images, r), constant):
            logger.debug("non-BAD %s pair after %d attempt(s)", origin, attempt)
            return pair
    raise PreconditionError("retry budget exhausted")


def pair_to_json(p: FunctionPair) -> str:
    """{"origin", "a", "b"} in that order."""
    return p.model_dump_json(include={"origin", "a", "b"})
