"""Instance representations: permutations, the group action Γ, promise generators.

Models hold 1-based tuples. The ``*_table`` helpers work on 0-based numpy
arrays and are what the Monte Carlo loops call directly.
"""

import json
import logging
from collections import Counter

import numpy as np

from src.errors import PreconditionError
from src.models import OracleFunction, PartialFunction, Permutation, Promise, PromiseKind
from src.rng import Rng

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------


def identity(k: int) -> Permutation:
    return Permutation(k=k, mapping=tuple(range(1, k + 1)))


def transposition(k: int, i: int, j: int) -> Permutation:
    """The permutation of [1..k] swapping i and j."""
    if not (1 <= i <= k and 1 <= j <= k):
        raise PreconditionError("transposition outside [1..k]")
    mapping = list(range(1, k + 1))
    mapping[i - 1], mapping[j - 1] = j, i
    return Permutation(k=k, mapping=tuple(mapping))


def compose(outer: Permutation, inner: Permutation) -> Permutation:
    """outer ∘ inner, i.e. i -> outer(inner(i))."""
    if outer.k != inner.k:
        raise PreconditionError("dimension mismatch")
    return Permutation(k=outer.k, mapping=tuple(outer(inner(i)) for i in range(1, inner.k + 1)))


def inverse(p: Permutation) -> Permutation:
    inv = [0] * p.k
    for i, image in enumerate(p.mapping, start=1):
        inv[image - 1] = i
    return Permutation(k=p.k, mapping=tuple(inv))


def random_permutation(k: int, rng: Rng) -> Permutation:
    return Permutation.from_array(rng.permutation(k))


# ---------------------------------------------------------------------------
# The group action Γ
# ---------------------------------------------------------------------------


def gamma_action(sigma: Permutation, tau: Permutation, f: PartialFunction) -> PartialFunction:
    """Γ^σ_τ(f) = {(σ(i), τ(j)) : (i, j) ∈ f}."""
    for i, j in f.pairs:
        if i > sigma.k or j > tau.k:
            raise PreconditionError("dimension mismatch")
    return PartialFunction(pairs=frozenset((sigma(i), tau(j)) for i, j in f.pairs))


def gamma_table(values: np.ndarray, sigma: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Γ on a total 1-based value table with 0-based permutation arrays.

    Returns g with g(σ(i)) = τ(f(i)).
    """
    if len(values) != len(sigma):
        raise PreconditionError("dimension mismatch")
    g = np.empty_like(values)
    g[sigma] = tau[values - 1] + 1
    return g


def gamma_oracle(sigma: Permutation, tau: Permutation, f: OracleFunction) -> OracleFunction:
    """Γ^σ_τ applied to a total function; the promise is preserved."""
    if sigma.k != f.n or tau.k != f.range_size:
        raise PreconditionError("dimension mismatch")
    g = gamma_table(f.as_array(), sigma.as_array(), tau.as_array())
    return OracleFunction(n=f.n, N=f.range_size, promise=f.promise, values=tuple(g.tolist()))


def as_partial(f: OracleFunction) -> PartialFunction:
    return PartialFunction(pairs=frozenset(enumerate(f.values, start=1)))


def values_from_partial(f: PartialFunction, n: int) -> tuple[int, ...]:
    """Value table of a partial function that is total on [1..n]."""
    if f.domain != frozenset(range(1, n + 1)):
        raise PreconditionError("partial function is not total on [1..n]")
    return tuple(j for _, j in f.sorted_pairs())


# ---------------------------------------------------------------------------
# Promise generators
# ---------------------------------------------------------------------------


def one_to_one_table(n: int, N: int, generator: np.random.Generator) -> np.ndarray:
    if N < n:
        raise PreconditionError("range too small")
    return generator.choice(N, size=n, replace=False) + 1


def r_to_one_table(n: int, r: int, N: int, generator: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Value table and sorted image set of a uniform r-to-one function."""
    if r < 2:
        raise PreconditionError("r must be at least 2")
    if n % r:
        raise PreconditionError("r does not divide n")
    if N < n // r:
        raise PreconditionError("range too small")
    images = generator.choice(N, size=n // r, replace=False) + 1
    values = generator.permutation(np.repeat(images, r))
    return values, np.sort(images)


def make_one_to_one(n: int, N: int, rng: Rng) -> OracleFunction:
    """Uniformly random injective [n] -> [N]."""
    values = one_to_one_table(n, N, rng.generator)
    return OracleFunction(n=n, N=N, promise=Promise.one_to_one(), values=tuple(values.tolist()))


def make_r_to_one(n: int, r: int, N: int, rng: Rng) -> OracleFunction:
    """n/r distinct images chosen uniformly from [1..N], each on r shuffled positions."""
    values, _ = r_to_one_table(n, r, N, rng.generator)
    return OracleFunction(n=n, N=N, promise=Promise.r_to_one(r), values=tuple(values.tolist()))


def is_promise_valid(f: OracleFunction) -> bool:
    multiplicities = Counter(f.values).values()
    if f.promise.kind is PromiseKind.ONE_TO_ONE:
        return all(m == 1 for m in multiplicities)
    r = f.promise.r
    return f.n % r == 0 and all(m == r for m in multiplicities)


def image_set(f: OracleFunction) -> tuple[int, ...]:
    return tuple(sorted(set(f.values)))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def oracle_to_json(f: OracleFunction) -> str:
    """{"n", "N", "promise": {"kind", "r"?}, "values"} in that order."""
    return json.dumps(f.model_dump(mode="json", by_alias=True, exclude_none=True))


def oracle_from_json(text: str) -> OracleFunction:
    return OracleFunction.model_validate_json(text)
