"""Relation (unweighted) adversary bound and the ComesFrom relation counts.

The ComesFrom relation fixes the shared a-component, so inputs here are the
b-tables only: X holds every b with per-image multiplicities p, Y every b with
the complementary multiplicities r - p_j, and x ~ y iff they differ in exactly
2Ψ positions.
"""

import logging
import math
from collections.abc import Callable
from fractions import Fraction

import numpy as np
from sympy.utilities.iterables import multiset_permutations

from src.config import BAD_CONSTANT, ENUMERATION_GUARD
from src.errors import EnumerationGuardExceeded, InvariantViolation, PreconditionError
from src.models import AdversaryCounts, MultiplicityProfile, RelationSpec

logger = logging.getLogger(__name__)

# Elements per boolean block while tallying; keeps peak memory near 16 MB.
_BLOCK_CELLS = 1 << 24

RelationBlock = Callable[[slice, np.ndarray], np.ndarray]


def _tally(xs: np.ndarray, ys: np.ndarray, relate: RelationBlock) -> tuple[int, int, int, int]:
    """Exact (m, m', l, l') for the relation produced block-wise by ``relate``.

    ``relate(rows, diff)`` gets the X row slice and the (rows, |Y|, L) mismatch
    array and returns the (rows, |Y|) relation block.
    """
    n_x, length = xs.shape
    n_y = ys.shape[0]
    rows = max(1, _BLOCK_CELLS // max(1, n_y * length))
    m = None
    l_x = 0
    deg_y = np.zeros(n_y, dtype=np.int64)
    flips_y = np.zeros((n_y, length), dtype=np.int64)
    for start in range(0, n_x, rows):
        block = slice(start, min(n_x, start + rows))
        diff = xs[block, None, :] != ys[None, :, :]
        rel = relate(block, diff)
        deg_x = rel.sum(axis=1)
        if (deg_x == 0).any():
            raise PreconditionError("disconnected input")
        m = int(deg_x.min()) if m is None else min(m, int(deg_x.min()))
        deg_y += rel.sum(axis=0)
        flips = rel[:, :, None] & diff
        l_x = max(l_x, int(flips.sum(axis=1).max()))
        flips_y += flips.sum(axis=0)
    if (deg_y == 0).any():
        raise PreconditionError("disconnected input")
    return m, int(deg_y.min()), l_x, int(flips_y.max())


def _counts(m: int, m_prime: int, l: int, l_prime: int) -> AdversaryCounts:  # noqa: E741
    if min(l, l_prime) == 0:
        raise PreconditionError("relation never flips a position")
    return AdversaryCounts.from_counts(m, m_prime, l, l_prime)


def evaluate_relation_bound(spec: RelationSpec) -> AdversaryCounts:
    """m, m', l, l' and sqrt(m m' / (l l')) by full enumeration of X x Y."""
    if len(spec.xs) * len(spec.ys) > ENUMERATION_GUARD:
        raise EnumerationGuardExceeded("enumeration guard exceeded")
    xs = np.asarray(spec.xs, dtype=np.int64)
    ys = np.asarray(spec.ys, dtype=np.int64)
    matrix = np.array([[bool(spec.related(x, y)) for y in spec.ys] for x in spec.xs], dtype=bool)
    if not matrix.any():
        raise PreconditionError("vacuous relation")
    counts = _counts(*_tally(xs, ys, lambda block, _diff: matrix[block]))
    logger.debug("relation %s: %s", spec.label, counts)
    return counts


def grover_relation(n: int) -> RelationSpec:
    """X = {0^n}, Y = unit vectors, every pair related."""
    if n < 1:
        raise PreconditionError("n must be positive")
    zero = (0,) * n
    units = tuple(tuple(int(i == j) for i in range(n)) for j in range(n))
    return RelationSpec(xs=(zero,), ys=units, related=lambda x, y: True, label=f"grover(n={n})")


# ---------------------------------------------------------------------------
# ComesFrom profile quantities
# ---------------------------------------------------------------------------


def _require_even_r(p: MultiplicityProfile) -> None:
    if p.r % 2:
        raise PreconditionError("half-integral case unsupported")


def psi(p: MultiplicityProfile) -> int:
    """Surplus points above r/2, summed over images."""
    _require_even_r(p)
    half = p.r // 2
    return sum(m - half for m in p.mults if m > half)


def phi(p: MultiplicityProfile) -> int:
    """(2Ψ)! / Π_{m_j < r/2} (r - 2m_j)!."""
    _require_even_r(p)
    denominator = math.prod(math.factorial(p.r - 2 * m) for m in p.mults if 2 * m < p.r)
    numerator = math.factorial(2 * psi(p))
    if numerator % denominator:
        raise InvariantViolation("Φ is not an integer")
    return numerator // denominator


def closed_form_counts(n: int, psi_value: int, phi_value: int) -> tuple[int, int]:
    """m = C(n/4+Ψ, 2Ψ)Φ and l = C(n/4+Ψ-1, 2Ψ-1)Φ."""
    if psi_value == 0:
        raise PreconditionError("degenerate relation (X=Y)")
    if psi_value < 0:
        raise PreconditionError("psi must be non-negative")
    if n % 4:
        raise PreconditionError("n must be divisible by 4")
    if psi_value > n // 4:
        raise PreconditionError("psi exceeds n/4")
    quarter = n // 4
    m = math.comb(quarter + psi_value, 2 * psi_value) * phi_value
    l = math.comb(quarter + psi_value - 1, 2 * psi_value - 1) * phi_value  # noqa: E741
    return m, l


def exact_comes_from_counts(p: MultiplicityProfile) -> tuple[int, int]:
    """(m, l) on the X side for any profile: Π_j C(m_j, 2m_j - r) Φ and its per-position maximum.

    Agrees with closed_form_counts when a single image carries the whole surplus.
    """
    surplus = [(m, 2 * m - p.r) for m in p.mults if 2 * m > p.r]
    if not surplus:
        raise PreconditionError("degenerate relation (X=Y)")
    base = phi(p)
    m = base * math.prod(math.comb(mj, kj) for mj, kj in surplus)
    l = max(m * kj // mj for mj, kj in surplus)  # noqa: E741
    return m, l


def has_half_surplus(p: MultiplicityProfile) -> bool:
    """Exactly half the images above r/2 and none at r/2."""
    above = sum(1 for m in p.mults if 2 * m > p.r)
    at = sum(1 for m in p.mults if 2 * m == p.r)
    return at == 0 and 2 * above == len(p.mults)


def _assignments(mults: tuple[int, ...]) -> np.ndarray:
    """Every table of length Σ m_j holding value j+1 exactly m_j times."""
    multiset = [j + 1 for j, m in enumerate(mults) for _ in range(m)]
    return np.array(list(multiset_permutations(multiset)), dtype=np.int64)


def _multinomial(mults: tuple[int, ...]) -> int:
    return math.factorial(sum(mults)) // math.prod(math.factorial(m) for m in mults)


def comes_from_relation(n: int, r: int, p: MultiplicityProfile) -> RelationSpec:
    """The ComesFrom relation on b-tables as an explicit spec for evaluate_relation_bound."""
    if p.r != r or p.n != n:
        raise PreconditionError("profile does not match (n, r)")
    flips = 2 * psi(p)
    xs = tuple(map(tuple, _assignments(p.mults).tolist()))
    ys = tuple(map(tuple, _assignments(p.complement().mults).tolist()))
    return RelationSpec(
        xs=xs,
        ys=ys,
        related=lambda x, y: sum(u != v for u, v in zip(x, y, strict=True)) == flips,
        label=f"comesfrom(n={n}, r={r}, mults={p.mults})",
    )


def brute_force_counts(n: int, r: int, N: int, p: MultiplicityProfile) -> AdversaryCounts:
    """Exact counts for the ComesFrom relation by enumerating X and Y."""
    if p.r != r or p.n != n:
        raise PreconditionError("profile does not match (n, r)")
    if N < n // r:
        raise PreconditionError("range too small")
    psi_value = psi(p)
    if psi_value == 0:
        raise PreconditionError("degenerate relation (X=Y)")
    partner = p.complement()
    if _multinomial(p.mults) * _multinomial(partner.mults) > ENUMERATION_GUARD:
        raise EnumerationGuardExceeded("enumeration guard exceeded")
    xs = _assignments(p.mults)
    ys = _assignments(partner.mults)
    counts = _counts(*_tally(xs, ys, lambda _block, diff: diff.sum(axis=2) == 2 * psi_value))
    logger.debug("brute force |X|=%d |Y|=%d mults=%s: %s", len(xs), len(ys), p.mults, counts)
    return counts


def adversary_ratio(n: int, psi_value: int) -> Fraction:
    """(n/(8Ψ) + 1/2)^2."""
    if psi_value == 0:
        raise PreconditionError("degenerate relation (X=Y)")
    return (Fraction(n, 8 * psi_value) + Fraction(1, 2)) ** 2


def closed_form_ratio_holds(n: int, psi_value: int) -> bool:
    """(m/l)^2 from closed_form_counts equals adversary_ratio exactly."""
    m, l = closed_form_counts(n, psi_value, 1)  # noqa: E741
    return Fraction(m, l) ** 2 == adversary_ratio(n, psi_value)


def worst_case_psi(n: int, r: int, constant: float = BAD_CONSTANT) -> int:
    """Largest Ψ a non-BAD balanced profile can carry: every surplus image at the threshold."""
    if r % 2:
        raise PreconditionError("half-integral case unsupported")
    if n <= r:
        raise PreconditionError("threshold undefined")
    step = min(math.floor(constant * math.sqrt(r * math.log(n / r))), r // 2)
    return (n // r // 2) * step


def comes_from_bound(n: int, r: int, constant: float = BAD_CONSTANT) -> float:
    """sqrt of adversary_ratio at the worst non-BAD Ψ."""
    psi_value = worst_case_psi(n, r, constant)
    if psi_value == 0:
        raise PreconditionError("degenerate relation (X=Y)")
    return math.sqrt(adversary_ratio(n, psi_value))
