"""INV profiles, DISP and the BAD predicate."""

import json
import logging
import math
from collections.abc import Iterable, Sequence
from fractions import Fraction

import numpy as np
import sympy

from src.config import BAD_CONSTANT
from src.errors import InvariantViolation, PreconditionError
from src.models import InvProfile

logger = logging.getLogger(__name__)

# Relative gap below which the float comparison is not trusted.
_FLOAT_MARGIN = 1e-9


def inv_counts(a: np.ndarray, images: np.ndarray, r: int) -> np.ndarray:
    """Histogram (a_0, ..., a_r) of preimage counts of ``a`` over ``images``.

    ``images`` must be sorted. Raises on foreign values or multiplicities above r.
    """
    positions = np.searchsorted(images, a)
    positions[positions == len(images)] = 0
    if len(a) and not np.array_equal(images[positions], a):
        raise PreconditionError("foreign value")
    per_image = np.bincount(positions, minlength=len(images))
    if per_image.size and per_image.max() > r:
        raise PreconditionError("multiplicity exceeds r")
    return np.bincount(per_image, minlength=r + 1)


def inv_profile(a: Sequence[int], f_images: Iterable[int], r: int) -> InvProfile:
    """INV(a) relative to the n/r images of the source function."""
    images = np.unique(np.fromiter(f_images, dtype=np.int64))
    n = r * len(images)
    if 2 * len(a) != n:
        raise PreconditionError("a must have n/2 entries")
    counts = inv_counts(np.asarray(a, dtype=np.int64), images, r)
    profile = InvProfile(r=r, n=n, counts=tuple(int(c) for c in counts))
    if 2 * profile.point_count != n:
        raise InvariantViolation(f"profile accounts for {profile.point_count} points, expected {n // 2}")
    return profile


def reverse_profile(p: InvProfile) -> InvProfile:
    return InvProfile(r=p.r, n=p.n, counts=p.counts[::-1])


def disp(p: InvProfile) -> Fraction:
    """max |i - r/2| over occupied multiplicities i."""
    occupied = [i for i, c in enumerate(p.counts) if c > 0]
    if not occupied:
        raise PreconditionError("empty profile")
    return max(abs(Fraction(2 * i - p.r, 2)) for i in occupied)


def bad_threshold(n: int, r: int, constant: float = BAD_CONSTANT) -> float:
    """constant * sqrt(r ln(n/r)); display value only, comparisons go through exceeds_threshold."""
    if n <= r:
        raise PreconditionError("threshold undefined")
    return constant * math.sqrt(r * math.log(n / r))


def exceeds_threshold(deviation: Fraction, n: int, r: int, constant: float = BAD_CONSTANT) -> bool:
    """Strict test deviation > constant * sqrt(r ln(n/r)).

    Compares squares. A float comparison decides clear cases; near the boundary
    the comparison is certified symbolically against the exact logarithm.
    """
    if n <= r:
        raise PreconditionError("threshold undefined")
    if constant <= 0:
        raise PreconditionError("threshold constant must be positive")
    deviation = Fraction(deviation)
    if deviation <= 0:
        return False
    lhs = deviation * deviation
    rhs = constant * constant * r * math.log(n / r)
    if abs(float(lhs) - rhs) > _FLOAT_MARGIN * max(float(lhs), rhs):
        return float(lhs) > rhs

    c = sympy.Rational(*Fraction(constant).as_integer_ratio())
    verdict = sympy.Gt(
        sympy.Rational(lhs.numerator, lhs.denominator),
        c**2 * r * sympy.log(sympy.Rational(n, r)),
    )
    if verdict not in (sympy.true, sympy.false):
        raise InvariantViolation(f"threshold comparison undecided at n={n}, r={r}, deviation={deviation}")
    logger.debug("BAD boundary case certified symbolically: n=%d r=%d deviation=%s", n, r, deviation)
    return bool(verdict)


def is_bad(p: InvProfile, constant: float = BAD_CONSTANT) -> bool:
    return exceeds_threshold(disp(p), p.n, p.r, constant)


def profile_row(
    p: InvProfile, *, seed: int, origin: str, constant: float = BAD_CONSTANT
) -> dict[str, object]:
    """One CSV row of a profile sweep."""
    return {
        "n": p.n,
        "r": p.r,
        "seed": seed,
        "origin": origin,
        "disp": str(disp(p)),
        "bad": is_bad(p, constant),
        "counts": json.dumps(list(p.counts), separators=(",", ":")),
    }


PROFILE_COLUMNS = ("n", "r", "seed", "origin", "disp", "bad", "counts")
