"""Composition of the lower-bound terms and the choice of r.

All terms are raw values, up to constant factors. Logarithms are natural.
"""

import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np
import sympy

from src.errors import PreconditionError
from src.models import AcceptanceTable, BoundReport, DichotomyOutcome

logger = logging.getLogger(__name__)

GRID_KINDS = ("pow2", "divisors")


def collision_lb(n: int, r: int) -> float:
    """(n/r)^(1/3)."""
    if r < 2:
        raise PreconditionError("r must be at least 2")
    if n % r:
        raise PreconditionError("r does not divide n")
    return math.cbrt(n // r)


def distinction_lb(n: int, r: int) -> float:
    """sqrt(r / ln n)."""
    if n <= 1:
        raise PreconditionError("n must exceed 1")
    return math.sqrt(r / math.log(n))


def composed_lb(n: int, r: int) -> float:
    return min(collision_lb(n, r), distinction_lb(n, r))


def headline_lb(n: int) -> float:
    """(n / ln n)^(1/5), the value the composed bound reaches at the best r."""
    if n <= 1:
        raise PreconditionError("n must exceed 1")
    return (n / math.log(n)) ** 0.2


def continuous_optimum(n: int) -> float:
    """n^(2/5) (ln n)^(3/5), where the two terms cross."""
    if n <= 1:
        raise PreconditionError("n must exceed 1")
    return n**0.4 * math.log(n) ** 0.6


def candidate_grid(n: int, kind: str = "pow2") -> list[int]:
    """Candidates r with r | n and 2 <= r < n."""
    if kind == "pow2":
        grid = []
        r = 2
        while r < n:
            if n % r == 0:
                grid.append(r)
            r *= 2
        return grid
    if kind == "divisors":
        return [int(d) for d in sympy.divisors(n) if 2 <= d < n]
    raise PreconditionError(f"unknown grid kind: {kind}")


def optimize_r(n: int, grid: Iterable[int]) -> tuple[int, float]:
    """argmax of the composed bound over the grid; ties go to the smaller r."""
    candidates = sorted(set(grid))
    if not candidates:
        raise PreconditionError("empty grid")
    if any(r < 2 or r >= n or n % r for r in candidates):
        raise PreconditionError("invalid grid candidate")
    best_r, best = candidates[0], composed_lb(n, candidates[0])
    for r in candidates[1:]:
        value = composed_lb(n, r)
        if value > best:
            best_r, best = r, value
    return best_r, best


def bound_report(n: int, r: int | None = None, grid: str = "pow2") -> BoundReport:
    candidates = candidate_grid(n, grid)
    if r is not None:
        # A requested r off the grid still competes for the optimum.
        candidates.append(r)
    r_star, value = optimize_r(n, candidates)
    r = r_star if r is None else r
    collision, distinction = collision_lb(n, r), distinction_lb(n, r)
    return BoundReport(
        n=n,
        r=r,
        collision_term=collision,
        distinction_term=distinction,
        composed=min(collision, distinction),
        optimal_r=r_star,
        optimal_value=value,
        headline_term=headline_lb(n),
        grid=grid,
    )


def exponent_slope(ns: Sequence[int], grid: str = "pow2") -> float:
    """Least-squares slope of ln r_star against ln n."""
    if len(ns) < 2:
        raise PreconditionError("need at least two sizes")
    r_stars = [optimize_r(n, candidate_grid(n, grid))[0] for n in ns]
    slope, _ = np.polyfit(np.log(ns), np.log(r_stars), 1)
    return float(slope)


def sweep(ns: Sequence[int], grid: str = "pow2") -> list[dict[str, object]]:
    """Rows (n, r_star, value, slope) with the slope fitted over the sizes seen so far."""
    rows: list[dict[str, object]] = []
    for index, n in enumerate(ns):
        r_star, value = optimize_r(n, candidate_grid(n, grid))
        slope = exponent_slope(ns[: index + 1], grid) if index else None
        rows.append({"n": n, "r_star": r_star, "value": value, "slope": slope})
    logger.debug("swept %d sizes on %s grid", len(rows), grid)
    return rows


SWEEP_COLUMNS = ("n", "r_star", "value", "slope")


def dichotomy_classify(table: AcceptanceTable) -> DichotomyOutcome:
    """Which solver the acceptance table yields, given it solves set equality."""
    if not (table.p_c1 > 4 / 5 and table.p_e1 < 1 / 5):
        raise PreconditionError("not a set-equality solver")
    if table.p_e2 >= 2 / 5 or table.p_c2 <= 3 / 5:
        return DichotomyOutcome.COLLISION_SOLVER_EXISTS
    return DichotomyOutcome.DISTINCTION_SOLVER_EXISTS
