"""Exact tail probabilities behind the BAD estimate.

Everything certified is an exact ``Fraction``. Floats appear only in Monte Carlo
summaries and in Chernoff exponentials, which are rounded upward.
"""

import logging
import math
from collections.abc import Callable
from fractions import Fraction
from functools import partial
from itertools import combinations

import numpy as np
import sympy
from scipy import stats

from src.config import BAD_CONSTANT, ENUMERATION_GUARD
from src.core_model import r_to_one_table
from src.errors import EnumerationGuardExceeded, PreconditionError
from src.inv_stats import exceeds_threshold, inv_counts
from src.models import BadProbability, MonteCarloEstimate, PairOrigin, TailLaw, TailQuery
from src.reductions import reduce_tables
from src.rng import Rng
from src.telemetry import get_tracer
from src.trials import run_trials

logger = logging.getLogger(__name__)


def hypergeom_pmf(n: int, r: int, draw: int, k: int) -> Fraction:
    """P[X = k] for X the marked count in a uniform ``draw``-subset of n with r marked."""
    if not (0 <= r <= n and 0 <= draw <= n):
        raise PreconditionError("invalid tail query")
    if not 0 <= k <= min(r, draw):
        raise PreconditionError("invalid support point")
    return Fraction(math.comb(r, k) * math.comb(n - r, draw - k), math.comb(n, draw))


def _law(q: TailQuery, law: TailLaw) -> tuple[Callable[[int], int], int, int]:
    """(weight(k), denominator, support top) for the law of X."""
    if law is TailLaw.BINOMIAL:
        return partial(math.comb, q.r), 2**q.r, q.r
    if 2 * q.draw != q.n:
        raise PreconditionError("hypergeometric tail needs draw = n/2")

    def weight(k: int) -> int:
        return math.comb(q.r, k) * math.comb(q.n - q.r, q.draw - k)

    return weight, math.comb(q.n, q.draw), min(q.r, q.draw)


def _tail(q: TailQuery, law: TailLaw, inside: Callable[[int], bool]) -> Fraction:
    if q.s < 0:
        raise PreconditionError("negative threshold")
    weight, denominator, top = _law(q, TailLaw(law))
    return Fraction(sum(weight(k) for k in range(top + 1) if inside(k)), denominator)


def two_sided_tail_exact(q: TailQuery, law: TailLaw) -> Fraction:
    """P[|X - r/2| > s]."""
    return _tail(q, law, lambda k: abs(Fraction(2 * k - q.r, 2)) > q.s)


def upper_tail_exact(q: TailQuery, law: TailLaw) -> Fraction:
    """P[X > r/2 + s]."""
    return _tail(q, law, lambda k: Fraction(2 * k - q.r, 2) > q.s)


def lower_tail_exact(q: TailQuery, law: TailLaw) -> Fraction:
    """P[X < r/2 - s]."""
    return _tail(q, law, lambda k: Fraction(q.r - 2 * k, 2) > q.s)


# ---------------------------------------------------------------------------
# Chernoff
# ---------------------------------------------------------------------------


def chernoff_bound(r: int, eps: float) -> float:
    """exp(-eps^2 (r/2) / 3), rounded up one ulp so it stays an upper bound."""
    if not 0 <= eps <= 1:
        raise PreconditionError("epsilon out of Chernoff window")
    if r < 0:
        raise PreconditionError("r must be non-negative")
    exponent = eps * eps * r / 6
    if exponent == 0:
        return 1.0
    return min(1.0, math.nextafter(math.exp(-exponent), math.inf))


def chernoff_certifies(r: int, eps: float | Fraction | str, tail: Fraction) -> bool:
    """Exact check tail <= exp(-eps^2 r / 6); float eps is read as its decimal literal."""
    eps_exact = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    e = sympy.Rational(eps_exact.numerator, eps_exact.denominator)
    verdict = sympy.Le(sympy.Rational(tail.numerator, tail.denominator), sympy.exp(-(e**2) * r / 6))
    return bool(verdict)


def chernoff_epsilon(n: int, r: int, constant: float = BAD_CONSTANT) -> float:
    """The eps for which eps * r/2 equals the BAD threshold: 2c sqrt(ln(n/r) / r)."""
    if n <= r:
        raise PreconditionError("threshold undefined")
    return 2 * constant * math.sqrt(math.log(n / r) / r)


# ---------------------------------------------------------------------------
# BAD probability
# ---------------------------------------------------------------------------


def _check_bad_parameters(n: int, r: int) -> None:
    if n % 2:
        raise PreconditionError("n must be even")
    if r < 2:
        raise PreconditionError("r must be at least 2")
    if n % r:
        raise PreconditionError("r does not divide n")
    if n <= r:
        raise PreconditionError("threshold undefined")


def bad_prob_exact(n: int, r: int, constant: float = BAD_CONSTANT) -> BadProbability:
    """Exact per-image tail P[| |a^-1(j)| - r/2 | > threshold] and its union bound over n/r images."""
    _check_bad_parameters(n, r)
    draw = n // 2
    denominator = math.comb(n, draw)
    # Only tail terms are summed; the weights are large at n = 2^16.
    numerator = sum(
        math.comb(r, k) * math.comb(n - r, draw - k)
        for k in range(r + 1)
        if exceeds_threshold(abs(Fraction(2 * k - r, 2)), n, r, constant)
    )
    per_image = Fraction(numerator, denominator)
    eps = chernoff_epsilon(n, r, constant)
    window = 0 <= eps <= 1
    chernoff_union = (n // r) * 2 * chernoff_bound(r, eps) if window else None
    if not window:
        logger.info("eps=%.4f outside the Chernoff window at n=%d r=%d; Chernoff term omitted", eps, n, r)
    return BadProbability(
        n=n,
        r=r,
        constant=constant,
        threshold=constant * math.sqrt(r * math.log(n / r)),
        exact_per_image=per_image,
        union_bound=(n // r) * per_image,
        epsilon=eps,
        chernoff_window=window,
        chernoff_union_bound=chernoff_union,
    )


def exact_bad_probability(n: int, r: int, constant: float = BAD_CONSTANT) -> Fraction:
    """Exact P[BAD(a)] by enumerating every half-split of a fixed r-to-one f.

    a is the restriction of Γ(f) to a uniform half of the domain, so the joint
    law of the per-image counts only depends on which positions land in a.
    """
    _check_bad_parameters(n, r)
    total = math.comb(n, n // 2)
    if total > ENUMERATION_GUARD:
        raise EnumerationGuardExceeded("enumeration guard exceeded")
    image_of = np.arange(n) // r
    halves = np.array(list(combinations(range(n), n // 2)), dtype=np.int64)
    per_image = np.stack([(image_of[halves] == j).sum(axis=1) for j in range(n // r)], axis=1)
    deviation2 = np.abs(2 * per_image - r).max(axis=1)
    bad_levels = {int(d) for d in np.unique(deviation2) if exceeds_threshold(Fraction(int(d), 2), n, r, constant)}
    bad = int(np.isin(deviation2, list(bad_levels)).sum()) if bad_levels else 0
    return Fraction(bad, total)


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    if trials < 1:
        raise PreconditionError("trials must be positive")
    if not 0 <= successes <= trials:
        raise PreconditionError("successes must lie in [0, trials]")
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    lower = 0.0 if successes == 0 else max(0.0, float(ci.low))
    upper = 1.0 if successes == trials else min(1.0, float(ci.high))
    return lower, upper


def _bad_trial_chunk(rng: Rng, count: int, *, n: int, r: int, constant: float, origin: PairOrigin) -> int:
    bad = 0
    for _ in range(count):
        values, images = r_to_one_table(n, r, n, rng.generator)
        a, _, tau = reduce_tables(origin, values, n, rng)
        counts = inv_counts(a, np.sort(tau[images - 1] + 1), r)
        occupied = np.nonzero(counts)[0]
        bad += int(exceeds_threshold(Fraction(int(np.abs(2 * occupied - r).max()), 2), n, r, constant))
    return bad


def monte_carlo_bad_rate(
    n: int,
    r: int,
    trials: int,
    rng: Rng,
    constant: float = BAD_CONSTANT,
    jobs: int = 1,
    origin: PairOrigin = PairOrigin.COMPLEMENTARY,
    confidence: float = 0.99,
) -> MonteCarloEstimate:
    """Empirical P[BAD(a)] over fresh r-to-one sources and reductions, with N = n."""
    _check_bad_parameters(n, r)
    if trials < 1:
        raise PreconditionError("trials must be positive")
    with get_tracer().start_as_current_span("badprob.monte_carlo") as span:
        span.set_attribute("qqlab.n", n)
        span.set_attribute("qqlab.r", r)
        span.set_attribute("qqlab.trials", trials)
        task = partial(_bad_trial_chunk, n=n, r=r, constant=constant, origin=PairOrigin(origin))
        bad = run_trials(task, trials, rng, label="badprob", jobs=jobs)
    logger.info("Monte Carlo BAD: %d/%d at n=%d r=%d", bad, trials, n, r)
    return MonteCarloEstimate(
        successes=bad,
        trials=trials,
        rate=bad / trials,
        wilson=wilson_interval(bad, trials, confidence),
        confidence=confidence,
    )
