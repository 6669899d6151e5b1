"""Tests for src/probability.py — exact tails, Chernoff, BAD probability, Monte Carlo."""

import math
from fractions import Fraction

import pytest

from src.errors import EnumerationGuardExceeded, PreconditionError
from src.models import TailLaw, TailQuery
from src.probability import (
    bad_prob_exact,
    chernoff_bound,
    chernoff_certifies,
    chernoff_epsilon,
    exact_bad_probability,
    hypergeom_pmf,
    lower_tail_exact,
    monte_carlo_bad_rate,
    two_sided_tail_exact,
    upper_tail_exact,
    wilson_interval,
)
from src.rng import Rng

EPSILONS = [i / 10 for i in range(1, 11)]


class TestHypergeomPmf:
    """Test the hypergeometric pmf."""

    def test_examples(self):
        assert hypergeom_pmf(4, 2, 2, 1) == Fraction(2, 3)
        assert hypergeom_pmf(8, 4, 4, 4) == Fraction(1, 70)

    @pytest.mark.parametrize("n,r", [(5, 2), (10, 10), (12, 0)])
    def test_drawing_everything(self, n, r):
        assert hypergeom_pmf(n, r, n, r) == 1

    def test_impossible_count_is_zero(self):
        assert hypergeom_pmf(6, 4, 3, 0) == 0

    def test_invalid_support_point(self):
        with pytest.raises(PreconditionError, match="invalid support point"):
            hypergeom_pmf(8, 4, 4, 5)

    def test_sums_to_one(self):
        """Exhaustive over n <= 64, r <= n, draw <= n."""
        for n in range(65):
            for r in range(n + 1):
                for draw in range(n + 1):
                    total = sum(hypergeom_pmf(n, r, draw, k) for k in range(min(r, draw) + 1))
                    assert total == 1, (n, r, draw)


class TestTwoSidedTail:
    """Test exact tails."""

    def test_binomial_example(self):
        assert two_sided_tail_exact(TailQuery.binomial(4, Fraction(3, 2)), TailLaw.BINOMIAL) == Fraction(1, 8)

    def test_hypergeometric_example(self):
        q = TailQuery.half_split(8, 4, Fraction(3, 2))
        assert two_sided_tail_exact(q, TailLaw.HYPERGEOMETRIC) == Fraction(1, 35)

    @pytest.mark.parametrize("law", list(TailLaw))
    def test_beyond_support(self, law):
        assert two_sided_tail_exact(TailQuery.half_split(16, 6, 3), law) == 0

    def test_negative_threshold(self):
        with pytest.raises(PreconditionError, match="negative threshold"):
            two_sided_tail_exact(TailQuery.binomial(4, -1), TailLaw.BINOMIAL)

    def test_hypergeometric_needs_half_draw(self):
        with pytest.raises(PreconditionError):
            two_sided_tail_exact(TailQuery(n=8, r=4, draw=3, s=1), TailLaw.HYPERGEOMETRIC)

    def test_sides_are_symmetric(self):
        q = TailQuery.half_split(24, 8, 1)
        upper = upper_tail_exact(q, TailLaw.HYPERGEOMETRIC)
        assert upper == lower_tail_exact(q, TailLaw.HYPERGEOMETRIC)
        assert two_sided_tail_exact(q, TailLaw.HYPERGEOMETRIC) == 2 * upper


class TestDomination:
    """Test hypergeometric against binomial tails."""

    def test_hypergeometric_below_binomial(self):
        """Exhaustive over even n <= 64, r <= n, every threshold on the half-integer lattice."""
        for n in range(2, 65, 2):
            for r in range(0, n + 1):
                for twice_s in range(0, r + 1):
                    s = Fraction(twice_s, 2)
                    hyper = upper_tail_exact(TailQuery.half_split(n, r, s), TailLaw.HYPERGEOMETRIC)
                    binom = upper_tail_exact(TailQuery.binomial(r, s), TailLaw.BINOMIAL)
                    assert hyper <= binom, (n, r, s)


class TestChernoff:
    """Test the Chernoff bound and its certificate."""

    def test_example(self):
        assert chernoff_bound(100, 0.5) == pytest.approx(math.exp(-25 / 6), rel=1e-12)
        assert chernoff_bound(100, 0.5) >= math.exp(-25 / 6)

    def test_zero_epsilon(self):
        assert chernoff_bound(10, 0) == 1

    def test_window(self):
        with pytest.raises(PreconditionError, match="epsilon out of Chernoff window"):
            chernoff_bound(10, 1.5)

    def test_validity_exhaustive(self):
        """Binomial P[X > (1+eps) r/2] never exceeds the bound, for r <= 64."""
        for r in range(1, 65):
            for eps in EPSILONS:
                s = Fraction(str(eps)) * Fraction(r, 2)
                tail = upper_tail_exact(TailQuery.binomial(r, s), TailLaw.BINOMIAL)
                assert tail <= Fraction(chernoff_bound(r, eps)), (r, eps)
                assert chernoff_certifies(r, eps, tail), (r, eps)

    def test_certifies_rejects_false_claim(self):
        assert chernoff_certifies(4, 0.5, Fraction(1)) is False

    def test_epsilon_outside_window_at_scale(self):
        assert chernoff_epsilon(4096, 1024) > 1


class TestBadProbExact:
    """Test exact per-image BAD probabilities."""

    @pytest.mark.parametrize("n,r", [(8, 4), (64, 8)])
    def test_zero_when_threshold_exceeds_support(self, n, r):
        result = bad_prob_exact(n, r)
        assert result.exact_per_image == 0
        assert result.union_bound == 0

    def test_desk_scale_is_zero(self):
        result = bad_prob_exact(2**16, 2**10)
        assert result.exact_per_image == 0
        assert result.chernoff_window is False

    def test_small_constant(self):
        """At n=16, r=4, c=1/2 an image is bad iff it lands entirely on one side."""
        result = bad_prob_exact(16, 4, 0.5)
        per_image = 2 * Fraction(math.comb(12, 4), math.comb(16, 8))
        assert result.exact_per_image == per_image
        assert result.union_bound == 4 * per_image

    def test_chernoff_window_flag(self):
        result = bad_prob_exact(2**12, 2**10, 0.05)
        assert result.chernoff_window is True
        assert result.chernoff_union_bound is not None

    def test_preconditions(self):
        with pytest.raises(PreconditionError, match="r does not divide n"):
            bad_prob_exact(12, 8)
        with pytest.raises(PreconditionError, match="threshold undefined"):
            bad_prob_exact(8, 8)


class TestExactOracle:
    """Test the exhaustive BAD oracle."""

    def test_small_constant(self):
        joint = exact_bad_probability(16, 4, 0.5)
        per_image = bad_prob_exact(16, 4, 0.5)
        assert 0 < joint <= per_image.union_bound
        assert joint >= per_image.exact_per_image

    def test_default_constant_is_zero(self):
        assert exact_bad_probability(8, 4) == 0

    def test_guard(self, monkeypatch):
        monkeypatch.setattr("src.probability.ENUMERATION_GUARD", 10)
        with pytest.raises(EnumerationGuardExceeded):
            exact_bad_probability(8, 4)


class TestWilson:
    """Test Wilson intervals."""

    def test_zero_successes(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == 0
        assert 0 < hi < 0.01

    def test_contains_rate(self):
        lo, hi = wilson_interval(300, 1000)
        assert lo < 0.3 < hi

    def test_known_value(self):
        lo, hi = wilson_interval(300, 1000)
        assert lo == pytest.approx(0.26409, abs=1e-3)
        assert hi == pytest.approx(0.33855, abs=1e-3)

    def test_symmetric_at_one_half(self):
        lo, hi = wilson_interval(5, 10, 0.95)
        assert lo + hi == pytest.approx(1)
        assert lo == pytest.approx(0.2366, abs=1e-3)

    def test_all_successes(self):
        lo, hi = wilson_interval(1000, 1000)
        assert 0.99 < lo < 1
        assert hi == 1

    def test_invalid(self):
        with pytest.raises(PreconditionError):
            wilson_interval(5, 0)


class TestMonteCarlo:
    """Test Monte Carlo BAD rates."""

    def test_desk_scale_agrees_with_exact(self):
        estimate = monte_carlo_bad_rate(2**16, 2**10, 10_000, Rng(11), jobs=2)
        exact = bad_prob_exact(2**16, 2**10).exact_per_image
        lo, hi = estimate.wilson
        assert lo <= exact <= hi
        assert estimate.rate == 0

    def test_small_instance_zero(self):
        assert monte_carlo_bad_rate(64, 8, 500, Rng(1)).successes == 0

    def test_matches_exhaustive_oracle(self):
        exact = exact_bad_probability(16, 4, 0.5)
        estimate = monte_carlo_bad_rate(16, 4, 4000, Rng(5), constant=0.5)
        lo, hi = estimate.wilson
        assert lo <= exact <= hi

    def test_deterministic(self):
        first = monte_carlo_bad_rate(16, 4, 600, Rng(2), constant=0.5)
        second = monte_carlo_bad_rate(16, 4, 600, Rng(2), constant=0.5)
        assert first == second

    def test_jobs_do_not_change_result(self):
        serial = monte_carlo_bad_rate(16, 4, 600, Rng(2), constant=0.5, jobs=1)
        parallel = monte_carlo_bad_rate(16, 4, 600, Rng(2), constant=0.5, jobs=2)
        assert serial.successes == parallel.successes
