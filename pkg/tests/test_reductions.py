"""Tests for src/reductions.py — the two reductions, symmetrization and orbit witnesses."""

import json
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from src.core_model import identity, make_one_to_one, make_r_to_one, transposition
from src.errors import PreconditionError
from src.inv_stats import inv_profile, is_bad, reverse_profile
from src.models import FunctionPair, OracleFunction, PairOrigin, PairRelationship, Promise
from src.reductions import (
    ReductionDraws,
    complementary_reduce,
    equivalent_reduce,
    gamma_witness,
    inv_pair,
    pair_relationship,
    pair_to_json,
    sample_comes_from,
    symmetrize_pair,
)
from src.rng import Rng


def _identity_draws(n: int, N: int, **overrides) -> ReductionDraws:
    half = n // 2
    base = {"sigma": identity(n), "tau": identity(N), "sigma1": identity(half), "sigma2": identity(half)}
    base.update(overrides)
    return ReductionDraws(**base)


class TestComplementaryReduce:
    """Test complementary_reduce."""

    def test_forced_identity(self, staircase_f, rng):
        pair = complementary_reduce(staircase_f, rng, _identity_draws(8, 2))
        assert pair.a == (1, 1, 1, 1)
        assert pair.b == (2, 2, 2, 2)
        assert pair.origin is PairOrigin.COMPLEMENTARY

    def test_two_point_function(self, rng):
        f = OracleFunction(n=2, N=2, promise=Promise.one_to_one(), values=(1, 2))
        pair = complementary_reduce(f, rng, _identity_draws(2, 2))
        assert (pair.a, pair.b) == ((1,), (2,))

    def test_one_to_one_gives_disjoint_sets(self, rng):
        for _ in range(50):
            pair = complementary_reduce(make_one_to_one(16, 40, rng), rng)
            assert pair_relationship(pair) is PairRelationship.DISJOINT_SETS

    def test_odd_n(self, rng):
        f = OracleFunction(n=3, N=3, promise=Promise.one_to_one(), values=(1, 2, 3))
        with pytest.raises(PreconditionError, match="n must be even"):
            complementary_reduce(f, rng)

    def test_records_source(self, rng):
        f = make_r_to_one(8, 2, 8, rng)
        pair = complementary_reduce(f, rng)
        assert pair.source_meta.promise == f.promise
        assert pair.source_meta.seed == rng.seed
        assert len(pair.images) == 4


class TestEquivalentReduce:
    """Test equivalent_reduce."""

    def test_forced_draws(self, staircase_f, rng):
        draws = _identity_draws(8, 2, sigma2=transposition(4, 1, 2))
        pair = equivalent_reduce(staircase_f, rng, draws)
        assert pair.a == (1, 1, 1, 1)
        assert pair.b == (1, 1, 1, 1)

    def test_same_multiset(self, rng):
        for _ in range(50):
            pair = equivalent_reduce(make_r_to_one(16, 4, 16, rng), rng)
            assert Counter(pair.a) == Counter(pair.b)

    def test_one_to_one_gives_equal_sets(self, rng):
        for _ in range(50):
            pair = equivalent_reduce(make_one_to_one(16, 40, rng), rng)
            assert pair_relationship(pair) is PairRelationship.EQUAL_SETS
            assert len(set(pair.a)) == len(pair.a)


class TestSymmetrize:
    """Test symmetrize_pair."""

    def test_identity_draws_keep_pair(self, rng):
        pair = complementary_reduce(make_r_to_one(8, 2, 8, rng), rng)
        draws = ReductionDraws(tau=identity(8), sigma1=identity(4), sigma2=identity(4))
        assert symmetrize_pair(pair, rng, draws) == pair

    def test_range_swap(self, rng):
        pair = FunctionPair(a=(1,), b=(2,), N=2)
        result = symmetrize_pair(pair, rng, ReductionDraws(tau=transposition(2, 1, 2)))
        assert (result.a, result.b) == ((2,), (1,))

    def test_preserves_origin_and_inv(self, rng):
        for _ in range(30):
            pair = equivalent_reduce(make_r_to_one(16, 4, 16, rng), rng)
            moved = symmetrize_pair(pair, rng)
            assert moved.origin is PairOrigin.EQUIVALENT
            assert inv_pair(moved, 4) == inv_pair(pair, 4)

    def test_symmetrized_pair_is_in_the_orbit(self, rng):
        pair = complementary_reduce(make_r_to_one(16, 4, 16, rng), rng)
        moved = symmetrize_pair(pair, rng)
        assert gamma_witness(pair, moved) is not None


class TestPairRelationship:
    """Test pair classification."""

    @pytest.mark.parametrize(
        "a,b,expected",
        [
            ((1, 2), (2, 1), PairRelationship.EQUAL_SETS),
            ((1, 2), (3, 4), PairRelationship.DISJOINT_SETS),
            ((1, 2), (2, 3), PairRelationship.OVERLAPPING),
        ],
    )
    def test_examples(self, a, b, expected):
        assert pair_relationship(FunctionPair(a=a, b=b)) is expected


class TestReductionLaws:
    """INV laws for r-to-one sources, set relationships for one-to-one sources."""

    @pytest.mark.parametrize("n,r", [(16, 4), (64, 8), (256, 16)])
    def test_zero_violations(self, n, r):
        rng = Rng(n * 1000 + r)
        for trial in range(10_000):
            child = rng.child("laws", trial)
            f = make_r_to_one(n, r, n, child)
            comp = complementary_reduce(f, child)
            a_inv, b_inv = inv_pair(comp, r)
            assert a_inv == reverse_profile(b_inv)
            assert is_bad(a_inv, 0.5) == is_bad(b_inv, 0.5)
            equiv = equivalent_reduce(f, child)
            a_inv, b_inv = inv_pair(equiv, r)
            assert a_inv == b_inv
            g = make_one_to_one(n, n, child)
            assert pair_relationship(complementary_reduce(g, child)) is PairRelationship.DISJOINT_SETS
            assert pair_relationship(equivalent_reduce(g, child)) is PairRelationship.EQUAL_SETS

    def test_inv_law_matches_across_reductions(self):
        """Two-sample chi-square on a_{r/2}, the number of images with exactly r/2 preimages in a."""
        n, r = 64, 8
        rng = Rng(77)
        f = make_r_to_one(n, r, n, rng)
        samples = {origin: Counter() for origin in (PairOrigin.COMPLEMENTARY, PairOrigin.EQUIVALENT)}
        reducers = {PairOrigin.COMPLEMENTARY: complementary_reduce, PairOrigin.EQUIVALENT: equivalent_reduce}
        for origin, counter in samples.items():
            for trial in range(10_000):
                pair = reducers[origin](f, rng.child(origin.value, trial))
                counter[inv_profile(pair.a, pair.images, r).counts[r // 2]] += 1
        keys = sorted(set(samples[PairOrigin.COMPLEMENTARY]) | set(samples[PairOrigin.EQUIVALENT]))
        table = np.array([[samples[o][k] for k in keys] for o in samples])
        table = table[:, table.sum(axis=0) >= 10]
        _, p_value, _, _ = stats.chi2_contingency(table)
        assert p_value > 0.001


class TestGammaWitness:
    """Test orbit witnesses."""

    def test_finds_witness_for_orbit_member(self, rng):
        pair = equivalent_reduce(make_r_to_one(16, 4, 16, rng), rng)
        moved = symmetrize_pair(pair, rng)
        sigma1, sigma2, tau = gamma_witness(pair, moved)
        assert sigma1.k == 8 and sigma2.k == 8 and tau.k == 16

    def test_none_across_orbits(self):
        p = FunctionPair(a=(1, 1), b=(2, 2), images=(1, 2), N=2)
        q = FunctionPair(a=(1, 2), b=(1, 2), images=(1, 2), N=2)
        assert gamma_witness(p, q) is None


class TestConditionedSampling:
    """Test ComesFrom sampling."""

    def test_returns_non_bad_pair(self, rng):
        pair = sample_comes_from(16, 4, 16, PairOrigin.COMPLEMENTARY, rng)
        assert not is_bad(inv_profile(pair.a, pair.images, 4))

    def test_retry_budget(self, rng):
        """With a tiny constant every pair is BAD except a perfectly balanced one."""
        with pytest.raises(PreconditionError, match="retry budget exhausted"):
            sample_comes_from(64, 8, 64, PairOrigin.COMPLEMENTARY, rng, constant=1e-6, max_attempts=3)


class TestPairJson:
    """Test pair JSON."""

    def test_shape(self):
        pair = FunctionPair(origin=PairOrigin.EQUIVALENT, a=(1, 2), b=(2, 1), images=(1, 2))
        assert json.loads(pair_to_json(pair)) == {"origin": "equivalent", "a": [1, 2], "b": [2, 1]}
