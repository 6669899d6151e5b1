"""Tests for src/query_sim.py — statevector, Grover, set-equality algorithms, acceptance tables."""

import logging
import math

import numpy as np
import pytest

from src.bounds_pipeline import dichotomy_classify
from src.core_model import make_one_to_one
from src.errors import InvariantViolation, PreconditionError
from src.models import Decision, DichotomyOutcome, FunctionPair
from src.query_sim import (
    DISTINGUISHERS,
    MajorityVote,
    QueryTally,
    StateVector,
    acceptance_table,
    always_accept,
    always_reject,
    amplitude_amplify,
    amplitude_amplify_statevector,
    ceil_cuberoot,
    cuberoot_budget,
    diffusion,
    exact_set_comparison,
    grover_closed_form,
    grover_iterations,
    grover_search,
    phase_oracle,
    set_equality_cuberoot,
    set_equality_sqrt_n,
    sqrt_n_budget,
)
from src.reductions import complementary_reduce, equivalent_reduce
from src.rng import Rng

EQUAL_PAIR = FunctionPair(a=tuple(range(1, 9)), b=(3, 1, 4, 8, 5, 2, 7, 6), N=16)
DISJOINT_PAIR = FunctionPair(a=tuple(range(1, 9)), b=tuple(range(9, 17)), N=16)


class TestQueryTally:
    """Test query accounting."""

    def test_charge(self):
        tally = QueryTally()
        tally.charge("a", 2, classical=True)
        tally.charge("b")
        assert tally.as_dict() == {"oracle_calls_a": 2, "oracle_calls_b": 1, "classical_reads": 2, "total": 3}

    def test_unknown_oracle(self):
        with pytest.raises(PreconditionError):
            QueryTally().charge("c")


class TestStateVector:
    """Test the statevector and its gates."""

    def test_uniform(self):
        assert np.allclose(StateVector.uniform(4).probabilities(), 0.25)

    def test_basis_is_one_based(self):
        assert StateVector.basis(4, 2).probabilities().tolist() == [0, 1, 0, 0]

    def test_rejects_unnormalized(self):
        with pytest.raises(InvariantViolation):
            StateVector(np.array([1.0, 1.0]))

    def test_too_large(self, monkeypatch):
        monkeypatch.setattr("src.query_sim.MAX_AMPLITUDES", 4)
        with pytest.raises(PreconditionError, match="statevector too large"):
            StateVector.uniform(8)

    def test_oracle_and_diffusion_keep_norm_and_count(self):
        state = StateVector.uniform(8)
        for _ in range(3):
            state = diffusion(phase_oracle(state, lambda i: i == 5))
        assert state.tally.oracle_calls_b == 3
        assert state.probabilities().sum() == pytest.approx(1)

    def test_mask_dimension(self):
        with pytest.raises(PreconditionError, match="dimension mismatch"):
            phase_oracle(StateVector.uniform(4), np.ones(3, dtype=bool))


class TestGrover:
    """Test Grover search."""

    @pytest.mark.parametrize("n,marked,iterations", [(8, 1, 2), (32, 1, 4), (64, 3, 3), (16, 4, 1)])
    def test_matches_closed_form(self, rng, n, marked, iterations):
        mask = np.zeros(n, dtype=bool)
        mask[:marked] = True
        result = grover_search(n, mask, iterations, rng)
        assert result.success_prob == pytest.approx(grover_closed_form(n, marked, iterations), abs=1e-9)

    def test_closed_form_sweep(self, rng):
        """Every n <= 64, every marked count, k <= 10."""
        for n in range(1, 65):
            for marked in range(1, n + 1):
                mask = np.arange(n) < marked
                for k in range(11):
                    result = grover_search(n, mask, k, rng)
                    assert abs(result.success_prob - grover_closed_form(n, marked, k)) < 1e-6, (n, marked, k)

    def test_counts_iterations_and_verifying_read(self, rng):
        result = grover_search(8, lambda i: i == 3, 2, rng)
        assert result.tally.oracle_calls_b == 3
        assert result.tally.classical_reads == 1
        assert result.found in (3, None)

    def test_no_marked_item(self, rng):
        result = grover_search(8, np.zeros(8, dtype=bool), 2, rng)
        assert result.found is None
        assert result.success_prob == 0

    def test_finds_item_most_of_the_time(self):
        hits = sum(grover_search(16, lambda i: i == 11, 3, Rng(seed)).found == 11 for seed in range(200))
        assert hits >= 180

    @pytest.mark.parametrize("domain,marked,expected", [(8, 1, 2), (32, 1, 4), (4, 2, 1), (1, 1, 0)])
    def test_iterations(self, domain, marked, expected):
        assert grover_iterations(domain, marked) == expected

    def test_closed_form_value(self):
        assert grover_closed_form(8, 1, 2) == pytest.approx(0.9453, abs=1e-4)


class TestAmplitudeAmplification:
    """Test amplitude amplification."""

    @pytest.mark.parametrize("p,rounds", [(0.25, 1), (1 / 8, 2), (0.01, 7), (0.0, 3), (1.0, 2)])
    def test_plane_matches_closed_form(self, p, rounds):
        expected = math.sin((2 * rounds + 1) * math.asin(math.sqrt(p))) ** 2
        assert amplitude_amplify(p, rounds) == pytest.approx(expected, abs=1e-12)

    def test_statevector_matches_plane(self, rng):
        initial = rng.generator.standard_normal(16)
        initial /= np.linalg.norm(initial)
        good = np.zeros(16, dtype=bool)
        good[[2, 9]] = True
        p = float((initial[good] ** 2).sum())
        for rounds in range(5):
            assert amplitude_amplify_statevector(initial, good, rounds) == pytest.approx(
                amplitude_amplify(p, rounds), abs=1e-9
            )

    def test_invalid_probability(self):
        with pytest.raises(PreconditionError):
            amplitude_amplify(1.5, 1)


class TestSetEquality:
    """Test the set-equality algorithms."""

    def test_sqrt_n_disjoint_is_always_right(self, rng):
        for _ in range(50):
            assert set_equality_sqrt_n(DISJOINT_PAIR, rng).decision is Decision.DISJOINT

    def test_sqrt_n_equal_and_budget(self, rng):
        runs = [set_equality_sqrt_n(EQUAL_PAIR, rng) for _ in range(200)]
        assert sum(run.decision is Decision.EQUAL for run in runs) >= 170
        for run in runs:
            assert run.tally.oracle_calls_a == 1
            assert run.tally.total <= sqrt_n_budget(8)

    def test_cuberoot_equal_and_budget(self, rng):
        for _ in range(50):
            run = set_equality_cuberoot(EQUAL_PAIR, rng)
            assert run.decision is Decision.EQUAL
            assert run.tally.oracle_calls_a == ceil_cuberoot(8) == 2
            assert run.tally.total <= cuberoot_budget(8, 2)

    @pytest.mark.parametrize("n", [16, 64])
    @pytest.mark.parametrize(
        "algorithm,budget",
        [
            (set_equality_sqrt_n, sqrt_n_budget),
            (set_equality_cuberoot, lambda half: cuberoot_budget(half, ceil_cuberoot(half))),
        ],
    )
    def test_success_on_reduced_instances(self, n, algorithm, budget):
        """Equal instances succeed at least 2/3 of the time, Disjoint ones always, within budget."""
        rng = Rng(n)
        limit = budget(n // 2)
        equal_ok = 0
        for trial in range(1000):
            child = rng.child("seteq", trial)
            equal = equivalent_reduce(make_one_to_one(n, n, child), child)
            disjoint = complementary_reduce(make_one_to_one(n, n, child), child)
            equal_run, disjoint_run = algorithm(equal, child), algorithm(disjoint, child)
            equal_ok += equal_run.decision is Decision.EQUAL
            assert disjoint_run.decision is Decision.DISJOINT
            assert equal_run.tally.total <= limit
            assert disjoint_run.tally.total <= limit
        assert equal_ok >= 667

    def test_cuberoot_disjoint(self, rng):
        assert set_equality_cuberoot(DISJOINT_PAIR, rng).decision is Decision.DISJOINT

    def test_sample_exceeds_domain(self, rng):
        with pytest.raises(PreconditionError, match="sample exceeds domain"):
            set_equality_cuberoot(FunctionPair(a=(1, 2), b=(2, 1)), rng, k=3)

    def test_overlap_is_flagged(self, rng, caplog):
        with caplog.at_level(logging.DEBUG, logger="src.query_sim"):
            run = set_equality_sqrt_n(FunctionPair(a=(1, 2), b=(2, 3)), rng)
        assert run.flagged_overlap is True
        assert "promise" in caplog.text

    @pytest.mark.parametrize("value,expected", [(1, 1), (8, 2), (9, 3), (27, 3), (28, 4), (1000, 10)])
    def test_ceil_cuberoot(self, value, expected):
        assert ceil_cuberoot(value) == expected


class TestDistinguishers:
    """Test distinguishers."""

    def test_exact(self, rng):
        assert exact_set_comparison(DISJOINT_PAIR, rng) is True
        assert exact_set_comparison(EQUAL_PAIR, rng) is False

    def test_majority_needs_odd_repetitions(self):
        with pytest.raises(PreconditionError):
            MajorityVote(always_accept, repetitions=4)

    def test_registry(self):
        assert set(DISTINGUISHERS) == {"exact", "accept", "reject", "sqrtn", "cuberoot"}


class TestAcceptanceTable:
    """Test acceptance tables."""

    def test_exact_distinguisher(self):
        table = acceptance_table(exact_set_comparison, 16, 4, 200, Rng(3))
        assert table.p_c1 == 1
        assert table.p_e1 == 0
        assert table.p_e2 == 0
        assert table.p_c2 < 0.05
        assert dichotomy_classify(table) is DichotomyOutcome.COLLISION_SOLVER_EXISTS

    def test_constant_distinguishers(self):
        accept = acceptance_table(always_accept, 16, 4, 20, Rng(3))
        reject = acceptance_table(always_reject, 16, 4, 20, Rng(3))
        assert (accept.p_c1, accept.p_c2, accept.p_e1, accept.p_e2) == (1, 1, 1, 1)
        assert (reject.p_c1, reject.p_c2, reject.p_e1, reject.p_e2) == (0, 0, 0, 0)

    def test_trivial_distinguisher_is_not_a_solver(self):
        table = acceptance_table(always_accept, 16, 4, 20, Rng(3))
        with pytest.raises(PreconditionError, match="not a set-equality solver"):
            dichotomy_classify(table)

    def test_jobs_do_not_change_result(self):
        serial = acceptance_table(exact_set_comparison, 16, 4, 300, Rng(8), jobs=1)
        parallel = acceptance_table(exact_set_comparison, 16, 4, 300, Rng(8), jobs=2)
        assert serial == parallel

    def test_exact_distinguisher_at_n_64(self):
        table = acceptance_table(exact_set_comparison, 64, 8, 200, Rng(64))
        assert table.p_c1 >= 0.95
        assert table.p_e1 <= 0.05
        assert dichotomy_classify(table) is DichotomyOutcome.COLLISION_SOLVER_EXISTS
