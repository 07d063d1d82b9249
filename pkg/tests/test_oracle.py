import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import degraded_pair, nondegraded_pair, random_psd
from wiretap import GramPair, capacity
from wiretap.closed_form import solve_full_rank, threshold_exact
from wiretap.errors import ZeroMatrix
from wiretap.optimality import recover_multipliers
from wiretap.oracle import (OracleConfig, extract_active_subspace,
                            hybrid_solve, oracle_maximize,
                            project_capped_simplex, project_feasible,
                            waterfill)
from wiretap.solution import Method

CROSSED = GramPair(np.diag([2.0, 1.0]), np.diag([1.0, 2.0]))


class TestProjection:
    def test_feasible_unchanged(self, rng):
        r = random_psd(rng, 3)
        r *= 0.5 / np.trace(r).real
        np.testing.assert_allclose(project_feasible(r, 1.0), r, atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(project_feasible(np.diag([3.0, -1.0]), 2.0),
                                   np.diag([2.0, 0.0]), atol=1e-14)

    def test_nearest(self, rng):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        x = g + g.conj().T
        p = project_feasible(x, 1.0)
        dist = np.linalg.norm(x - p)
        for _ in range(500):
            q = random_psd(rng, 4, rank=int(rng.integers(1, 5)))
            q *= rng.uniform(0, 1) / np.trace(q).real
            assert np.linalg.norm(x - q) >= dist - 1e-12
            # first-order condition of the projection
            assert np.real(np.vdot(x - p, q - p)) <= 1e-10

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6),
           st.floats(1e-6, 1e3))
    def test_simplex(self, v, total):
        x = project_capped_simplex(np.array(v), total)
        assert np.all(x >= 0)
        assert x.sum() <= total * (1 + 1e-12)


class TestWaterfill:
    def test_equal_gains(self):
        np.testing.assert_allclose(waterfill([1.0, 1.0], 2.0), [1.0, 1.0])

    def test_drops_weak_mode(self):
        np.testing.assert_allclose(waterfill([1.0, 0.1], 1.0), [1.0, 0.0])

    def test_ignores_zero_gain(self):
        np.testing.assert_allclose(waterfill([0.0, 2.0], 3.0), [0.0, 3.0])


class TestOracle:
    def test_example(self, example_pair):
        sol = oracle_maximize(example_pair, 10.0)
        assert sol.method is Method.ORACLE
        assert not sol.certified
        assert sol.capacity_nats == pytest.approx(
            solve_full_rank(example_pair, 10.0).capacity_nats, rel=1e-5)

    def test_crossed(self):
        sol = oracle_maximize(CROSSED, 1.0)
        assert sol.capacity_nats == pytest.approx(math.log(1.5), rel=1e-8)
        assert sol.rank == 1

    def test_reversed(self):
        sol = oracle_maximize(GramPair(np.eye(2), 2 * np.eye(2)), 1.0)
        assert sol.method is Method.ZERO
        assert sol.capacity_nats == 0.0
        np.testing.assert_array_equal(sol.covariance, 0)

    def test_feasible_at_low_power(self):
        # large trial steps once left the trace slightly above the budget
        pair = nondegraded_pair(np.random.default_rng(0), 2)
        sol = oracle_maximize(pair, 0.1)
        assert np.trace(sol.covariance).real <= 0.1 * (1 + 1e-12)

    def test_more_starts_never_worse(self, rng):
        pair = nondegraded_pair(rng, 3)
        few = oracle_maximize(pair, 3.0, OracleConfig(starts=4))
        many = oracle_maximize(pair, 3.0, OracleConfig(starts=16))
        assert many.capacity_nats >= few.capacity_nats - 1e-9

    def test_deterministic_across_workers(self, rng):
        pair = nondegraded_pair(rng, 3)
        a = oracle_maximize(pair, 2.0, OracleConfig(seed=3))
        b = oracle_maximize(pair, 2.0, OracleConfig(seed=3, workers=4))
        np.testing.assert_array_equal(a.covariance, b.covariance)
        assert a.diagnostics['starts'] == b.diagnostics['starts']

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OracleConfig(starts=0)
        with pytest.raises(ValueError):
            oracle_maximize(CROSSED, 0.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1),
           st.sampled_from([0.1, 1.0, 10.0]))
    def test_feasible_and_consistent(self, m, seed, p_t):
        pair = nondegraded_pair(np.random.default_rng(seed), m)
        sol = oracle_maximize(pair, p_t)
        assert np.trace(sol.covariance).real <= p_t * (1 + 1e-12)
        assert np.linalg.eigvalsh(sol.covariance)[0] >= -1e-12 * p_t
        assert capacity(pair, sol.covariance)[1] == pytest.approx(
            sol.capacity_nats, abs=1e-12)


class TestActiveSubspace:
    def test_rank_one(self):
        u = np.array([1.0, 1.0j]) / math.sqrt(2)
        basis = extract_active_subspace(3 * np.outer(u, u.conj()))
        assert basis.shape == (2, 1)
        assert abs(np.vdot(basis[:, 0], u)) == pytest.approx(1.0)

    def test_full_rank(self, example_pair):
        r = solve_full_rank(example_pair, 10.0).covariance
        assert extract_active_subspace(r).shape == (2, 2)

    def test_oracle_output(self):
        basis = extract_active_subspace(oracle_maximize(CROSSED,
                                                        1.0).covariance)
        angle = math.acos(min(1.0, abs(basis[0, 0])))
        assert basis.shape == (2, 1) and angle <= 1e-4

    def test_zero(self):
        with pytest.raises(ZeroMatrix):
            extract_active_subspace(np.zeros((2, 2)))


class TestHybrid:
    def test_degraded_full_space(self, rng):
        pair = degraded_pair(rng, 3)
        p_t = 2 * max(threshold_exact(pair), 1.0)
        sol = hybrid_solve(pair, p_t)
        ref = solve_full_rank(pair, p_t)
        assert sol.method is Method.SUBSPACE
        assert sol.diagnostics['subspace_dim'] == 3
        np.testing.assert_allclose(sol.covariance, ref.covariance, atol=1e-9)

    def test_crossed(self):
        sol = hybrid_solve(CROSSED, 1.0)
        np.testing.assert_allclose(sol.covariance, np.diag([1.0, 0.0]),
                                   atol=1e-9)
        assert sol.capacity_nats == pytest.approx(math.log(1.5), rel=1e-12)

    def test_two_positive_modes(self):
        rng = np.random.default_rng(12)
        u = np.linalg.qr(rng.standard_normal((3, 3))
                         + 1j * rng.standard_normal((3, 3)))[0]
        base = random_psd(rng, 3)
        pair = GramPair(base + (u * [1.0, 0.7, 0.0]) @ u.conj().T,
                        base + (u * [0.0, 0.0, 1.0]) @ u.conj().T)
        for p_t in (0.5, 5.0, 50.0):
            raw = oracle_maximize(pair, p_t)
            sol = hybrid_solve(pair, p_t)
            assert 'polish_failed' not in sol.diagnostics
            assert sol.capacity_nats >= raw.capacity_nats - 1e-9
            assert recover_multipliers(pair, sol.covariance, p_t).passes
