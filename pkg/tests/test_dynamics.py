"""Stochastic-matrix fixed points, swap updates, projections, regret measurement."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consplit.dynamics import (measure_swap_regret, project_l1_ball_nonneg,
                               projected_ascent_update, stationary_distribution,
                               stationary_distribution_direct, swap_regret_bound,
                               swap_update, theory_swap_step_size,
                               uniform_matrix)


def random_column_stochastic(rng, k):
    m = rng.random((k, k)) + 0.05
    return m / m.sum(axis=0, keepdims=True)


class TestStationaryDistribution:
    def test_uniform_matrix_uniform_fixed_point(self):
        for k in (2, 3, 7):
            np.testing.assert_allclose(stationary_distribution(uniform_matrix(k)),
                                       np.full(k, 1.0 / k), atol=1e-12)

    def test_two_by_two_hand_solution(self):
        m = np.array([[0.5, 0.25], [0.5, 0.75]])
        np.testing.assert_allclose(stationary_distribution(m),
                                   [1.0 / 3.0, 2.0 / 3.0], atol=1e-10)

    def test_near_absorbing_coordinate(self):
        eps = 1e-9
        m = np.array([[1.0 - eps, 1.0 - eps], [eps, eps]])
        lam = stationary_distribution(m)
        assert lam[0] == pytest.approx(1.0, abs=1e-6)

    def test_matches_direct_solve(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 9))
            m = random_column_stochastic(rng, k)
            power = stationary_distribution(m)
            direct = stationary_distribution_direct(m)
            assert np.abs(power - direct).sum() < 1e-8

    def test_residual_contract(self, rng):
        m = random_column_stochastic(rng, 5)
        lam = stationary_distribution(m)
        assert np.abs(m @ lam - lam).sum() <= 1e-10
        assert lam.sum() == pytest.approx(1.0, abs=1e-12)

    def test_invalid_matrix_rejected(self):
        with pytest.raises(ValueError):
            stationary_distribution(np.array([[0.5, 0.5], [0.4, 0.5]]))
        with pytest.raises(ValueError):
            stationary_distribution(np.array([[1.0, 0.0], [0.0, 1.0]]))


class TestSwapUpdate:
    def test_zero_gradient_identity(self):
        m = uniform_matrix(3)
        np.testing.assert_allclose(
            swap_update(m, np.full(3, 1 / 3), np.zeros(3), 1.0), m, atol=1e-15)

    def test_zero_step_identity(self):
        m = uniform_matrix(3)
        np.testing.assert_allclose(
            swap_update(m, np.full(3, 1 / 3), np.array([1.0, -2.0, 0.5]), 0.0),
            m, atol=1e-15)

    def test_hand_arithmetic(self):
        m = swap_update(uniform_matrix(2), np.array([0.5, 0.5]),
                        np.array([0.0, 1.0]), 1.0)
        e = np.exp(0.5)
        expect = np.array([1.0, e]) / (1.0 + e)
        np.testing.assert_allclose(m[:, 0], expect, atol=1e-12)
        np.testing.assert_allclose(m[:, 1], expect, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 8))
    def test_preserves_column_stochasticity(self, seed, k):
        rng = np.random.default_rng(seed)
        m = random_column_stochastic(rng, k)
        lam = rng.dirichlet(np.ones(k))
        grad = rng.normal(size=k)
        out = swap_update(m, lam, grad, 0.5)
        np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)
        assert out.min() > 0

    def test_huge_exponent_clipped_not_overflowed(self):
        m = swap_update(uniform_matrix(2), np.array([0.5, 0.5]),
                        np.array([0.0, 1e6]), 1.0)
        assert np.all(np.isfinite(m))
        np.testing.assert_allclose(m.sum(axis=0), 1.0, atol=1e-12)


class TestProjectedAscent:
    def test_zero_gradient_identity(self):
        lam = np.array([0.3, 0.1])
        np.testing.assert_array_equal(
            projected_ascent_update(lam, np.zeros(2), 1.0, 10.0), lam)

    def test_plain_ascent(self):
        np.testing.assert_allclose(
            projected_ascent_update(np.array([0.1]), np.array([0.5]), 1.0, 10.0),
            [0.6], atol=1e-15)

    def test_negative_clipped(self):
        np.testing.assert_allclose(
            projected_ascent_update(np.array([0.1]), np.array([-0.5]), 1.0, 10.0),
            [0.0], atol=1e-15)

    def test_radius_cap(self):
        out = projected_ascent_update(np.array([3.0, 3.0]), np.array([4.0, 0.0]),
                                      1.0, 5.0)
        assert out.sum() == pytest.approx(5.0, abs=1e-12)
        assert out.min() >= 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6),
           st.floats(0.1, 20.0))
    def test_projection_lands_in_set(self, seed, m, radius):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=m) * 10
        out = project_l1_ball_nonneg(v, radius)
        assert out.min() >= 0.0
        assert out.sum() <= radius + 1e-9

    def test_projection_is_identity_inside(self):
        v = np.array([0.5, 1.0])
        np.testing.assert_array_equal(project_l1_ball_nonneg(v, 2.0), v)

    def test_projection_matches_brute_force(self, rng):
        # nearest point in the set by dense grid search, 2-d instances
        for _ in range(10):
            v = rng.normal(size=2) * 2
            radius = 1.5
            out = project_l1_ball_nonneg(v, radius)
            grid = np.linspace(0, radius, 301)
            best, best_d = None, np.inf
            for a in grid:
                for b in grid:
                    if a + b <= radius:
                        d = (a - v[0]) ** 2 + (b - v[1]) ** 2
                        if d < best_d:
                            best, best_d = (a, b), d
            assert np.hypot(out[0] - best[0], out[1] - best[1]) < 2e-2


class TestSwapRegret:
    def test_best_response_zero_regret(self):
        # constant play on the best coordinate
        payoffs = np.tile(np.array([0.0, 1.0, -1.0]), (5, 1))
        lams = np.tile(np.array([0.0, 1.0, 0.0]), (5, 1))
        assert measure_swap_regret(lams, payoffs) == pytest.approx(0.0, abs=1e-12)

    def test_single_step_hand_value(self):
        got = measure_swap_regret(np.array([[0.5, 0.5]]), np.array([[0.0, 1.0]]))
        assert got == pytest.approx(0.5, abs=1e-12)

    def test_nonnegative(self, rng):
        for _ in range(20):
            t, k = int(rng.integers(1, 30)), int(rng.integers(2, 6))
            lams = rng.dirichlet(np.ones(k), size=t)
            payoffs = rng.normal(size=(t, k))
            assert measure_swap_regret(lams, payoffs) >= -1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            measure_swap_regret(np.zeros((3, 2)), np.zeros((3, 3)))


class TestTheoryStep:
    def test_formulas(self):
        k, t, b = 3, 100, 2.0
        assert theory_swap_step_size(k, t, b) == pytest.approx(
            np.sqrt(k * np.log(k) / (t * b * b)))
        assert swap_regret_bound(k, t, b) == pytest.approx(
            2 * b * np.sqrt(k * np.log(k) / t))

    def test_dynamics_meet_bound_small_case(self, rng):
        # multiplicative swap updates at the theory step size against an
        # adversarially drifting payoff sequence
        k, t, b = 2, 500, 1.0
        eta = theory_swap_step_size(k, t, b)
        matrix = uniform_matrix(k)
        lams, payoffs = [], []
        for step in range(t):
            lam = stationary_distribution(matrix)
            g = np.array([0.0, np.sin(step / 7.0)])
            lams.append(lam)
            payoffs.append(g)
            matrix = swap_update(matrix, lam, g, eta)
        regret = measure_swap_regret(np.array(lams), np.array(payoffs))
        assert regret <= swap_regret_bound(k, t, b)
