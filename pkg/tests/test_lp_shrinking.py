"""Two-phase simplex solver and the trace-shrinking LP/bisection on top of it."""

import numpy as np
import pytest

from consplit.lp import InfeasibleError, UnboundedError, solve_lp
from consplit.shrinking import (ShrinkInput, StochasticClassifier,
                                evaluate_stochastic, shrink, solve_shrink_lp)


class TestSolveLP:
    def test_equality_program(self):
        # min x0 + 2 x1 s.t. x0 + x1 = 1 -> x = (1, 0)
        x, v = solve_lp(np.array([1.0, 2.0]), np.array([[1.0, 1.0]]),
                        np.array([1.0]))
        np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-9)
        assert v == pytest.approx(1.0, abs=1e-9)

    def test_two_constraints(self):
        # min -x0 - x1 s.t. x0 + 2 x1 + s0 = 4, 3 x0 + x1 + s1 = 6
        c = np.array([-1.0, -1.0, 0.0, 0.0])
        a = np.array([[1.0, 2.0, 1.0, 0.0], [3.0, 1.0, 0.0, 1.0]])
        x, v = solve_lp(c, a, np.array([4.0, 6.0]))
        np.testing.assert_allclose(x[:2], [1.6, 1.2], atol=1e-9)
        assert v == pytest.approx(-2.8, abs=1e-9)

    def test_negative_rhs_normalized(self):
        # -x0 = -2 -> x0 = 2
        x, v = solve_lp(np.array([1.0]), np.array([[-1.0]]), np.array([-2.0]))
        np.testing.assert_allclose(x, [2.0], atol=1e-9)

    def test_infeasible(self):
        # x0 = 1 and x0 = 2
        with pytest.raises(InfeasibleError):
            solve_lp(np.zeros(1), np.array([[1.0], [1.0]]), np.array([1.0, 2.0]))

    def test_unbounded(self):
        # min -x1 with x0 - x1 = 0: both can grow forever
        with pytest.raises(UnboundedError):
            solve_lp(np.array([0.0, -1.0]), np.array([[1.0, -1.0]]),
                     np.array([0.0]))

    def test_degenerate_does_not_cycle(self):
        # classic degenerate vertex; Bland's rule must terminate
        c = np.array([-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0])
        a = np.array([[0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0],
                      [0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0],
                      [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]])
        b = np.array([0.0, 0.0, 1.0])
        x, v = solve_lp(c, a, b)
        assert v == pytest.approx(-0.05, abs=1e-9)

    def test_basic_solution_is_sparse(self, rng):
        for _ in range(20):
            rows, cols = 3, 8
            a = rng.normal(size=(rows, cols))
            x_feas = np.abs(rng.normal(size=cols))
            b = a @ x_feas
            c = rng.normal(size=cols)
            try:
                x, _ = solve_lp(c, a, b)
            except UnboundedError:
                continue
            assert np.count_nonzero(x > 1e-9) <= rows

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_lp(np.zeros(2), np.zeros((1, 3)), np.zeros(1))


def grid_oracle(inp: ShrinkInput, epsilon: float, resolution: float = 0.1):
    """Brute-force minimum over a simplex grid; None when nothing is feasible."""
    t = len(inp.objectives)
    steps = int(round(1.0 / resolution))
    best = None

    def rec(prefix, remaining, coords):
        nonlocal best
        if coords == 1:
            p = np.array(prefix + [remaining * resolution])
            if np.all(inp.violations @ p <= epsilon + 1e-12):
                value = float(inp.objectives @ p)
                if best is None or value < best:
                    best = value
            return
        for k in range(remaining + 1):
            rec(prefix + [k * resolution], remaining - k, coords - 1)

    rec([], steps, t)
    return best


class TestSolveShrinkLP:
    def test_single_iterate_feasible(self):
        p, v = solve_shrink_lp(ShrinkInput([0.3], [[-0.2]]), 0.0)
        np.testing.assert_allclose(p, [1.0], atol=1e-9)
        assert v == pytest.approx(0.3)

    def test_single_iterate_infeasible(self):
        with pytest.raises(InfeasibleError):
            solve_shrink_lp(ShrinkInput([0.3], [[0.2]]), 0.0)

    def test_boundary_mixture_optimum(self):
        # two iterates, one constraint: optimum sits where the violation is tight
        inp = ShrinkInput([0.5, 0.2], [[-0.1, 0.3]])
        p, v = solve_shrink_lp(inp, 0.0)
        np.testing.assert_allclose(p, [0.75, 0.25], atol=1e-9)
        assert v == pytest.approx(0.425, abs=1e-9)

    def test_matches_grid_oracle(self, rng):
        for _ in range(60):
            t = int(rng.integers(1, 7))
            m = int(rng.integers(1, 3))
            inp = ShrinkInput(rng.normal(size=t), rng.normal(size=(m, t)))
            eps = float(rng.normal() * 0.5)
            oracle = grid_oracle(inp, eps)
            try:
                p, v = solve_shrink_lp(inp, eps)
            except InfeasibleError:
                # any feasible grid point would certify the LP as feasible too
                assert oracle is None
                continue
            # the grid value is attained by a feasible mixture, so the LP
            # optimum can only improve on it (the grid may miss feasibility)
            if oracle is not None:
                assert v <= oracle + 1e-9
            assert np.all(inp.violations @ p <= eps + 1e-6)

    def test_objective_monotone_in_epsilon(self, rng):
        inp = ShrinkInput(rng.normal(size=5), rng.normal(size=(2, 5)))
        values = []
        for eps in np.linspace(inp.violations.max(axis=0).min(), 1.0, 8):
            _, v = solve_shrink_lp(inp, float(eps))
            values.append(v)
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_shapes_validated(self):
        with pytest.raises(ValueError):
            ShrinkInput(np.zeros(3), np.zeros((2, 4)))


class TestShrink:
    def test_feasible_iterate_gives_nonpositive_violations(self):
        inp = ShrinkInput([0.4, 0.1, 0.5],
                          [[0.2, -0.05, 0.3], [0.1, -0.02, -0.4]])
        p, eps = shrink(inp)
        assert eps <= 1e-6
        assert np.all(inp.violations @ p <= 1e-6)

    def test_point_mass_on_single_feasible(self):
        inp = ShrinkInput([0.5, 0.2], [[-0.1, 0.3]])
        p, eps = shrink(inp)
        # smallest feasible epsilon is -0.1, achieved only by the first iterate
        assert eps == pytest.approx(-0.1, abs=1e-6)
        np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-6)

    def test_negative_lb_disabled(self):
        inp = ShrinkInput([0.5, 0.2], [[-0.1, 0.3]])
        p, eps = shrink(inp, allow_negative=False)
        assert eps == pytest.approx(0.0, abs=1e-9)
        # at epsilon 0 the cheaper mixture (0.75, 0.25) is allowed
        np.testing.assert_allclose(p, [0.75, 0.25], atol=1e-6)

    def test_support_bound_random(self, rng):
        for _ in range(100):
            t = int(rng.integers(1, 7))
            m = int(rng.integers(1, 3))
            inp = ShrinkInput(rng.normal(size=t), rng.normal(size=(m, t)))
            p, _ = shrink(inp)
            assert np.count_nonzero(p > 1e-9) <= m + 1

    def test_never_worse_than_best_single_iterate(self, rng):
        for _ in range(30):
            inp = ShrinkInput(rng.normal(size=5), rng.normal(size=(2, 5)))
            p, _ = shrink(inp)
            mixture_worst = (inp.violations @ p).max()
            best_single = inp.violations.max(axis=0).min()
            assert mixture_worst <= best_single + 1e-6

    def test_unconstrained_picks_best_objective(self):
        inp = ShrinkInput([0.4, 0.1, 0.5], np.zeros((0, 3)))
        p, eps = shrink(inp)
        np.testing.assert_array_equal(p, [0.0, 1.0, 0.0])
        assert eps == 0.0


class TestStochasticClassifier:
    def test_simplex_validation(self):
        with pytest.raises(ValueError):
            StochasticClassifier(np.zeros((2, 3)), np.array([0.7, 0.7]))
        with pytest.raises(ValueError):
            StochasticClassifier(np.zeros((2, 3)), np.array([1.5, -0.5]))

    def test_from_trace_prunes(self):
        clf = StochasticClassifier.from_trace(np.arange(6.0).reshape(3, 2),
                                              np.array([0.5, 0.0, 0.5]))
        assert clf.thetas.shape == (2, 2)
        np.testing.assert_allclose(clf.weights, [0.5, 0.5])

    def test_sampling_respects_weights(self):
        clf = StochasticClassifier(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
        rng = np.random.default_rng(0)
        assert all(clf.sample_theta(rng)[0] == 1.0 for _ in range(10))


class TestEvaluateStochastic:
    def _setup(self):
        from conftest import view_from
        from consplit.models import Architecture
        from consplit.problems import ConstrainedProblem, RateConstraintSpec
        features = np.array([[1.0], [1.0], [-1.0], [-1.0]])
        data = view_from([1.0, 1.0, -1.0, -1.0], features=features)
        prob = ConstrainedProblem((RateConstraintSpec("recall_floor", 0.5),))
        arch = Architecture("linear", 1)
        return data, prob, arch

    def test_degenerate_equals_single_model(self):
        data, prob, arch = self._setup()
        theta = np.array([1.0, 0.0])
        clf = StochasticClassifier(theta[None, :], np.array([1.0]))
        err, cons = evaluate_stochastic(clf, arch, prob, data)
        assert err == 0.0
        assert cons == pytest.approx([-0.5])

    def test_weighted_average_of_errors(self):
        data, prob, arch = self._setup()
        good = np.array([1.0, 0.0])    # classifies all 4 correctly
        bad = np.array([-1.0, 0.0])    # flips everything
        clf = StochasticClassifier(np.vstack([good, bad]),
                                   np.array([0.25, 0.75]))
        err, _ = evaluate_stochastic(clf, arch, prob, data)
        assert err == pytest.approx(0.25 * 0.0 + 0.75 * 1.0, abs=1e-12)

    def test_cancelling_violations(self):
        # two models whose constraint values are +0.5 and -0.5 average to 0
        data, prob, arch = self._setup()
        good = np.array([1.0, 0.0])      # recall 1 -> value -0.5
        bad = np.array([-1.0, 0.0])      # recall 0 -> value +0.5
        clf = StochasticClassifier(np.vstack([good, bad]), np.array([0.5, 0.5]))
        _, cons = evaluate_stochastic(clf, arch, prob, data)
        assert cons == pytest.approx([0.0], abs=1e-12)
