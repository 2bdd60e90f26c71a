import math

import numpy as np
from django.test import SimpleTestCase
from scipy import optimize

from .envelope import moreau_elementwise, moreau_grad, moreau_value, y_subproblem
from .exceptions import BetaTooSmall, InvalidParameter, KOutOfRange, SmoothingTooCoarse
from .functions import (
    l1_norm,
    l1_prox,
    l1_subdiff_dist,
    largest_k_norm,
    largest_k_subgradient,
    largest_k_value,
    mcp,
    mcp_prox,
    zero_prox,
)

SLACK = 1e-9
DIM = 5


def catalog():
    """(h, largest admissible mu) pairs exercised by the property tests."""
    return [(l1_norm(0.7, DIM), 2.0), (mcp(0.7, 3.0, DIM), 1.5)]


class ElementaryOperatorTests(SimpleTestCase):
    def test_soft_threshold(self):
        np.testing.assert_allclose(l1_prox([3.0, -0.5, -4.0], 1.0), [2.0, 0.0, -3.0])

    def test_soft_threshold_needs_positive_lambda(self):
        with self.assertRaises(InvalidParameter):
            l1_prox([1.0], 0.0)

    def test_largest_k(self):
        X = np.array([3.0, -1.0, 2.0])
        self.assertEqual(largest_k_value(X, 2), 5.0)
        np.testing.assert_array_equal(largest_k_subgradient(X, 2), [1.0, 0.0, 1.0])
        self.assertEqual(largest_k_value(X, 3), 6.0)

    def test_largest_k_of_zero(self):
        np.testing.assert_array_equal(largest_k_subgradient(np.zeros((2, 2)), 3), np.zeros((2, 2)))

    def test_largest_k_ties_follow_row_major_order(self):
        X = np.array([[1.0, -1.0], [1.0, 0.5]])
        np.testing.assert_array_equal(largest_k_subgradient(X, 2), [[1.0, -1.0], [0.0, 0.0]])

    def test_k_out_of_range(self):
        with self.assertRaises(KOutOfRange):
            largest_k_value(np.ones(3), 4)
        with self.assertRaises(KOutOfRange):
            largest_k_norm(1.0, 0)

    def test_largest_k_subgradient_norm_bound(self):
        g = largest_k_norm(2.0, 4)
        rng = np.random.default_rng(1)
        for _ in range(100):
            sub = g.subgradient(rng.standard_normal((5, 3)))
            self.assertLessEqual(np.linalg.norm(sub), g.lipschitz + SLACK)

    def test_l1_subdiff_dist(self):
        lam = 0.4
        self.assertEqual(l1_subdiff_dist([1.0], [lam], lam), 0.0)
        self.assertEqual(l1_subdiff_dist([0.0], [0.5 * lam], lam), 0.0)
        self.assertAlmostEqual(l1_subdiff_dist([-2.0, 0.0], [0.0, 1.0], lam), math.hypot(lam, 0.6))

    def test_mcp_prox_matches_grid_minimization(self):
        lam, a, mu = 0.7, 3.0, 1.2
        grid = np.linspace(-6.0, 6.0, 1_200_001)
        h = mcp(lam, a, 1)
        values = h.elementwise(grid)
        for y in (-4.0, -1.5, -0.3, 0.0, 0.9, 1.9, 2.5):
            objective = values + (grid - y) ** 2 / (2.0 * mu)
            self.assertAlmostEqual(float(mcp_prox(y, lam, a, mu)), grid[np.argmin(objective)], places=4)

    def test_mcp_prox_needs_mu_below_a(self):
        with self.assertRaises(InvalidParameter):
            mcp_prox([1.0], 1.0, 2.0, 2.0)

    def test_subgradient_lies_in_subdifferential(self):
        rng = np.random.default_rng(9)
        y = np.concatenate([rng.standard_normal(DIM) * 3.0, [0.0]])
        for h, _ in catalog() + [(zero_prox(DIM), 1.0)]:
            with self.subTest(h=h.name):
                self.assertLessEqual(h.subdiff_dist(y, h.subgradient(y)), 1e-12)


class MoreauEnvelopeTests(SimpleTestCase):
    def setUp(self):
        self.abs = l1_norm(1.0, 1)

    def test_soft_threshold_branch(self):
        self.assertAlmostEqual(moreau_value(self.abs, 0.5, [2.0]), 1.75)

    def test_quadratic_branch(self):
        self.assertAlmostEqual(moreau_value(self.abs, 0.5, [0.3]), 0.09)

    def test_zero_input(self):
        for h, _ in catalog():
            self.assertEqual(moreau_value(h, 0.5, np.zeros(DIM)), 0.0)
            np.testing.assert_array_equal(moreau_grad(h, 0.5, np.zeros(DIM)), np.zeros(DIM))

    def test_gradient_saturates(self):
        np.testing.assert_allclose(moreau_grad(self.abs, 0.5, [2.0]), [1.0])

    def test_elementwise_sums_to_value(self):
        rng = np.random.default_rng(2)
        for h, _ in catalog():
            y = 3.0 * rng.standard_normal(DIM)
            self.assertAlmostEqual(float(np.sum(moreau_elementwise(h, 0.4, y))), moreau_value(h, 0.4, y))

    def test_value_below_function(self):
        rng = np.random.default_rng(3)
        for h, mu_max in catalog():
            for _ in range(100):
                y = 3.0 * rng.standard_normal(DIM)
                self.assertLessEqual(moreau_value(h, rng.uniform(0.01, mu_max), y), h.evaluate(y) + SLACK)

    def test_smoothing_too_coarse(self):
        with self.assertRaises(SmoothingTooCoarse):
            moreau_value(mcp(1.0, 2.0, 1), 1.5, [1.0])
        with self.assertRaises(SmoothingTooCoarse):
            moreau_grad(self.abs, 0.0, [1.0])

    def test_zero_function_envelope(self):
        h = zero_prox(3)
        self.assertEqual(moreau_value(h, 10.0, [1.0, 2.0, 3.0]), 0.0)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        step = 1e-6
        for h, mu_max in catalog():
            for _ in range(20):
                mu = rng.uniform(0.1, mu_max)
                y = 3.0 * rng.standard_normal(DIM)
                v = rng.standard_normal(DIM)
                v /= np.linalg.norm(v)
                numeric = (moreau_value(h, mu, y + step * v) - moreau_value(h, mu, y - step * v)) / (2 * step)
                grad = moreau_grad(h, mu, y)
                self.assertLessEqual(abs(numeric - float(grad @ v)), 1e-5 * max(1.0, np.linalg.norm(grad)))

    def test_gradient_bound(self):
        rng = np.random.default_rng(5)
        for h, mu_max in catalog():
            for _ in range(200):
                grad = moreau_grad(h, rng.uniform(0.01, mu_max), 10.0 * rng.standard_normal(DIM))
                self.assertLessEqual(np.linalg.norm(grad), h.lipschitz + SLACK)

    def test_envelope_monotone_in_mu(self):
        rng = np.random.default_rng(6)
        for h, mu_max in catalog():
            c_sq = h.lipschitz ** 2
            for _ in range(1000):
                mu2, mu1 = np.sort(rng.uniform(1e-3, mu_max, size=2))
                y = 3.0 * rng.standard_normal(DIM)
                gap = moreau_value(h, mu2, y) - moreau_value(h, mu1, y)
                bound = min(mu1 / (2 * mu2), 1.0) * (mu1 - mu2) * c_sq
                self.assertGreaterEqual(gap, -SLACK)
                self.assertLessEqual(gap, bound + SLACK)

    def test_gradient_drift_in_mu(self):
        rng = np.random.default_rng(7)
        for h, mu_max in catalog():
            for _ in range(1000):
                mu2, mu1 = np.sort(rng.uniform(1e-3, mu_max, size=2))
                y = 3.0 * rng.standard_normal(DIM)
                drift = np.linalg.norm(moreau_grad(h, mu1, y) - moreau_grad(h, mu2, y))
                self.assertLessEqual(drift, (mu1 / mu2 - 1.0) * h.lipschitz + SLACK)

    def test_gradient_is_inverse_mu_lipschitz(self):
        rng = np.random.default_rng(8)
        for h, mu_max in catalog():
            for _ in range(500):
                mu = rng.uniform(1e-2, mu_max)
                y, y2 = 3.0 * rng.standard_normal((2, DIM))
                drift = np.linalg.norm(moreau_grad(h, mu, y) - moreau_grad(h, mu, y2))
                self.assertLessEqual(drift, np.linalg.norm(y - y2) / mu + SLACK)


def scalar_minimizer(h, mu, beta, b):
    """Coordinate minimizer of h_mu(y) + beta/2 (y - b)^2 via grid bracketing and bisection."""
    radius = h.weight / beta + 1e-3
    grid = np.arange(b - radius, b + radius + 1e-4, 1e-4)

    def slope(y):
        return float(moreau_grad(h, mu, [y])[0]) + beta * (y - b)

    slopes = moreau_grad(h, mu, grid) + beta * (grid - b)
    crossing = int(np.flatnonzero(slopes >= 0)[0])
    if crossing == 0:
        return grid[0]
    return optimize.brentq(slope, grid[crossing - 1], grid[crossing], xtol=1e-13)


class CoupledSubproblemTests(SimpleTestCase):
    def test_worked_example(self):
        y_bar, y_breve = y_subproblem(l1_norm(1.0, 1), 0.1, 20.0, [1.0])
        np.testing.assert_allclose(y_breve, [0.85])
        np.testing.assert_allclose(y_bar, [0.95])

    def test_zero_input(self):
        for h, _ in catalog():
            y_bar, y_breve = y_subproblem(h, 0.5, 5.0, np.zeros(DIM))
            np.testing.assert_array_equal(y_bar, np.zeros(DIM))
            np.testing.assert_array_equal(y_breve, np.zeros(DIM))

    def test_beta_too_small(self):
        with self.assertRaises(BetaTooSmall):
            y_subproblem(l1_norm(1.0, 1), 0.1, 10.0, [1.0])

    def test_matches_coordinate_minimization(self):
        rng = np.random.default_rng(9)
        for h, mu_max in catalog():
            for _ in range(200):
                mu = rng.uniform(0.05, mu_max)
                beta = (1.0 + rng.uniform(0.01, 5.0)) / mu
                b = 2.0 * rng.standard_normal(3)
                y_bar, _ = y_subproblem(h, mu, beta, b)
                expected = [scalar_minimizer(h, mu, beta, value) for value in b]
                np.testing.assert_allclose(y_bar, expected, atol=1e-6)

    def test_multiplier_is_a_subgradient(self):
        rng = np.random.default_rng(10)
        for h, mu_max in catalog():
            for _ in range(500):
                mu = rng.uniform(0.01, mu_max)
                beta = (1.0 + rng.uniform(0.01, 20.0)) / mu
                b = 2.0 * rng.standard_normal(DIM)
                y_bar, y_breve = y_subproblem(h, mu, beta, b)
                self.assertLessEqual(h.subdiff_dist(y_breve, beta * (b - y_bar)), 1e-8)
                self.assertLessEqual(np.linalg.norm(y_bar - y_breve), mu * h.lipschitz + SLACK)

    def test_first_order_optimality(self):
        rng = np.random.default_rng(11)
        for h, mu_max in catalog():
            for _ in range(200):
                mu = rng.uniform(0.01, mu_max)
                beta = (1.0 + rng.uniform(0.01, 20.0)) / mu
                b = 2.0 * rng.standard_normal(DIM)
                y_bar, _ = y_subproblem(h, mu, beta, b)
                residual = moreau_grad(h, mu, y_bar) + beta * (y_bar - b)
                self.assertLessEqual(np.linalg.norm(residual), 1e-8 * max(1.0, beta))
