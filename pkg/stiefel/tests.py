import numpy as np
from django.test import SimpleTestCase

from .exceptions import InvalidParameter, NotOnManifold, RankDeficient, ShapeMismatch
from .manifold import (
    StiefelPoint,
    TangentVector,
    descent_direction,
    feasibility,
    polar_retraction,
    project_to_stiefel,
    qr_retraction,
    random_point,
    random_tangent,
    stationarity_residual,
    tangent_project,
)

SLACK = 1e-9


def column(*values):
    return np.array(values, dtype=float).reshape(-1, 1)


class StiefelPointTests(SimpleTestCase):
    def test_rejects_wide_matrix(self):
        with self.assertRaises(ShapeMismatch):
            StiefelPoint(np.ones((1, 2)))

    def test_rejects_infeasible_matrix(self):
        with self.assertRaises(NotOnManifold):
            StiefelPoint(column(1.0, 1.0))

    def test_data_is_read_only(self):
        X = StiefelPoint(column(1.0, 0.0))
        with self.assertRaises(ValueError):
            X.data[0, 0] = 2.0

    def test_tangent_vector_checks_tangency(self):
        X = StiefelPoint(column(1.0, 0.0))
        TangentVector(column(0.0, 3.0), X)
        with self.assertRaises(NotOnManifold):
            TangentVector(column(1.0, 0.0), X)


class ProjectionTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_diagonal_matrix(self):
        X = project_to_stiefel(np.diag([2.0, -3.0]))
        np.testing.assert_allclose(X.data, np.diag([1.0, -1.0]), atol=1e-12)

    def test_point_on_manifold_is_fixed(self):
        X = random_point(6, 3, self.rng)
        np.testing.assert_allclose(project_to_stiefel(X.data).data, X.data, atol=1e-12)

    def test_projection_is_nearest_point(self):
        M = self.rng.standard_normal((6, 3))
        X = project_to_stiefel(M)
        self.assertLessEqual(feasibility(X.data), 1e-10)
        best = np.linalg.norm(M - X.data)
        for _ in range(1000):
            Q = random_point(6, 3, self.rng)
            self.assertLessEqual(best, np.linalg.norm(M - Q.data) + SLACK)

    def test_rank_deficient_input(self):
        M = np.zeros((4, 2))
        M[:, 0] = 1.0
        with self.assertRaises(RankDeficient):
            project_to_stiefel(M)

    def test_wide_input(self):
        with self.assertRaises(ShapeMismatch):
            project_to_stiefel(np.ones((2, 3)))


class TangentProjectionTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_sphere_example(self):
        X = StiefelPoint(column(1.0, 0.0))
        out = tangent_project(X, column(3.0, 4.0))
        np.testing.assert_allclose(out.data, column(0.0, 4.0), atol=1e-12)

    def test_idempotent_on_tangent_input(self):
        X = random_point(8, 3, self.rng)
        delta = random_tangent(X, self.rng)
        np.testing.assert_allclose(tangent_project(X, delta.data).data, delta.data, atol=1e-12)

    def test_non_expansive(self):
        for _ in range(1000):
            X = random_point(8, 3, self.rng)
            delta = self.rng.standard_normal((8, 3))
            out = tangent_project(X, delta)
            self.assertLessEqual(np.linalg.norm(out.data), np.linalg.norm(delta) + SLACK)

    def test_shape_mismatch(self):
        X = random_point(4, 2, self.rng)
        with self.assertRaises(ShapeMismatch):
            tangent_project(X, np.ones((4, 3)))


class RetractionTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(13)

    def test_polar_on_sphere(self):
        X = StiefelPoint(column(1.0, 0.0))
        out = polar_retraction(X, TangentVector(column(0.0, 1.0), X))
        np.testing.assert_allclose(out.data, column(1.0, 1.0) / np.sqrt(2.0), atol=1e-12)

    def test_zero_step_returns_base(self):
        X = random_point(5, 2, self.rng)
        zero = TangentVector(np.zeros((5, 2)), X)
        np.testing.assert_allclose(polar_retraction(X, zero).data, X.data)
        np.testing.assert_allclose(qr_retraction(X, zero).data, X.data, atol=1e-12)

    def test_qr_positive_diagonal_convention(self):
        X = StiefelPoint(np.eye(2))
        out = qr_retraction(X, TangentVector(np.zeros((2, 2)), X))
        np.testing.assert_allclose(out.data, np.eye(2), atol=1e-12)

    def test_qr_feasibility(self):
        for _ in range(200):
            X = random_point(7, 3, self.rng)
            out = qr_retraction(X, random_tangent(X, self.rng, scale=self.rng.uniform(0.1, 3.0)))
            self.assertLessEqual(feasibility(out.data), 1e-10)

    def test_polar_second_order_fit(self):
        X = random_point(6, 2, self.rng)
        delta = random_tangent(X, self.rng, scale=1e-4)
        gap = np.linalg.norm(polar_retraction(X, delta).data - X.data - delta.data)
        self.assertLessEqual(gap, np.linalg.norm(delta.data) ** 2)

    def test_first_order_ratio_shrinks(self):
        X = random_point(6, 2, self.rng)
        direction = random_tangent(X, self.rng)
        ratios = []
        for size in (1e-2, 1e-4):
            delta = TangentVector(direction.data * size, X)
            gap = np.linalg.norm(polar_retraction(X, delta).data - X.data - delta.data)
            ratios.append(gap / size)
        self.assertGreaterEqual(ratios[0], 50.0 * ratios[1])


class DescentDirectionTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(17)

    def test_sphere_example(self):
        X = StiefelPoint(column(1.0, 0.0))
        np.testing.assert_allclose(descent_direction(X, column(3.0, 4.0), 1.0), column(0.0, 4.0))

    def test_normal_direction_annihilated(self):
        X = random_point(5, 2, self.rng)
        for rho in (0.3, 1.0, 2.0):
            np.testing.assert_allclose(descent_direction(X, X.data, rho), 0.0, atol=1e-12)

    def test_rejects_non_positive_rho(self):
        X = random_point(5, 2, self.rng)
        with self.assertRaises(InvalidParameter):
            descent_direction(X, X.data, 0.0)

    def test_inner_product_and_lower_bounds(self):
        for _ in range(1000):
            X = random_point(5, 2, self.rng)
            G = self.rng.standard_normal((5, 2))
            rho = self.rng.uniform(0.05, 3.0)
            g_rho = descent_direction(X, G, rho)
            g_one = descent_direction(X, G, 1.0)
            sq = np.sum(g_rho ** 2)
            scale = 1.0 + sq
            self.assertGreaterEqual(max(1.0, 2.0 * rho) * np.sum(G * g_rho) - sq, -SLACK * scale)
            self.assertGreaterEqual(sq - min(1.0, rho ** 2) * np.sum(g_one ** 2), -SLACK * scale)

    def test_sandwich_against_half(self):
        for _ in range(250):
            X = random_point(5, 2, self.rng)
            G = self.rng.standard_normal((5, 2))
            half = np.linalg.norm(descent_direction(X, G, 0.5))
            for rho in (0.3, 0.5, 1.0, 2.0):
                norm = np.linalg.norm(descent_direction(X, G, rho))
                self.assertLessEqual(min(1.0, 2.0 * rho) * half, norm + SLACK)
                self.assertLessEqual(norm, max(1.0, 2.0 * rho) * half + SLACK)


class StationarityResidualTests(SimpleTestCase):
    def test_normal_gradient(self):
        X = random_point(4, 2, np.random.default_rng(3))
        self.assertAlmostEqual(stationarity_residual(X, X.data), 0.0, places=12)

    def test_tangent_gradient(self):
        X = StiefelPoint(column(1.0, 0.0))
        self.assertAlmostEqual(stationarity_residual(X, column(0.0, 5.0)), 5.0)

    def test_matches_riemannian_gradient(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            X = random_point(6, 3, rng)
            G = rng.standard_normal((6, 3))
            self.assertAlmostEqual(stationarity_residual(X, G),
                                   np.linalg.norm(descent_direction(X, G, 1.0)), places=10)
