from dataclasses import replace
import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, override_settings, tag

from diagnostics.trace import ergodic_at, min_crit
from problem.composite import null_problem
from problem.datasets import load_or_synthesize_data
from problem.sparse_pca import make_sparse_pca
from proxcore.envelope import moreau_grad, moreau_value
from proxcore.functions import mcp
from stiefel.manifold import StiefelPoint, descent_direction, project_to_stiefel, random_point

from .config import SolverConfig, extrapolation_limit
from .exceptions import ConfigInvalid, LineSearchStalled
from .solver import solve
from .state import SolverState
from .updates import (
    MAX_BACKTRACKS,
    bb_step,
    penalty_at,
    projected_step,
    rounding_slack,
    smoothed_lagrangian,
    x_gradient,
    x_update_ep,
    x_update_rr,
    y_update,
    z_update,
)


def desk_instance(descriptor, r, rho_dot, seed=42):
    D = load_or_synthesize_data(descriptor)
    prob = make_sparse_pca(D, rho_dot, r=r)
    rng = np.random.default_rng(seed)
    X0 = project_to_stiefel(rng.standard_normal((prob.n, r)))
    return prob, X0


def state_for(prob, cfg, X, rng=None, scale=0.0):
    y = prob.A.apply(X.data)
    z = np.zeros(prob.m)
    if rng is not None:
        y = y + scale * rng.standard_normal(prob.m)
        z = scale * rng.standard_normal(prob.m)
    return SolverState.initial(X, y, z, penalty_at(cfg, 0), cfg.tau)


class PenaltyScheduleTests(SimpleTestCase):
    def test_worked_value(self):
        cfg = SolverConfig(beta0=100.0, xi=1.0, p=1.0 / 3.0)
        self.assertAlmostEqual(penalty_at(cfg, 8), 300.0)
        self.assertEqual(penalty_at(cfg, 0), 100.0)

    def test_growth_ratio_bounded(self):
        cfg = SolverConfig(beta0=7.0, xi=0.6, p=0.4)
        previous = penalty_at(cfg, 1)
        for t in range(2, 10_001):
            current = penalty_at(cfg, t)
            self.assertGreaterEqual(current, previous)
            self.assertLessEqual(current / previous, 1.0 + cfg.xi + 1e-15)
            previous = current

    def test_fixed_penalty(self):
        cfg = SolverConfig(variant='RR', xi=0.0, sigma=1.0, tau=4.0, fixed_penalty=True)
        self.assertEqual({penalty_at(cfg, t) for t in range(50)}, {cfg.beta0})


class SolverConfigTests(SimpleTestCase):
    def test_defaults(self):
        cfg = SolverConfig.defaults(50.0)
        self.assertEqual(cfg.beta0, 500.0)
        self.assertAlmostEqual(cfg.tau, 4.0 / 0.9)
        self.assertAlmostEqual(cfg.alpha, extrapolation_limit(1.01, 1.0) - 1e-12)
        self.assertEqual(SolverConfig.defaults(50.0, variant='RR').alpha, 0.0)
        self.assertEqual((cfg.p, cfg.theta, cfg.sigma, cfg.rho, cfg.gamma, cfg.delta, cfg.xi),
                         (1.0 / 3.0, 1.01, 1.1, 1.0, 0.5, 1e-3, 1.0))

    def test_rejections(self):
        bad = [
            dict(sigma=2.0),
            dict(tau=3.0),
            dict(theta=1.0),
            dict(alpha=0.01),
            dict(variant='RR', alpha=0.001),
            dict(delta=0.5),
            dict(gamma=1.0),
            dict(xi=0.0),
            dict(p=1.0),
            dict(bb_mode='bb3'),
            dict(bb_lo=2.0, bb_hi=1.0),
            dict(variant='XX'),
            dict(fixed_penalty=True, xi=0.5),
        ]
        for overrides in bad:
            with self.subTest(overrides=overrides), self.assertRaises(ConfigInvalid):
                SolverConfig(**overrides)

    def test_error_names_the_field(self):
        with self.assertRaises(ConfigInvalid) as caught:
            SolverConfig(sigma=2.5)
        self.assertIn('sigma', caught.exception.details)

    def test_beta0_against_weak_convexity(self):
        prob, _ = desk_instance('randn-20-6:seed=1', 2, 1.0)
        prob = replace(prob, h=mcp(1.0, 0.01, prob.m))
        with self.assertRaises(ConfigInvalid):
            SolverConfig.defaults(1.0).check_against(prob)


class LagrangianTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(31)
        self.prob, self.X = desk_instance('randn-30-8:seed=3', 2, 0.5)
        self.cfg = SolverConfig.defaults(0.5)

    def test_null_parts_reduce_to_f(self):
        prob = null_problem(4, 2)
        X = random_point(4, 2, self.rng)
        self.assertEqual(smoothed_lagrangian(prob, X, prob.A(X.data), np.zeros(8), 5.0, 4.5), 0.0)

    def test_recomposition(self):
        x = self.X.data
        y = self.rng.standard_normal(self.prob.m)
        z = self.rng.standard_normal(self.prob.m)
        beta, tau = 7.0, 4.5
        residual = x.reshape(-1) - y
        expected = (self.prob.f.value(x) + z @ residual + 0.5 * beta * residual @ residual
                    - self.prob.g.evaluate(x) + moreau_value(self.prob.h, tau / beta, y))
        self.assertAlmostEqual(smoothed_lagrangian(self.prob, self.X, y, z, beta, tau), expected, places=10)

    def test_y_minimizer_decreases_value(self):
        state = state_for(self.prob, self.cfg, self.X, self.rng, scale=0.3)
        y_bar, _ = y_update(self.prob, state, self.X)
        before = smoothed_lagrangian(self.prob, self.X, state.y, state.z, state.beta, state.tau)
        after = smoothed_lagrangian(self.prob, self.X, y_bar, state.z, state.beta, state.tau)
        self.assertLessEqual(after, before + 1e-12)


class XUpdateTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(32)

    def test_projected_step_on_sphere(self):
        X_next = projected_step(np.array([[1.0], [0.0]]), np.array([[0.0], [4.0]]), 8.0)
        np.testing.assert_allclose(X_next.data, np.array([[2.0], [-1.0]]) / math.sqrt(5.0), atol=1e-12)

    def test_zero_gradient_keeps_iterate(self):
        prob = null_problem(5, 2)
        cfg = SolverConfig(alpha=0.0, debug_checks=True)
        X = random_point(5, 2, self.rng)
        X_next, G = x_update_ep(prob, state_for(prob, cfg, X), cfg)
        np.testing.assert_array_equal(G, np.zeros((5, 2)))
        np.testing.assert_allclose(X_next.data, X.data, atol=1e-12)

    def test_ep_step_is_feasible(self):
        prob, X = desk_instance('randn-30-8:seed=4', 3, 0.5)
        cfg = SolverConfig.defaults(0.5, debug_checks=True)
        state = state_for(prob, cfg, X, self.rng, scale=0.2)
        for _ in range(20):
            X_next, _ = x_update_ep(prob, state, cfg)
            self.assertIsInstance(X_next, StiefelPoint)
            state.X_prev, state.X = state.X, X_next

    def test_rr_stationary_point(self):
        prob = null_problem(5, 2)
        cfg = SolverConfig.defaults(1.0, variant='RR')
        X = random_point(5, 2, self.rng)
        X_next, eta, backtracks, _ = x_update_rr(prob, state_for(prob, cfg, X), cfg)
        self.assertIs(X_next, X)
        self.assertEqual(backtracks, 0)
        self.assertEqual(eta, cfg.bb_value / cfg.beta0)

    def test_rr_sufficient_decrease(self):
        prob, X = desk_instance('randn-30-8:seed=5', 3, 0.5)
        cfg = SolverConfig.defaults(0.5, variant='RR')
        state = state_for(prob, cfg, X, self.rng, scale=0.2)
        before = smoothed_lagrangian(prob, X, state.y, state.z, state.beta, state.tau)
        X_next, eta, backtracks, _ = x_update_rr(prob, state, cfg)
        after = smoothed_lagrangian(prob, X_next, state.y, state.z, state.beta, state.tau)
        self.assertLessEqual(after, before)
        self.assertAlmostEqual(eta, cfg.bb_value * cfg.gamma ** backtracks / state.beta)

    def rr_state(self):
        prob, X = desk_instance('randn-30-8:seed=5', 3, 0.5)
        cfg = SolverConfig.defaults(0.5, variant='RR')
        return prob, cfg, state_for(prob, cfg, X, self.rng, scale=0.2)

    def test_rounding_slack(self):
        self.assertEqual(rounding_slack(0.0), rounding_slack(-1.0))
        self.assertGreater(rounding_slack(964.0), 1e-12)
        self.assertLess(rounding_slack(964.0), 1e-11)

    def test_rr_accepts_change_at_rounding_level(self):
        prob, cfg, state = self.rr_state()
        direction = descent_direction(state.X, x_gradient(prob, state, state.X.data), cfg.rho)
        eta = cfg.bb_value / state.beta
        required = cfg.delta * eta * float(np.sum(direction ** 2))
        current = 964.0
        # Short of the Armijo decrease by less than the rounding noise of L.
        values = [current, current - required + 0.5 * rounding_slack(current)]
        with mock.patch('oadmm.updates.smoothed_lagrangian', side_effect=values):
            _, accepted_eta, backtracks, _ = x_update_rr(prob, state, cfg)
        self.assertEqual(backtracks, 0)
        self.assertEqual(accepted_eta, eta)

    def test_rr_backtracks_on_real_increase(self):
        prob, cfg, state = self.rr_state()
        with mock.patch('oadmm.updates.smoothed_lagrangian', side_effect=[1.0, 1.5, 1.5, 0.5]):
            _, _, backtracks, _ = x_update_rr(prob, state, cfg)
        self.assertEqual(backtracks, 2)

    def test_rr_stalls_without_decrease(self):
        prob, cfg, state = self.rr_state()
        values = [1.0] + [1.001] * (MAX_BACKTRACKS + 1)
        with mock.patch('oadmm.updates.smoothed_lagrangian', side_effect=values), \
                self.assertRaises(LineSearchStalled):
            x_update_rr(prob, state, cfg)


class DualUpdateTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(33)

    def test_zero_multiplier_pure_quadratic(self):
        prob = null_problem(4, 2)
        cfg = SolverConfig()
        X = random_point(4, 2, self.rng)
        state = state_for(prob, cfg, random_point(4, 2, self.rng))
        y_bar, y_breve = y_update(prob, state, X)
        np.testing.assert_allclose(y_bar, X.data.reshape(-1))
        np.testing.assert_allclose(y_breve, X.data.reshape(-1))

    def test_y_stationarity(self):
        prob, X = desk_instance('randn-30-8:seed=6', 2, 0.8)
        cfg = SolverConfig.defaults(0.8)
        for _ in range(20):
            state = state_for(prob, cfg, X, self.rng, scale=0.5)
            y_bar, _ = y_update(prob, state, X)
            b = prob.A.apply(X.data) + state.z / state.beta
            residual = moreau_grad(prob.h, state.mu, y_bar) + state.beta * (y_bar - b)
            self.assertLessEqual(np.linalg.norm(residual), 1e-8 * state.beta)

    def test_scalar_z_update(self):
        prob = null_problem(1, 1)
        X = StiefelPoint(np.array([[1.0]]))
        np.testing.assert_allclose(z_update(prob, np.zeros(1), X, np.array([0.8]), 1.1, 10.0), [2.2])
        np.testing.assert_array_equal(z_update(prob, np.array([3.0]), X, np.array([1.0]), 1.1, 10.0), [3.0])


class BarzilaiBorweinTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(34)
        self.X, self.X_prev = rng.standard_normal((2, 4, 2))

    def test_fixed(self):
        self.assertEqual(bb_step(self.X, self.X_prev, None, None, 'fixed', (1e-3, 1e3), 1.0), 1.0)

    def test_unit_ratio(self):
        S = self.X - self.X_prev
        G1_prev = np.ones((4, 2))
        G1 = G1_prev - S
        self.assertAlmostEqual(bb_step(self.X, self.X_prev, G1, G1_prev, 'bb1', (1e-3, 1e3)), 1.0)
        self.assertAlmostEqual(bb_step(self.X, self.X_prev, G1, G1_prev, 'bb2', (1e-3, 1e3)), 1.0)

    def test_negative_curvature_falls_back(self):
        S = self.X - self.X_prev
        G1_prev = np.zeros((4, 2))
        for mode in ('bb1', 'bb2'):
            self.assertEqual(bb_step(self.X, self.X_prev, S, G1_prev, mode, (1e-3, 1e3)), 1e-3)

    def test_clamp(self):
        S = self.X - self.X_prev
        G1_prev = np.zeros((4, 2))
        self.assertEqual(bb_step(self.X, self.X_prev, -1e-6 * S, G1_prev, 'bb1', (1e-3, 5.0)), 5.0)


def assert_solver_invariants(case, prob, cfg, traces, state):
    z_bound = state.z0_norm + cfg.sigma * prob.h.lipschitz / (2.0 - cfg.sigma)
    case.assertLessEqual(np.linalg.norm(state.z), z_bound)
    thetas = [trace.theta for trace in traces if trace.t >= 1]
    for trace in traces:
        case.assertLessEqual(trace.feasibility, 1e-10)
        case.assertTrue(trace.is_finite())
    for previous, current in zip(thetas, thetas[1:]):
        case.assertLessEqual(current, previous + 1e-9 * (1.0 + abs(previous)))


@override_settings(OADMM_DEBUG_CHECKS=True)
class SolveTests(SimpleTestCase):
    def test_null_problem_stays_put(self):
        prob = null_problem(6, 2)
        X0 = random_point(6, 2, np.random.default_rng(35))
        for variant in ('EP', 'RR'):
            result = solve(prob, SolverConfig.defaults(1.0, variant=variant, max_iters=25), X0)
            np.testing.assert_allclose(result.state.X.data, X0.data, atol=1e-12)
            self.assertEqual(result.traces[-1].objective, 0.0)

    def test_small_instance_invariants(self):
        prob, X0 = desk_instance('randn-40-12:seed=7', 3, 1.0)
        for variant in ('EP', 'RR'):
            cfg = SolverConfig.defaults(1.0, variant=variant, max_iters=300)
            result = solve(prob, cfg, X0)
            self.assertEqual(len(result.traces), 301)
            self.assertEqual([trace.t for trace in result.traces], list(range(301)))
            assert_solver_invariants(self, prob, cfg, result.traces, result.state)
            self.assertLess(result.traces[-1].objective, result.traces[0].objective)

    def test_deterministic(self):
        prob, X0 = desk_instance('randn-40-12:seed=8', 3, 1.0)
        for variant in ('EP', 'RR'):
            cfg = SolverConfig.defaults(1.0, variant=variant, max_iters=60)
            first = solve(prob, cfg, X0, record_time=False)
            second = solve(prob, cfg, X0, record_time=False)
            self.assertEqual(first.traces, second.traces)
            self.assertIsNone(first.traces[-1].elapsed_seconds)

    def test_bb_modes_run(self):
        prob, X0 = desk_instance('randn-40-12:seed=9', 3, 1.0)
        for mode in ('bb1', 'bb2'):
            cfg = SolverConfig.defaults(1.0, variant='RR', bb_mode=mode, max_iters=40)
            result = solve(prob, cfg, X0)
            assert_solver_invariants(self, prob, cfg, result.traces, result.state)

    def test_stops_on_criticality(self):
        prob = null_problem(6, 2)
        X0 = random_point(6, 2, np.random.default_rng(36))
        result = solve(prob, SolverConfig.defaults(1.0, max_iters=50, crit_tol=1e-6), X0)
        self.assertEqual(result.stopped_by, 'crit_tol')
        self.assertEqual(result.state.t, 1)

    def test_rejects_misshapen_starting_vectors(self):
        prob = null_problem(3, 1)
        with self.assertRaises(ConfigInvalid):
            solve(prob, SolverConfig(), random_point(3, 1, np.random.default_rng(1)), y0=np.zeros(2))

    @override_settings(OADMM_TRACE_FULL_UNTIL=20, OADMM_TRACE_STRIDE=7)
    def test_trace_cadence(self):
        prob, X0 = desk_instance('randn-40-12:seed=10', 3, 1.0)
        result = solve(prob, SolverConfig.defaults(1.0, max_iters=50), X0)
        self.assertEqual([trace.t for trace in result.traces],
                         list(range(21)) + [21, 28, 35, 42, 49, 50])

    def test_ergodic_average_covers_thinned_iterations(self):
        prob, X0 = desk_instance('randn-40-12:seed=10', 3, 1.0)
        cfg = SolverConfig.defaults(1.0, max_iters=50)
        full = solve(prob, cfg, X0).traces
        with override_settings(OADMM_TRACE_FULL_UNTIL=20, OADMM_TRACE_STRIDE=7):
            thinned = solve(prob, cfg, X0).traces
        expected = np.mean([trace.crit for trace in full if 1 <= trace.t <= 49])
        np.testing.assert_allclose(ergodic_at(thinned, 49), expected, rtol=1e-12)
        np.testing.assert_allclose(ergodic_at(thinned, 49), ergodic_at(full, 49), rtol=1e-12)


@tag('slow')
@override_settings(OADMM_DEBUG_CHECKS=True)
class DeskScaleTests(SimpleTestCase):
    """Sparse PCA on randn-200-50, r=10, rho=50 with default parameters."""

    def run_variant(self, variant):
        prob, X0 = desk_instance('randn-200-50:seed=42', 10, 50.0)
        cfg = SolverConfig.defaults(50.0, variant=variant, max_iters=2000)
        return prob, cfg, solve(prob, cfg, X0)

    def test_invariants_and_trend(self):
        for variant in ('EP', 'RR'):
            with self.subTest(variant=variant):
                prob, cfg, result = self.run_variant(variant)
                assert_solver_invariants(self, prob, cfg, result.traces, result.state)
                self.assertLess(ergodic_at(result.traces, 2000), ergodic_at(result.traces, 256))
                at_50 = next(trace.crit for trace in result.traces if trace.t == 50)
                self.assertLessEqual(min_crit(result.traces), 0.5 * at_50)
