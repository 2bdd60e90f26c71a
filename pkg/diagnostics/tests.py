from dataclasses import replace
import math

import numpy as np
from django.test import SimpleTestCase

from oadmm.config import SolverConfig
from oadmm.solver import solve
from oadmm.state import SolverState
from oadmm.updates import smoothed_lagrangian
from problem.composite import null_problem
from problem.datasets import load_or_synthesize_data
from problem.sparse_pca import make_sparse_pca
from proxcore.functions import L1Norm
from stiefel.manifold import project_to_stiefel, random_point

from .criticality import crit, crit_terms
from .exceptions import EmptyTrace, InsufficientHistory, MissingCanonicalElement
from .lyapunov import EPS_BETA, lyapunov, lyapunov_constant, lyapunov_terms
from .trace import (
    TRACE_COLUMNS,
    IterationTrace,
    best_objective,
    ergodic_at,
    ergodic_crit,
    min_crit,
    should_emit,
    trace_to_row,
)


class OpaqueL1(L1Norm):
    has_subdiff_dist = False


def small_pca(seed=11, rho_dot=0.5):
    prob = make_sparse_pca(load_or_synthesize_data(f'randn-30-8:seed={seed}'), rho_dot, r=2)
    X0 = project_to_stiefel(np.random.default_rng(seed).standard_normal((prob.n, 2)))
    return prob, X0


class CriticalityTests(SimpleTestCase):
    def test_zero_at_stationary_triple(self):
        prob = null_problem(5, 2)
        X = random_point(5, 2, np.random.default_rng(12))
        self.assertEqual(crit(prob, X, X.data.reshape(-1), np.zeros(10)), 0.0)

    def test_exact_distance_below_any_subgradient_gap(self):
        prob, X0 = small_pca()
        result = solve(prob, SolverConfig.defaults(0.5, max_iters=5), X0)
        state = result.state
        exact = crit_terms(prob, state.X, state.y_breve, state.z)
        opaque = crit_terms(replace(prob, h=OpaqueL1(0.5, prob.m)), state.X, state.y_breve,
                            state.z, state.multiplier)
        self.assertEqual(exact[0], opaque[0])
        self.assertEqual(exact[2], opaque[2])
        self.assertLessEqual(exact[1], opaque[1] + 1e-12)

    def test_missing_canonical_element(self):
        prob, X0 = small_pca()
        opaque = replace(prob, h=OpaqueL1(0.5, prob.m))
        y = X0.data.reshape(-1)
        with self.assertRaises(MissingCanonicalElement):
            crit(opaque, X0, y, np.zeros(prob.m))
        self.assertGreaterEqual(crit(opaque, X0, y, np.zeros(prob.m), s=np.zeros(prob.m)), 0.0)

    def test_terms_sum_to_crit(self):
        prob, X0 = small_pca()
        rng = np.random.default_rng(13)
        y = rng.standard_normal(prob.m)
        z = rng.standard_normal(prob.m)
        self.assertAlmostEqual(crit(prob, X0, y, z), sum(crit_terms(prob, X0, y, z)), places=12)


class LyapunovTests(SimpleTestCase):
    def test_constant(self):
        prob, _ = small_pca(rho_dot=0.5)
        cfg = SolverConfig.defaults(0.5)
        c_h_sq = 0.25 * prob.m
        expected = (EPS_BETA + cfg.tau * c_h_sq
                    + 24.0 * cfg.sigma * c_h_sq / (cfg.p * (2.0 - cfg.sigma) ** 2))
        self.assertAlmostEqual(lyapunov_constant(prob, cfg), expected)

    def test_collapses_without_momentum_or_relaxation(self):
        prob, X0 = small_pca()
        cfg = SolverConfig(variant='RR', sigma=1.0, tau=4.0, beta0=5.0, max_iters=10)
        state = solve(prob, cfg, X0).state
        terms = lyapunov_terms(prob, state, cfg)
        self.assertEqual(terms.momentum, 0.0)
        self.assertEqual(terms.dual_history, 0.0)
        expected = (smoothed_lagrangian(prob, state.X, state.y, state.z, state.beta, state.tau)
                    + lyapunov_constant(prob, cfg) / state.beta)
        self.assertAlmostEqual(lyapunov(prob, state, cfg), expected, places=9)

    def test_terms_recompose(self):
        prob, X0 = small_pca()
        cfg = SolverConfig.defaults(0.5, max_iters=10)
        state = solve(prob, cfg, X0).state
        terms = lyapunov_terms(prob, state, cfg)
        self.assertGreater(terms.momentum, 0.0)
        self.assertAlmostEqual(terms.total, terms.lagrangian + terms.penalty_decay
                               + terms.momentum + terms.dual_history)

    def test_needs_one_iteration(self):
        prob, X0 = small_pca()
        cfg = SolverConfig.defaults(0.5)
        state = SolverState.initial(X0, X0.data.reshape(-1), np.zeros(prob.m), cfg.beta0, cfg.tau)
        with self.assertRaises(InsufficientHistory):
            lyapunov(prob, state, cfg)


class TraceTests(SimpleTestCase):
    def setUp(self):
        self.traces = [
            IterationTrace(t=0, objective=5.0, crit=9.0),
            IterationTrace(t=1, objective=3.0, crit=4.0),
            IterationTrace(t=2, objective=1.0, crit=2.0),
            IterationTrace(t=3, objective=2.0, crit=0.0),
        ]

    def test_ergodic_average_skips_first_row(self):
        self.assertEqual(ergodic_crit(self.traces), [(1, 4.0), (2, 3.0), (3, 2.0)])
        self.assertEqual(ergodic_at(self.traces, 2), 3.0)
        self.assertEqual(ergodic_at(self.traces, 100), 2.0)

    def test_ergodic_prefers_solver_running_mean(self):
        traces = self.traces + [IterationTrace(t=10, objective=1.0, crit=1.0, crit_mean=2.5)]
        self.assertEqual(ergodic_crit(traces)[-1], (10, 2.5))
        self.assertEqual(ergodic_at(traces, 9), 2.0)

    def test_ergodic_requires_rows(self):
        with self.assertRaises(EmptyTrace):
            ergodic_crit(self.traces[:1])
        with self.assertRaises(EmptyTrace):
            ergodic_at(self.traces, 0)

    def test_best_and_min(self):
        self.assertEqual(best_objective(self.traces), 1.0)
        self.assertEqual(min_crit(self.traces), 0.0)
        with self.assertRaises(EmptyTrace):
            best_objective([])
        with self.assertRaises(EmptyTrace):
            min_crit([IterationTrace(t=0, objective=1.0)])

    def test_row_mapping(self):
        row = trace_to_row(IterationTrace(t=4, objective=1.5, crit=0.2, step_eta=0.01, backtracks=2))
        self.assertEqual(tuple(row), TRACE_COLUMNS)
        self.assertEqual((row['eta'], row['backtracks'], row['theta']), (0.01, 2, None))

    def test_emit_cadence(self):
        self.assertTrue(should_emit(10_000))
        self.assertFalse(should_emit(10_001))
        self.assertTrue(should_emit(10_010))
        self.assertTrue(should_emit(7, full_until=5, stride=7))

    def test_finiteness(self):
        self.assertTrue(self.traces[0].is_finite())
        self.assertFalse(IterationTrace(t=1, objective=math.nan).is_finite())
