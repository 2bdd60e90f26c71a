from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, override_settings, tag

from oadmm.config import SolverConfig
from oadmm.exceptions import ConfigInvalid
from oadmm.solver import solve
from oadmm.updates import penalty_at
from problem.composite import null_problem
from problem.datasets import load_or_synthesize_data
from problem.sparse_pca import make_sparse_pca
from proxcore.functions import mcp, zero_prox
from stiefel.manifold import project_to_stiefel, random_point

from .config import BaselineConfig, radmm_configs
from .solvers import fixed_beta_admm_solve, spgm_ep_solve, subgrad_solve, subgradient_element


def pca_instance(descriptor, r, rho_dot, seed=42):
    prob = make_sparse_pca(load_or_synthesize_data(descriptor), rho_dot, r=r)
    X0 = project_to_stiefel(np.random.default_rng(seed).standard_normal((prob.n, r)))
    return prob, X0


class BaselineConfigTests(SimpleTestCase):
    def test_rejections(self):
        for overrides in (dict(kind='manpg'), dict(kind='subgrad', step0=0.0),
                          dict(kind='fixed-beta-admm', beta=-1.0),
                          dict(kind='fixed-beta-admm', tau=3.9),
                          dict(kind='spgm-ep', mu0=0.0), dict(kind='spgm-ep', mu_exponent=1.5),
                          dict(kind='subgrad', max_iters=-1)):
            with self.subTest(overrides=overrides), self.assertRaises(ConfigInvalid):
                BaselineConfig(**overrides)

    def test_defaults_scale_with_rho(self):
        self.assertAlmostEqual(BaselineConfig.defaults('spgm-ep', 50.0).mu0, SolverConfig.defaults(50.0).mu0)

    def test_presets(self):
        presets = radmm_configs(max_iters=20)
        self.assertEqual(sorted(presets), ['radmm-100', 'radmm-10000'])
        self.assertEqual(presets['radmm-10000'].beta, 10_000.0)

    def test_penalty_is_constant(self):
        cfg = BaselineConfig(kind='fixed-beta-admm', beta=250.0).solver_config()
        self.assertEqual({penalty_at(cfg, t) for t in range(100)}, {250.0})

    def test_wrong_kind(self):
        prob = null_problem(3, 1)
        X0 = random_point(3, 1, np.random.default_rng(0))
        with self.assertRaises(ConfigInvalid):
            subgrad_solve(prob, BaselineConfig(kind='spgm-ep'), X0)


class SubgradTests(SimpleTestCase):
    def test_null_problem_stays_put(self):
        prob = null_problem(6, 2)
        X0 = random_point(6, 2, np.random.default_rng(40))
        result = subgrad_solve(prob, BaselineConfig(kind='subgrad', max_iters=30), X0)
        np.testing.assert_allclose(result.X.data, X0.data, atol=1e-12)
        self.assertEqual(len(result.traces), 31)

    def test_feasible_and_decreasing_step(self):
        prob, X0 = pca_instance('randn-40-12:seed=41', 3, 1.0)
        result = subgrad_solve(prob, BaselineConfig(kind='subgrad', max_iters=100), X0)
        steps = [trace.step_eta for trace in result.traces[1:]]
        self.assertEqual(steps, sorted(steps, reverse=True))
        self.assertAlmostEqual(steps[3], steps[0] / 2.0)
        for trace in result.traces:
            self.assertLessEqual(trace.feasibility, 1e-10)
            self.assertIsNone(trace.crit)

    def test_subgradient_element(self):
        prob, X0 = pca_instance('randn-40-12:seed=42', 3, 1.0)
        x = X0.data
        expected = prob.f.gradient(x) - prob.g.subgradient(x) + np.sign(x)
        np.testing.assert_allclose(subgradient_element(prob, X0), expected)


@override_settings(OADMM_DEBUG_CHECKS=True)
class FixedBetaADMMTests(SimpleTestCase):
    def test_matches_degenerate_admm_loop(self):
        prob, X0 = pca_instance('randn-40-12:seed=43', 3, 1.0)
        cfg = BaselineConfig(kind='fixed-beta-admm', beta=100.0, max_iters=80)
        baseline = fixed_beta_admm_solve(prob, cfg, X0, record_time=False)
        direct = solve(prob, cfg.solver_config(), X0, record_time=False)
        self.assertEqual(baseline.traces, direct.traces)
        np.testing.assert_array_equal(baseline.X.data, direct.state.X.data)

    def test_dual_bound_with_unit_relaxation(self):
        prob, X0 = pca_instance('randn-40-12:seed=44', 3, 1.0)
        for name, cfg in radmm_configs(max_iters=60).items():
            with self.subTest(preset=name):
                result = solve(prob, cfg.solver_config(), X0)
                self.assertLessEqual(np.linalg.norm(result.state.z), prob.h.lipschitz + 1e-12)
                self.assertEqual({trace.beta for trace in result.traces}, {cfg.beta})


class SmoothingProximalGradientTests(SimpleTestCase):
    def test_y_step_without_h(self):
        prob, X0 = pca_instance('randn-40-12:seed=45', 3, 1.0)
        prob = replace(prob, h=zero_prox(prob.m))
        result = spgm_ep_solve(prob, BaselineConfig.defaults('spgm-ep', 1.0, max_iters=15), X0)
        np.testing.assert_array_equal(result.y, prob.A.apply(result.X.data))
        self.assertEqual(result.traces[-1].primal_residual, 0.0)

    def test_feasible_with_shrinking_smoothing(self):
        prob, X0 = pca_instance('randn-40-12:seed=46', 3, 1.0)
        result = spgm_ep_solve(prob, BaselineConfig.defaults('spgm-ep', 1.0, max_iters=50), X0)
        steps = [trace.step_eta for trace in result.traces[1:]]
        self.assertEqual(steps, sorted(steps, reverse=True))
        for trace in result.traces:
            self.assertLessEqual(trace.feasibility, 1e-10)

    def test_rejects_coarse_smoothing(self):
        prob, X0 = pca_instance('randn-40-12:seed=47', 3, 1.0)
        prob = replace(prob, h=mcp(1.0, 0.5, prob.m))
        with self.assertRaises(ConfigInvalid):
            spgm_ep_solve(prob, BaselineConfig(kind='spgm-ep', mu0=1.0), X0)


@tag('slow')
class DeskComparisonTests(SimpleTestCase):
    """Final objectives after 2000 iterations at r=10."""

    DATASETS = ('randn-200-50:seed=42', 'randn-400-100:seed=42')

    def test_admm_variants_beat_subgradient(self):
        for descriptor in self.DATASETS:
            for rho_dot in (50.0, 500.0):
                with self.subTest(dataset=descriptor, rho_dot=rho_dot):
                    prob, X0 = pca_instance(descriptor, 10, rho_dot)
                    ep = solve(prob, SolverConfig.defaults(rho_dot, max_iters=2000), X0)
                    rr = solve(prob, SolverConfig.defaults(rho_dot, variant='RR', max_iters=2000), X0)
                    sub = subgrad_solve(prob, BaselineConfig(kind='subgrad', max_iters=2000), X0)
                    f_ep, f_rr = ep.traces[-1].objective, rr.traces[-1].objective
                    self.assertLessEqual(max(f_ep, f_rr), sub.traces[-1].objective)
                    if rho_dot == 50.0:
                        self.assertLessEqual(f_ep, 1.05 * f_rr)

    def test_fixed_penalty_presets_run_to_completion(self):
        for descriptor in self.DATASETS:
            prob, X0 = pca_instance(descriptor, 10, 50.0)
            for name, cfg in radmm_configs(max_iters=2000, seed=42).items():
                with self.subTest(dataset=descriptor, preset=name):
                    result = fixed_beta_admm_solve(prob, cfg, X0)
                    self.assertIn(result.stopped_by, ('max_iters', 'crit_tol'))
                    self.assertTrue(np.isfinite(result.traces[-1].objective))
