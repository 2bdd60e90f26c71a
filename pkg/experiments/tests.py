import csv
from io import StringIO
import json
from pathlib import Path
import tempfile
from unittest import mock

import numpy as np
from django.contrib import admin
from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import OperationalError
from django.test import SimpleTestCase, TestCase, override_settings
from rest_framework.test import APIClient

from core.exceptions import NumericalFailure
from diagnostics.trace import TRACE_COLUMNS
from oadmm.config import SolverConfig
from oadmm.solver import solve
from problem.composite import null_problem
from problem.datasets import read_csv, synthesize
from stiefel.manifold import random_point

from .admin import SolverRunAdmin
from .exceptions import SpecInvalid
from .models import ExperimentRun, SolverRun
from .runner import (
    ExperimentSpec,
    SolverOutcome,
    emit_summary,
    flatten_errors,
    load_spec,
    log_grid,
    objective_at,
    run_experiment,
)

DESK_SPEC = Path(__file__).resolve().parent / 'specs' / 'desk.toml'

TINY_SPEC = {
    'name': 'tiny',
    'dataset': 'randn-30-8',
    'r': 2,
    'rho': 1.0,
    'iterations': 40,
    'seed': 7,
    'solver': {
        'ep': {'kind': 'oadmm-ep'},
        'rr': {'kind': 'oadmm-rr', 'bb_mode': 'bb1'},
        'sub': {'kind': 'subgrad'},
        'spgm': {'kind': 'spgm-ep'},
        'radmm': {'kind': 'fixed-beta-admm', 'beta': 100.0},
    },
}

TINY_TOML = """
name = "tiny"
dataset = "randn-30-8"
r = 2
rho = 1.0
iterations = 20
seed = 7

[solver.ep]
kind = "oadmm-ep"

[solver.sub]
kind = "subgrad"
"""


def with_solvers(**tables):
    return {**TINY_SPEC, 'solver': tables}


def read_rows(path):
    with open(path, newline='') as handle:
        return list(csv.reader(handle))


class SpecTests(SimpleTestCase):
    def test_valid_spec(self):
        spec = ExperimentSpec.from_mapping(TINY_SPEC, output='/tmp/tiny')
        configs = spec.solver_configs()
        self.assertEqual(list(configs), ['ep', 'rr', 'sub', 'spgm', 'radmm'])
        kind, cfg = configs['ep']
        self.assertEqual(kind, 'oadmm-ep')
        self.assertEqual((cfg.beta0, cfg.max_iters, cfg.seed), (10.0, 40, 7))
        self.assertEqual(configs['rr'][1].bb_mode, 'bb1')
        self.assertEqual(configs['radmm'][1].beta, 100.0)
        self.assertIsNone(spec.k)
        self.assertEqual(str(spec.descriptor), 'randn-30-8:seed=7')

    def test_unknown_solver_kind_names_the_table(self):
        with self.assertRaises(SpecInvalid) as caught:
            ExperimentSpec.from_mapping(with_solvers(bogus={'kind': 'manpg'}))
        self.assertEqual(caught.exception.exit_status, 2)
        self.assertIn('solver.bogus.kind', caught.exception.details)
        self.assertIn('bogus', str(caught.exception))

    def test_parameter_errors(self):
        cases = {
            'solver.x.theta': {'kind': 'subgrad', 'theta': 1.5},
            'solver.x.sigma': {'kind': 'oadmm-ep', 'sigma': 2.5},
            'solver.x.warp': {'kind': 'oadmm-rr', 'warp': 9},
            'solver.x.beta': {'kind': 'fixed-beta-admm', 'beta': -1.0},
        }
        for key, table in cases.items():
            with self.subTest(key=key), self.assertRaises(SpecInvalid) as caught:
                ExperimentSpec.from_mapping(with_solvers(x=table))
            self.assertIn(key, caught.exception.details)

    def test_bad_fields(self):
        for overrides, key in (({'dataset': 'gauss-3-3'}, 'dataset'), ({'r': 0}, 'r'),
                               ({'rho': -1.0}, 'rho'), ({'solver': {}}, 'solver')):
            with self.subTest(key=key), self.assertRaises(SpecInvalid) as caught:
                ExperimentSpec.from_mapping({**TINY_SPEC, **overrides})
            self.assertIn(key, caught.exception.details)

    def test_seed_override(self):
        spec = ExperimentSpec.from_mapping(TINY_SPEC, seed=9)
        self.assertEqual(spec.seed, 9)
        self.assertEqual(spec.descriptor.seed, 9)
        pinned = ExperimentSpec.from_mapping({**TINY_SPEC, 'dataset': 'randn-30-8:seed=3'}, seed=9)
        self.assertEqual(pinned.descriptor.seed, 3)

    @override_settings(OADMM_OUTPUT_DIR=Path('/tmp/oadmm-runs'))
    def test_default_output_dir(self):
        self.assertEqual(ExperimentSpec.from_mapping(TINY_SPEC).output_dir, Path('/tmp/oadmm-runs/tiny'))

    def test_bundled_desk_spec(self):
        spec = load_spec(DESK_SPEC)
        self.assertEqual((spec.r, spec.rho, spec.iterations), (10, 50.0, 2000))
        self.assertEqual(str(spec.descriptor), 'randn-200-50:seed=42')
        self.assertEqual(len(spec.solvers), 6)
        self.assertEqual(spec.solver_configs()['oadmm-ep'][1].beta0, 500.0)

    def test_bundled_sweep_specs(self):
        paths = sorted(DESK_SPEC.parent.glob('sweep-*.toml'))
        self.assertEqual(len(paths), 10)
        for path in paths:
            with self.subTest(spec=path.name):
                spec = load_spec(path)
                self.assertEqual(spec.name, path.stem)
                self.assertIn(spec.rho, (10.0, 50.0, 100.0, 500.0, 1000.0))
                kinds = {kind for kind, _ in spec.solver_configs().values()}
                self.assertEqual(kinds, {'oadmm-ep', 'oadmm-rr', 'subgrad', 'fixed-beta-admm', 'spgm-ep'})
                self.assertEqual(spec.solver_configs()['oadmm-ep'][1].xi, 0.5)
                self.assertEqual(spec.solver_configs()['oadmm-ep'][1].beta0, 10.0 * spec.rho)

    def test_unreadable_spec(self):
        with tempfile.TemporaryDirectory() as tmp:
            broken = Path(tmp) / 'broken.toml'
            broken.write_text('name = ')
            for path in (broken, Path(tmp) / 'missing.toml'):
                with self.subTest(path=path.name), self.assertRaises(SpecInvalid):
                    load_spec(path)


class OutputHelperTests(SimpleTestCase):
    def test_flatten_errors(self):
        errors = {'solver': {'a': {'kind': ['bad choice.']}}, 'r': ['too small.', 'not even.']}
        self.assertEqual(flatten_errors(errors),
                         {'solver.a.kind': 'bad choice.', 'r': 'too small. not even.'})

    def test_log_grid(self):
        grid = log_grid(2000)
        self.assertEqual(grid[:3], [0, 1, 2])
        self.assertEqual(grid[-1], 2000)
        self.assertEqual(grid, sorted(set(grid)))
        self.assertEqual(log_grid(0), [0])

    def test_objective_at(self):
        prob = null_problem(4, 2)
        traces = solve(prob, SolverConfig.defaults(1.0, max_iters=3),
                       random_point(4, 2, np.random.default_rng(0))).traces
        self.assertEqual(objective_at(traces, 100), traces[-1].objective)
        self.assertIsNone(objective_at(traces[1:], 0))

    def test_summary_of_null_problem(self):
        prob = null_problem(4, 2)
        X0 = random_point(4, 2, np.random.default_rng(1))
        traces = solve(prob, SolverConfig.defaults(1.0, max_iters=5), X0).traces
        summary = emit_summary([SolverOutcome('null', 'oadmm-ep', traces, wall_time=0.5)])
        entry = summary['solvers']['null']
        self.assertEqual(entry['final_objective'], 0.0)
        self.assertEqual(entry['final_objective'], traces[-1].objective)
        self.assertEqual(entry['iterations'], 5)
        self.assertEqual(json.loads(json.dumps(summary, allow_nan=False)), summary)


@override_settings(OADMM_RECORD_RUNS=True)
class RunExperimentTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_into(self, name, **kwargs):
        spec = ExperimentSpec.from_mapping(TINY_SPEC, output=self.root / name)
        return run_experiment(spec, **kwargs)

    def test_deterministic_runs_are_byte_identical(self):
        first = self.run_into('a', deterministic=True)
        second = self.run_into('b', deterministic=True)
        self.assertEqual(first.exit_status, 0)
        for name in TINY_SPEC['solver']:
            self.assertEqual((first.output_dir / f'{name}.trace.csv').read_bytes(),
                             (second.output_dir / f'{name}.trace.csv').read_bytes())

    def test_trace_file_layout(self):
        outcome = self.run_into('layout', deterministic=True)
        rows = read_rows(outcome.output_dir / 'ep.trace.csv')
        self.assertEqual(tuple(rows[0]), TRACE_COLUMNS)
        self.assertEqual(len(rows), 1 + 41)
        first, second = rows[1], rows[2]
        self.assertEqual(first[0], '0')
        self.assertEqual(first[TRACE_COLUMNS.index('theta')], '')
        self.assertNotEqual(second[TRACE_COLUMNS.index('theta')], '')
        self.assertEqual(second[TRACE_COLUMNS.index('elapsed_s')], '')

        summary = json.loads((outcome.output_dir / 'summary.json').read_text())
        for name in TINY_SPEC['solver']:
            last = read_rows(outcome.output_dir / f'{name}.trace.csv')[-1]
            self.assertEqual(summary['solvers'][name]['final_objective'], float(last[1]))
        self.assertEqual(summary['experiment']['solvers']['ep']['kind'], 'oadmm-ep')

        plot = read_rows(outcome.output_dir / 'plot_objective.csv')
        self.assertEqual(plot[0], ['t', 'ep', 'rr', 'sub', 'spgm', 'radmm'])
        self.assertEqual(plot[1][0], '0')
        self.assertEqual(plot[-1][0], '40')

    def test_ledger(self):
        outcome = self.run_into('ledger', deterministic=True)
        record = ExperimentRun.objects.get()
        self.assertEqual(record, outcome.record)
        self.assertEqual(record.status, 'completed')
        self.assertEqual((record.n, record.m, record.k), (8, 16, 8))
        self.assertEqual(record.solver_runs.count(), 5)
        self.assertIsNone(record.solver_runs.get(name='ep').wall_time)
        stats = ExperimentRun.get_statistics()
        self.assertEqual(stats['completed'], 1)
        self.assertEqual(stats['solver_kinds']['oadmm-rr'], 1)

    def test_parallel_run_records_wall_time(self):
        outcome = self.run_into('parallel', threads=3)
        self.assertEqual(outcome.exit_status, 0)
        self.assertTrue(all(result.wall_time is not None for result in outcome.outcomes))
        rows = read_rows(outcome.output_dir / 'sub.trace.csv')
        self.assertNotEqual(rows[-1][TRACE_COLUMNS.index('elapsed_s')], '')

    def test_failed_solver_keeps_other_results(self):
        with mock.patch('experiments.runner.subgrad_solve', side_effect=NumericalFailure("diverged")):
            outcome = self.run_into('partial', deterministic=True)
        self.assertEqual(outcome.exit_status, 1)
        self.assertFalse((outcome.output_dir / 'sub.trace.csv').exists())
        self.assertTrue((outcome.output_dir / 'ep.trace.csv').exists())
        summary = json.loads((outcome.output_dir / 'summary.json').read_text())
        self.assertEqual(summary['solvers']['sub']['status'], 'failed')
        self.assertIn('diverged', summary['solvers']['sub']['error'])
        self.assertEqual(SolverRun.objects.get(name='sub').status, 'failed')
        self.assertEqual(ExperimentRun.objects.get().status, 'failed')

    @override_settings(OADMM_RECORD_RUNS=False)
    def test_ledger_can_be_disabled(self):
        self.run_into('quiet', deterministic=True)
        self.assertFalse(ExperimentRun.objects.exists())


class CommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_run(self):
        spec = self.root / 'tiny.toml'
        spec.write_text(TINY_TOML)
        out = StringIO()
        call_command('oadmm', 'run', str(spec), '--out', str(self.root / 'out'), '--deterministic', stdout=out)
        self.assertIn('Results written to', out.getvalue())
        self.assertTrue((self.root / 'out' / 'summary.json').exists())
        self.assertEqual(len(read_rows(self.root / 'out' / 'sub.trace.csv')), 1 + 21)

    def test_run_without_ledger_tables(self):
        spec = self.root / 'tiny.toml'
        spec.write_text(TINY_TOML)
        missing = OperationalError('no such table: experiments_experimentrun')
        with mock.patch.object(ExperimentRun.objects, 'create', side_effect=missing), \
                self.assertLogs('experiments.runner', 'WARNING') as logs:
            call_command('oadmm', 'run', str(spec), '--out', str(self.root / 'out'),
                         '--deterministic', stdout=StringIO())
        self.assertTrue(any('run ledger unavailable' in line for line in logs.output))
        self.assertTrue((self.root / 'out' / 'summary.json').exists())
        self.assertTrue((self.root / 'out' / 'ep.trace.csv').exists())
        self.assertFalse(ExperimentRun.objects.exists())

    def test_solver_rows_failing_to_save_keep_the_files(self):
        spec = ExperimentSpec.from_mapping(TINY_SPEC, output=self.root / 'rows')
        missing = OperationalError('no such table: experiments_solverrun')
        with override_settings(OADMM_RECORD_RUNS=True), \
                mock.patch.object(SolverRun.objects, 'create', side_effect=missing), \
                self.assertLogs('experiments.runner', 'WARNING'):
            outcome = run_experiment(spec, deterministic=True)
        self.assertEqual(outcome.exit_status, 0)
        self.assertTrue((outcome.output_dir / 'plot_objective.csv').exists())

    def test_unknown_solver_exits_with_status_2(self):
        spec = self.root / 'bad.toml'
        spec.write_text(TINY_TOML + '\n[solver.bogus]\nkind = "manpg"\n')
        with self.assertRaises(CommandError) as caught:
            call_command('oadmm', 'run', str(spec), '--out', str(self.root / 'out'), stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn('bogus', str(caught.exception))

    def test_synth(self):
        path = self.root / 'samples.csv'
        call_command('oadmm', 'synth', 'randn-5-3', '--seed', '11', '--out', str(path), stdout=StringIO())
        np.testing.assert_array_equal(read_csv(path), synthesize(5, 3, 11))

    def test_synth_needs_synthetic_descriptor(self):
        with self.assertRaises(CommandError) as caught:
            call_command('oadmm', 'synth', 'file:data.csv', '--seed', '1',
                         '--out', str(self.root / 'x.csv'), stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 2)


class ApiTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        trace = Path(self.tmp.name) / 'ep.trace.csv'
        trace.write_text(','.join(TRACE_COLUMNS) + '\n0,1.5,,,,10.0,,,\n')
        self.experiment = ExperimentRun.objects.create(
            name='desk', dataset='randn-200-50:seed=42', n=50, m=500, r=10, rho=50.0, k=50,
            seed=42, iterations=2000, output_dir=self.tmp.name, status='completed',
        )
        self.ep = SolverRun.objects.create(
            experiment=self.experiment, name='ep', kind='oadmm-ep', status='completed',
            final_objective=1.5, best_objective=1.5, iterations=2000, trace_file=str(trace),
        )
        self.sub = SolverRun.objects.create(
            experiment=self.experiment, name='sub', kind='subgrad', status='failed',
            error_message='NumericalFailure: diverged',
        )
        self.client = APIClient()

    def tearDown(self):
        self.tmp.cleanup()

    def test_list_experiments(self):
        response = self.client.get('/api/experiments/')
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(len(response.data['results'][0]['solver_runs']), 2)

    def test_filter_solver_runs(self):
        response = self.client.get('/api/solver-runs/', {'kind': 'subgrad'})
        self.assertEqual([run['name'] for run in response.data['results']], ['sub'])
        response = self.client.get('/api/solver-runs/', {'max_objective': 2.0})
        self.assertEqual([run['name'] for run in response.data['results']], ['ep'])

    def test_trace_download(self):
        response = self.client.get(f'/api/solver-runs/{self.ep.pk}/trace/')
        self.assertEqual(response.status_code, 200)
        body = b''.join(response.streaming_content).decode()
        response.close()
        self.assertTrue(body.startswith('t,objective,crit'))
        self.assertEqual(self.client.get(f'/api/solver-runs/{self.sub.pk}/trace/').status_code, 404)

    def test_statistics(self):
        response = self.client.get('/api/experiments/statistics/')
        self.assertEqual(response.data['failed_solver_runs'], 1)
        self.assertEqual(response.data['solver_kinds'], {'oadmm-ep': 1, 'subgrad': 1})

    def test_admin_csv_export(self):
        model_admin = SolverRunAdmin(SolverRun, admin.site)
        response = model_admin.export_as_csv(None, SolverRun.objects.order_by('name'))
        rows = list(csv.reader(StringIO(response.content.decode())))
        self.assertEqual(rows[0][0], 'Experiment')
        self.assertEqual([row[3] for row in rows[1:]], ['ep', 'sub'])
        self.assertEqual(rows[2][6], '')
