# experiments/runner.py
"""
Experiment orchestration: build the problem named by an ExperimentSpec, run
every listed solver from a common starting point, and write

    <out>/<solver>.trace.csv   one row per recorded iteration
    <out>/summary.json         per-solver results plus a config echo
    <out>/plot_objective.csv   objective per solver on a log-spaced grid
"""
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import List, NamedTuple, Optional

from django.conf import settings
from django.db import DatabaseError
import numpy as np
import scipy

import core
from baselines.solvers import fixed_beta_admm_solve, spgm_ep_solve, subgrad_solve
from core.exceptions import OADMMError
from diagnostics.trace import TRACE_COLUMNS, best_objective, trace_to_row
from oadmm.solver import solve
from problem.datasets import load_or_synthesize_data
from problem.sparse_pca import make_sparse_pca
from stiefel.manifold import project_to_stiefel

from .exceptions import OutputNotWritable, SpecInvalid
from .models import ExperimentRun, SolverRun
from .serializers import OADMM_KINDS, ExperimentSpecSerializer, SolverTableSerializer

logger = logging.getLogger(__name__)

PLOT_POINTS = 60


def flatten_errors(errors, prefix=''):
    """Serializer errors as {'solver.foo.kind': 'message'}."""
    flat = {}
    if isinstance(errors, dict):
        for key, value in errors.items():
            flat.update(flatten_errors(value, f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(errors, (list, tuple)):
        if all(isinstance(item, str) for item in errors):
            flat[prefix or 'spec'] = ' '.join(str(item) for item in errors)
        else:
            for item in errors:
                flat.update(flatten_errors(item, prefix))
    else:
        flat[prefix or 'spec'] = str(errors)
    return flat


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    descriptor: object
    r: int
    rho: float
    k: Optional[int]
    iterations: int
    seed: int
    output_dir: Path
    literal_centering: bool = False
    solvers: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping, output=None, seed=None):
        """Validate a parsed spec document; `output` and `seed` override the file."""
        mapping = dict(mapping)
        if seed is not None:
            mapping['seed'] = seed
        if output:
            mapping['output'] = str(output)

        serializer = ExperimentSpecSerializer(data=mapping)
        if not serializer.is_valid():
            raise SpecInvalid("invalid experiment spec", **flatten_errors(serializer.errors))
        data = serializer.validated_data

        default_root = Path(getattr(settings, 'OADMM_OUTPUT_DIR', Path.cwd() / 'runs'))
        output_dir = Path(data['output']) if data['output'] else default_root / data['name']
        return cls(
            name=data['name'],
            descriptor=data['descriptor'],
            r=data['r'],
            rho=data['rho'],
            k=data['k'],
            iterations=data['iterations'],
            seed=data['seed'],
            output_dir=output_dir,
            literal_centering=data['literal_centering'],
            solvers=data['solver'],
        )

    def solver_configs(self):
        """{name: (kind, config)} in spec order."""
        return {
            name: (table['kind'], SolverTableSerializer.build(table, self.rho, self.iterations, self.seed))
            for name, table in self.solvers.items()
        }

    def to_dict(self):
        return {
            'name': self.name,
            'dataset': str(self.descriptor),
            'r': self.r,
            'rho': self.rho,
            'k': self.k,
            'iterations': self.iterations,
            'seed': self.seed,
            'output': str(self.output_dir),
            'literal_centering': self.literal_centering,
            'solvers': {
                name: {'kind': kind, **cfg.to_dict()}
                for name, (kind, cfg) in self.solver_configs().items()
            },
        }


def load_spec(path, output=None, seed=None):
    path = Path(path)
    try:
        with path.open('rb') as handle:
            document = tomllib.load(handle)
    except FileNotFoundError:
        raise SpecInvalid("spec file not found", path=str(path))
    except tomllib.TOMLDecodeError as exc:
        raise SpecInvalid("spec file is not valid TOML", path=str(path), reason=str(exc))
    return ExperimentSpec.from_mapping(document, output=output, seed=seed)


def build_problem(spec):
    """Sparse-PCA problem and the common starting point Proj_M(seeded Gaussian)."""
    D = load_or_synthesize_data(spec.descriptor, literal_centering=spec.literal_centering)
    prob = make_sparse_pca(D, spec.rho, k=spec.k, r=spec.r)
    rng = np.random.default_rng(spec.seed)
    X0 = project_to_stiefel(rng.standard_normal((prob.n, spec.r)))
    return prob, X0


class SolverOutcome(NamedTuple):
    name: str
    kind: str
    traces: List
    wall_time: Optional[float] = None
    error: Optional[str] = None
    exit_status: int = 0
    trace_path: Optional[Path] = None

    @property
    def completed(self):
        return self.error is None


def run_solver(name, kind, cfg, prob, X0, record_time=True):
    """Run one solver; solver errors are caught and reported in the outcome."""
    started = time.perf_counter()
    logger.info(f"[EXPERIMENT] {name} ({kind}) started")
    try:
        if kind in OADMM_KINDS:
            traces = solve(prob, cfg, X0, record_time=record_time).traces
        elif kind == 'subgrad':
            traces = subgrad_solve(prob, cfg, X0, record_time=record_time).traces
        elif kind == 'fixed-beta-admm':
            traces = fixed_beta_admm_solve(prob, cfg, X0, record_time=record_time).traces
        else:
            traces = spgm_ep_solve(prob, cfg, X0, record_time=record_time).traces
    except OADMMError as exc:
        logger.error(f"[EXPERIMENT] {name} ({kind}) failed: {exc}")
        return SolverOutcome(name, kind, [], error=f"{type(exc).__name__}: {exc}",
                             exit_status=exc.exit_status)
    wall_time = time.perf_counter() - started if record_time else None
    return SolverOutcome(name, kind, traces, wall_time=wall_time)


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(traces, path):
    """Header row always; absent fields are empty cells."""
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(TRACE_COLUMNS)
        for trace in traces:
            row = trace_to_row(trace)
            writer.writerow([_cell(row[column]) for column in TRACE_COLUMNS])
    return path


def log_grid(T, points=PLOT_POINTS):
    """0 followed by integer iterations evenly spaced in log10 up to T."""
    if T < 1:
        return [0]
    grid = np.unique(np.round(np.logspace(0.0, math.log10(T), points)).astype(int))
    return [0] + [int(t) for t in grid]


def objective_at(traces, t):
    """Objective of the last recorded row with index <= t, or None."""
    index = bisect_right([trace.t for trace in traces], t)
    return traces[index - 1].objective if index else None


def write_plot_csv(outcomes, T, path):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['t'] + [outcome.name for outcome in outcomes])
        for t in log_grid(T):
            writer.writerow([t] + [_cell(objective_at(outcome.traces, t)) for outcome in outcomes])
    return path


def _finite(value):
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def emit_summary(outcomes, spec=None):
    """JSON-ready summary: per-solver results, config echo and library versions."""
    solvers = {}
    for outcome in outcomes:
        entry = {
            'kind': outcome.kind,
            'status': 'completed' if outcome.completed else 'failed',
            'error': outcome.error,
            'trace_file': str(outcome.trace_path) if outcome.trace_path else None,
        }
        if outcome.traces:
            last = outcome.traces[-1]
            entry.update(
                final_objective=_finite(last.objective),
                best_objective=_finite(best_objective(outcome.traces)),
                final_crit=_finite(last.crit),
                iterations=last.t,
                wall_time_s=outcome.wall_time,
            )
        solvers[outcome.name] = entry
    return {
        'library': {'version': core.__version__, 'numpy': np.__version__, 'scipy': scipy.__version__},
        'experiment': spec.to_dict() if spec is not None else None,
        'solvers': solvers,
    }


class ExperimentOutcome(NamedTuple):
    summary: dict
    outcomes: List[SolverOutcome]
    exit_status: int
    output_dir: Path
    record: Optional[ExperimentRun] = None


def _prepare_output(path):
    try:
        path.mkdir(parents=True, exist_ok=True)
        marker = path / '.write-test'
        marker.write_text('')
        marker.unlink()
    except OSError as exc:
        raise OutputNotWritable("output directory is not writable", path=str(path), reason=str(exc))


def _record_run(spec, prob, deterministic):
    """Ledger row for the run, or None when the database is unavailable (e.g. not migrated)."""
    try:
        record = ExperimentRun.objects.create(
            name=spec.name,
            dataset=str(spec.descriptor),
            n=prob.n,
            m=prob.m,
            r=spec.r,
            rho=spec.rho,
            k=prob.g.k,
            seed=spec.seed,
            iterations=spec.iterations,
            output_dir=str(spec.output_dir),
            deterministic=deterministic,
            config_echo=spec.to_dict(),
        )
        record.mark_running()
    except DatabaseError as exc:
        logger.warning(f"[EXPERIMENT] run ledger unavailable, continuing without it: {exc}")
        return None
    return record


def _record_outcomes(record, outcomes, summary):
    try:
        for outcome in outcomes:
            entry = summary['solvers'][outcome.name]
            SolverRun.objects.create(
                experiment=record,
                name=outcome.name,
                kind=outcome.kind,
                status=entry['status'],
                final_objective=entry.get('final_objective'),
                best_objective=entry.get('best_objective'),
                final_crit=entry.get('final_crit'),
                iterations=entry.get('iterations', 0),
                wall_time=entry.get('wall_time_s'),
                trace_file=entry['trace_file'] or '',
                error_message=outcome.error or '',
            )
        record.mark_finished(failed=any(not outcome.completed for outcome in outcomes))
    except DatabaseError as exc:
        logger.warning(f"[EXPERIMENT] could not record solver results for run {record.pk}: {exc}")


def run_experiment(spec, deterministic=False, threads=None):
    """
    Run every solver of `spec` from the same X0 (y0 = A(X0), z0 = 0).

    Solvers run on up to `threads` workers (OADMM_THREADS by default);
    `deterministic` runs them in order and leaves the wall-clock column empty.
    A failing solver does not discard the others' files; the exit status is
    the largest solver exit status (0, 1 or 2).
    """
    _prepare_output(spec.output_dir)
    prob, X0 = build_problem(spec)
    configs = spec.solver_configs()
    threads = threads or int(getattr(settings, 'OADMM_THREADS', 1))
    record_time = not deterministic
    record = _record_run(spec, prob, deterministic) if getattr(settings, 'OADMM_RECORD_RUNS', True) else None
    logger.info(f"[EXPERIMENT] {spec.name}: {len(configs)} solvers on {spec.descriptor} "
                f"(n={prob.n}, r={spec.r}, rho={spec.rho:g})")

    jobs = [(name, kind, cfg, prob, X0, record_time) for name, (kind, cfg) in configs.items()]
    if deterministic or threads <= 1 or len(jobs) == 1:
        outcomes = [run_solver(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            outcomes = list(pool.map(lambda job: run_solver(*job), jobs))

    written = []
    for outcome in outcomes:
        if outcome.traces:
            path = write_trace_csv(outcome.traces, spec.output_dir / f"{outcome.name}.trace.csv")
            outcome = outcome._replace(trace_path=path)
        written.append(outcome)

    summary = emit_summary(written, spec)
    with open(spec.output_dir / 'summary.json', 'w') as handle:
        json.dump(summary, handle, indent=2, allow_nan=False)
        handle.write('\n')
    write_plot_csv(written, spec.iterations, spec.output_dir / 'plot_objective.csv')

    if record is not None:
        _record_outcomes(record, written, summary)

    exit_status = max((outcome.exit_status for outcome in written), default=0)
    logger.info(f"[EXPERIMENT] {spec.name} finished with status {exit_status}")
    return ExperimentOutcome(summary, written, exit_status, spec.output_dir, record)
