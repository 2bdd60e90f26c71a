# experiments/management/commands/oadmm.py
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import OADMMError
from problem.datasets import DatasetDescriptor, synthesize, write_csv

from experiments.runner import load_spec, run_experiment

# Apps whose test suites make up the invariant checks.
CHECKED_APPS = ['stiefel', 'proxcore', 'problem', 'oadmm', 'diagnostics', 'baselines']


class Command(BaseCommand):
    help = "Run solver experiments, the invariant suite, or synthesize data."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='action', required=True)

        run = subparsers.add_parser('run', help="Run every solver of a TOML experiment spec")
        run.add_argument('spec', help="Path to the experiment spec (.toml)")
        run.add_argument('--out', help="Output directory (overrides the spec)")
        run.add_argument('--seed', type=int, help="Seed (overrides the spec)")
        run.add_argument('--deterministic', action='store_true',
                         help="Run solvers sequentially and leave the wall-clock column empty")
        run.add_argument('--threads', type=int, help="Parallel solver runs (default OADMM_THREADS)")

        check = subparsers.add_parser('check', help="Run the invariant suite")
        check.add_argument('--quick', action='store_true', help="Skip the benchmark-scale checks")

        synth = subparsers.add_parser('synth', help="Write a seeded Gaussian sample matrix as CSV")
        synth.add_argument('descriptor', help="randn-<m>-<d>")
        synth.add_argument('--seed', type=int, required=True)
        synth.add_argument('--out', required=True)

    def handle(self, *args, **options):
        try:
            getattr(self, f"handle_{options['action']}")(options)
        except OADMMError as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=exc.exit_status)

    def handle_run(self, options):
        spec = load_spec(options['spec'], output=options.get('out'), seed=options.get('seed'))
        outcome = run_experiment(spec, deterministic=options['deterministic'], threads=options.get('threads'))

        for result in outcome.outcomes:
            entry = outcome.summary['solvers'][result.name]
            if result.completed:
                self.stdout.write(self.style.SUCCESS(
                    f"{result.name:<20} F={entry['final_objective']} iterations={entry['iterations']}"
                ))
            else:
                self.stderr.write(f"{result.name}: {result.error}")
        self.stdout.write(f"Results written to {outcome.output_dir}")

        if outcome.exit_status:
            failed = [result.name for result in outcome.outcomes if not result.completed]
            raise CommandError(f"{len(failed)} solver(s) failed: {', '.join(failed)}",
                               returncode=outcome.exit_status)

    def handle_check(self, options):
        exclude = ['slow'] if options['quick'] else []
        try:
            call_command('test', *CHECKED_APPS, exclude_tags=exclude, verbosity=options['verbosity'])
        except SystemExit as exc:
            if exc.code:
                raise CommandError("invariant suite failed", returncode=1)

    def handle_synth(self, options):
        descriptor = DatasetDescriptor.parse(options['descriptor'], seed=options['seed'])
        if descriptor.kind != 'randn':
            raise CommandError("synth needs a randn-<m>-<d> descriptor", returncode=2)
        path = write_csv(synthesize(descriptor.samples, descriptor.features, descriptor.seed),
                         Path(options['out']))
        self.stdout.write(self.style.SUCCESS(
            f"Wrote {descriptor.samples} x {descriptor.features} samples to {path}"
        ))
