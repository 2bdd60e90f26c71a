# experiments/serializers.py
from rest_framework import serializers

from baselines.config import BaselineConfig
from core.exceptions import ConfigurationError
from oadmm.config import BB_MODES, SolverConfig
from problem.datasets import DatasetDescriptor

from .models import ExperimentRun, SolverRun

OADMM_KINDS = {'oadmm-ep': 'EP', 'oadmm-rr': 'RR'}
BASELINE_KINDS = ('subgrad', 'fixed-beta-admm', 'spgm-ep')
SOLVER_KINDS = tuple(OADMM_KINDS) + BASELINE_KINDS

# Keys a [solver.<name>] table may set, by solver family.
OADMM_KEYS = ('p', 'xi', 'theta', 'sigma', 'tau', 'beta0', 'alpha', 'rho', 'gamma', 'delta',
              'bb_mode', 'bb_value', 'bb_lo', 'bb_hi', 'crit_tol')
BASELINE_KEYS = ('step0', 'beta', 'tau', 'rho', 'gamma', 'delta', 'mu0', 'mu_exponent')


class SolverTableSerializer(serializers.Serializer):
    """One [solver.<name>] table. Unset keys take the recommended defaults."""

    kind = serializers.ChoiceField(choices=SOLVER_KINDS)

    p = serializers.FloatField(required=False)
    xi = serializers.FloatField(required=False)
    theta = serializers.FloatField(required=False)
    sigma = serializers.FloatField(required=False)
    tau = serializers.FloatField(required=False)
    beta0 = serializers.FloatField(required=False)
    alpha = serializers.FloatField(required=False)
    rho = serializers.FloatField(required=False)
    gamma = serializers.FloatField(required=False)
    delta = serializers.FloatField(required=False)
    bb_mode = serializers.ChoiceField(choices=BB_MODES, required=False)
    bb_value = serializers.FloatField(required=False)
    bb_lo = serializers.FloatField(required=False)
    bb_hi = serializers.FloatField(required=False)
    crit_tol = serializers.FloatField(required=False, min_value=0.0)

    step0 = serializers.FloatField(required=False)
    beta = serializers.FloatField(required=False)
    mu0 = serializers.FloatField(required=False)
    mu_exponent = serializers.FloatField(required=False)

    def validate(self, data):
        unknown = set(self.initial_data) - set(self.fields)
        if unknown:
            raise serializers.ValidationError(
                {key: "Unknown solver parameter." for key in sorted(unknown)}
            )

        allowed = OADMM_KEYS if data['kind'] in OADMM_KINDS else BASELINE_KEYS
        misplaced = sorted(key for key in data if key != 'kind' and key not in allowed)
        if misplaced:
            raise serializers.ValidationError(
                {key: f"Not a parameter of {data['kind']}." for key in misplaced}
            )

        rho_dot = self.context.get('rho', 1.0)
        try:
            self.build(data, rho_dot, max_iters=0, seed=0)
        except ConfigurationError as exc:
            raise serializers.ValidationError(
                {key: str(message) for key, message in exc.details.items()} or str(exc)
            )
        return data

    @staticmethod
    def build(data, rho_dot, max_iters, seed):
        """SolverConfig or BaselineConfig for a validated table."""
        kind = data['kind']
        params = {key: value for key, value in data.items() if key != 'kind'}
        if kind in OADMM_KINDS:
            return SolverConfig.defaults(rho_dot, variant=OADMM_KINDS[kind],
                                         max_iters=max_iters, seed=seed, **params)
        return BaselineConfig.defaults(kind, rho_dot, max_iters=max_iters, seed=seed, **params)


class ExperimentSpecSerializer(serializers.Serializer):
    name = serializers.CharField(max_length=200, default='experiment')
    dataset = serializers.CharField(max_length=500)
    r = serializers.IntegerField(min_value=1, default=20)
    rho = serializers.FloatField()
    k = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    iterations = serializers.IntegerField(min_value=0, default=2000)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=42)
    output = serializers.CharField(max_length=500, required=False, allow_blank=True, default='')
    literal_centering = serializers.BooleanField(default=False)
    solver = serializers.DictField(child=serializers.DictField(), allow_empty=False)

    def validate_rho(self, value):
        if not value > 0:
            raise serializers.ValidationError("Regularization weight must be positive.")
        return value

    def validate(self, data):
        errors = {}
        # An embedded seed pins the data; otherwise the experiment seed is used.
        descriptor_seed = None if ':seed=' in data['dataset'] else data['seed']
        try:
            data['descriptor'] = DatasetDescriptor.parse(data['dataset'], seed=descriptor_seed)
        except ConfigurationError as exc:
            errors['dataset'] = str(exc)

        rho_dot = data['rho']
        solver_errors = {}
        for name, table in data['solver'].items():
            table_serializer = SolverTableSerializer(data=table, context={'rho': rho_dot})
            if not table_serializer.is_valid():
                solver_errors[name] = table_serializer.errors
            else:
                data['solver'][name] = dict(table_serializer.validated_data)
        if solver_errors:
            errors['solver'] = solver_errors
        if errors:
            raise serializers.ValidationError(errors)
        return data


class SolverRunSerializer(serializers.ModelSerializer):
    experiment = serializers.StringRelatedField(read_only=True)

    class Meta:
        model = SolverRun
        fields = [
            'id', 'experiment', 'name', 'kind', 'status', 'final_objective', 'best_objective',
            'final_crit', 'iterations', 'wall_time', 'trace_file', 'error_message', 'created_at',
        ]
        read_only_fields = fields


class ExperimentRunSerializer(serializers.ModelSerializer):
    solver_runs = SolverRunSerializer(many=True, read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'name', 'dataset', 'n', 'm', 'r', 'rho', 'k', 'seed', 'iterations',
            'output_dir', 'deterministic', 'status', 'config_echo',
            'started_at', 'finished_at', 'created_at', 'solver_runs',
        ]
        read_only_fields = fields
