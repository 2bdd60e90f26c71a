# experiments/filters.py
import django_filters

from .models import ExperimentRun, SolverRun


class ExperimentRunFilter(django_filters.FilterSet):
    name = django_filters.CharFilter(lookup_expr='icontains')
    dataset = django_filters.CharFilter(lookup_expr='icontains')
    status = django_filters.ChoiceFilter(choices=ExperimentRun.STATUS_CHOICES)

    min_rho = django_filters.NumberFilter(field_name='rho', lookup_expr='gte')
    max_rho = django_filters.NumberFilter(field_name='rho', lookup_expr='lte')

    created_after = django_filters.DateFilter(field_name='created_at', lookup_expr='date__gte')
    created_before = django_filters.DateFilter(field_name='created_at', lookup_expr='date__lte')

    class Meta:
        model = ExperimentRun
        fields = [
            'name', 'dataset', 'status', 'r', 'deterministic',
            'min_rho', 'max_rho', 'created_after', 'created_before',
        ]


class SolverRunFilter(django_filters.FilterSet):
    name = django_filters.CharFilter(lookup_expr='icontains')
    kind = django_filters.ChoiceFilter(choices=SolverRun.KIND_CHOICES)
    status = django_filters.ChoiceFilter(choices=SolverRun.STATUS_CHOICES)

    min_objective = django_filters.NumberFilter(field_name='final_objective', lookup_expr='gte')
    max_objective = django_filters.NumberFilter(field_name='final_objective', lookup_expr='lte')
    max_crit = django_filters.NumberFilter(field_name='final_crit', lookup_expr='lte')

    class Meta:
        model = SolverRun
        fields = ['name', 'kind', 'status', 'experiment', 'min_objective', 'max_objective', 'max_crit']
