# experiments/views.py
from pathlib import Path
import logging

from django.http import FileResponse
from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import filters, status, viewsets
from rest_framework.decorators import action
from rest_framework.response import Response

from .filters import ExperimentRunFilter, SolverRunFilter
from .models import ExperimentRun, SolverRun
from .serializers import ExperimentRunSerializer, SolverRunSerializer

logger = logging.getLogger(__name__)


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    Ledger of experiment runs with their solver results.
    """
    queryset = ExperimentRun.objects.prefetch_related('solver_runs')
    serializer_class = ExperimentRunSerializer
    filter_backends = [DjangoFilterBackend, filters.SearchFilter, filters.OrderingFilter]
    filterset_class = ExperimentRunFilter
    search_fields = ['name', 'dataset']
    ordering_fields = ['created_at', 'rho', 'name']
    ordering = ['-created_at']

    @action(detail=False, methods=['get'])
    def statistics(self, request):
        return Response(ExperimentRun.get_statistics())


class SolverRunViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = SolverRun.objects.select_related('experiment')
    serializer_class = SolverRunSerializer
    filter_backends = [DjangoFilterBackend, filters.SearchFilter, filters.OrderingFilter]
    filterset_class = SolverRunFilter
    search_fields = ['name', 'kind']
    ordering_fields = ['final_objective', 'final_crit', 'wall_time', 'created_at']
    ordering = ['experiment', 'name']

    @action(detail=True, methods=['get'])
    def trace(self, request, pk=None):
        """
        Stream the stored trace CSV of a solver run
        """
        run = self.get_object()
        path = Path(run.trace_file) if run.trace_file else None
        if path is None or not path.is_file():
            logger.warning(f"[EXPERIMENT] trace requested for run {run.pk} but no file at {run.trace_file!r}")
            return Response({'detail': 'No trace file recorded for this run.'},
                            status=status.HTTP_404_NOT_FOUND)
        return FileResponse(path.open('rb'), content_type='text/csv', as_attachment=True,
                            filename=path.name)
