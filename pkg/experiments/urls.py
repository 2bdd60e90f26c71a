# experiments/urls.py
from django.urls import include, path
from rest_framework.routers import DefaultRouter

from .views import ExperimentRunViewSet, SolverRunViewSet

router = DefaultRouter()
router.register(r'experiments', ExperimentRunViewSet, basename='experiment')
router.register(r'solver-runs', SolverRunViewSet, basename='solver-run')

urlpatterns = [
    path('', include(router.urls)),
]
