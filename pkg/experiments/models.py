# experiments/models.py
from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    name = models.CharField(max_length=200)
    dataset = models.CharField(max_length=500, help_text="Dataset descriptor, file:<path> or randn-M-D")
    n = models.PositiveIntegerField()
    m = models.PositiveIntegerField(help_text="Dimension of the linear map's range")
    r = models.PositiveIntegerField()
    rho = models.FloatField()
    k = models.PositiveIntegerField()
    seed = models.PositiveBigIntegerField(default=0)
    iterations = models.PositiveIntegerField()
    output_dir = models.CharField(max_length=500)
    deterministic = models.BooleanField(default=False)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    config_echo = models.JSONField(default=dict, blank=True)

    started_at = models.DateTimeField(null=True, blank=True)
    finished_at = models.DateTimeField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['-created_at']
        verbose_name = 'Experiment run'
        verbose_name_plural = 'Experiment runs'
        indexes = [
            models.Index(fields=['status'], name='exprun_status_idx'),
            models.Index(fields=['dataset'], name='exprun_dataset_idx'),
        ]

    def __str__(self):
        return f"{self.name} - {self.dataset} (rho={self.rho:g})"

    def mark_running(self):
        self.status = 'running'
        self.started_at = timezone.now()
        self.save()

    def mark_finished(self, failed=False):
        self.status = 'failed' if failed else 'completed'
        self.finished_at = timezone.now()
        self.save()

    @classmethod
    def get_statistics(cls):
        """Counts of experiments by status and of solver runs by kind."""
        from django.db.models import Count

        stats = {
            'total': cls.objects.count(),
        }
        for code, _ in cls.STATUS_CHOICES:
            stats[code] = cls.objects.filter(status=code).count()

        by_kind = SolverRun.objects.values('kind').annotate(count=Count('id'))
        stats['solver_kinds'] = {row['kind']: row['count'] for row in by_kind}
        stats['failed_solver_runs'] = SolverRun.objects.filter(status='failed').count()
        return stats


class SolverRun(models.Model):
    KIND_CHOICES = [
        ('oadmm-ep', 'OADMM (extrapolated projection)'),
        ('oadmm-rr', 'OADMM (retraction)'),
        ('subgrad', 'Projected subgradient'),
        ('fixed-beta-admm', 'Fixed-penalty ADMM'),
        ('spgm-ep', 'Smoothing proximal gradient'),
    ]

    STATUS_CHOICES = [
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    experiment = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='solver_runs')
    name = models.CharField(max_length=100)
    kind = models.CharField(max_length=20, choices=KIND_CHOICES)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES)

    final_objective = models.FloatField(null=True, blank=True)
    best_objective = models.FloatField(null=True, blank=True)
    final_crit = models.FloatField(null=True, blank=True)
    iterations = models.PositiveIntegerField(default=0)
    wall_time = models.FloatField(null=True, blank=True, help_text="Seconds; empty for deterministic runs")
    trace_file = models.CharField(max_length=500, blank=True)
    error_message = models.TextField(blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['experiment', 'name']
        unique_together = [('experiment', 'name')]
        indexes = [
            models.Index(fields=['kind'], name='solverrun_kind_idx'),
            models.Index(fields=['status'], name='solverrun_status_idx'),
        ]

    def __str__(self):
        return f"{self.name} ({self.kind}) - {self.status}"
