import csv

from django.contrib import admin
from django.http import HttpResponse

from .models import ExperimentRun, SolverRun


class SolverRunInline(admin.TabularInline):
    model = SolverRun
    extra = 0
    fields = ['name', 'kind', 'status', 'final_objective', 'final_crit', 'iterations', 'wall_time']
    readonly_fields = fields
    can_delete = False


class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['name', 'dataset', 'r', 'rho', 'iterations', 'status', 'created_at']
    list_filter = ['status', 'deterministic', 'r']
    search_fields = ['name', 'dataset']
    readonly_fields = ['config_echo', 'started_at', 'finished_at', 'created_at', 'updated_at']
    inlines = [SolverRunInline]

    fieldsets = (
        ('Problem', {
            'fields': ('name', 'dataset', 'n', 'm', 'r', 'rho', 'k')
        }),
        ('Run', {
            'fields': ('seed', 'iterations', 'output_dir', 'deterministic', 'status')
        }),
        ('Audit Information', {
            'fields': ('config_echo', 'started_at', 'finished_at', 'created_at', 'updated_at'),
            'classes': ('collapse',)
        }),
    )


class SolverRunAdmin(admin.ModelAdmin):
    list_display = ['name', 'experiment', 'kind', 'status', 'final_objective', 'final_crit', 'iterations']
    list_filter = ['kind', 'status']
    search_fields = ['name', 'experiment__name', 'experiment__dataset']
    actions = ['export_as_csv']

    def export_as_csv(self, request, queryset):
        response = HttpResponse(content_type='text/csv')
        response['Content-Disposition'] = 'attachment; filename="solver_runs.csv"'

        writer = csv.writer(response)
        writer.writerow([
            'Experiment', 'Dataset', 'Rho', 'Solver', 'Kind', 'Status',
            'Final Objective', 'Best Objective', 'Final Crit', 'Iterations', 'Wall Time (s)',
        ])

        for run in queryset.select_related('experiment'):
            writer.writerow([
                run.experiment.name,
                run.experiment.dataset,
                run.experiment.rho,
                run.name,
                run.get_kind_display(),
                run.get_status_display(),
                '' if run.final_objective is None else run.final_objective,
                '' if run.best_objective is None else run.best_objective,
                '' if run.final_crit is None else run.final_crit,
                run.iterations,
                '' if run.wall_time is None else run.wall_time,
            ])

        return response

    export_as_csv.short_description = "Export selected solver runs as CSV"


admin.site.register(ExperimentRun, ExperimentRunAdmin)
admin.site.register(SolverRun, SolverRunAdmin)
