# Generated by Django 6.0 on 2026-10-17 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200)),
                ('dataset', models.CharField(help_text='Dataset descriptor, file:<path> or randn-M-D', max_length=500)),
                ('n', models.PositiveIntegerField()),
                ('m', models.PositiveIntegerField(help_text="Dimension of the linear map's range")),
                ('r', models.PositiveIntegerField()),
                ('rho', models.FloatField()),
                ('k', models.PositiveIntegerField()),
                ('seed', models.PositiveBigIntegerField(default=0)),
                ('iterations', models.PositiveIntegerField()),
                ('output_dir', models.CharField(max_length=500)),
                ('deterministic', models.BooleanField(default=False)),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='pending', max_length=20)),
                ('config_echo', models.JSONField(blank=True, default=dict)),
                ('started_at', models.DateTimeField(blank=True, null=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'verbose_name': 'Experiment run',
                'verbose_name_plural': 'Experiment runs',
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['status'], name='exprun_status_idx'), models.Index(fields=['dataset'], name='exprun_dataset_idx')],
            },
        ),
        migrations.CreateModel(
            name='SolverRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=100)),
                ('kind', models.CharField(choices=[('oadmm-ep', 'OADMM (extrapolated projection)'), ('oadmm-rr', 'OADMM (retraction)'), ('subgrad', 'Projected subgradient'), ('fixed-beta-admm', 'Fixed-penalty ADMM'), ('spgm-ep', 'Smoothing proximal gradient')], max_length=20)),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Failed')], max_length=20)),
                ('final_objective', models.FloatField(blank=True, null=True)),
                ('best_objective', models.FloatField(blank=True, null=True)),
                ('final_crit', models.FloatField(blank=True, null=True)),
                ('iterations', models.PositiveIntegerField(default=0)),
                ('wall_time', models.FloatField(blank=True, help_text='Seconds; empty for deterministic runs', null=True)),
                ('trace_file', models.CharField(blank=True, max_length=500)),
                ('error_message', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('experiment', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='solver_runs', to='experiments.experimentrun')),
            ],
            options={
                'ordering': ['experiment', 'name'],
                'indexes': [models.Index(fields=['kind'], name='solverrun_kind_idx'), models.Index(fields=['status'], name='solverrun_status_idx')],
                'unique_together': {('experiment', 'name')},
            },
        ),
    ]
