# Generated by Django 5.2 on 2026-10-02 14:37

import django.db.models.deletion
import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=100)),
                ('seed', models.BigIntegerField()),
                ('config', models.JSONField(default=dict)),
                ('output_dir', models.CharField(max_length=500)),
                (
                    'status',
                    models.CharField(
                        choices=[('running', 'En cours'), ('completed', 'Terminé'), ('failed', 'Échec')],
                        default='running',
                        max_length=20,
                    ),
                ),
                ('last_stage', models.PositiveSmallIntegerField(default=0)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='MetricRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('stage', models.PositiveSmallIntegerField()),
                ('dataset', models.CharField(max_length=100)),
                ('snr_db', models.FloatField(blank=True, null=True)),
                ('acc', models.FloatField()),
                ('nmi', models.FloatField()),
                ('ari', models.FloatField()),
                ('purity', models.FloatField()),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
                (
                    'run',
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name='metrics',
                        to='clustering.trainingrun',
                    ),
                ),
            ],
            options={
                'ordering': ['stage', 'dataset', 'snr_db'],
            },
        ),
        migrations.CreateModel(
            name='ThresholdRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('epoch', models.PositiveIntegerField()),
                ('class_id', models.PositiveSmallIntegerField()),
                ('threshold', models.FloatField()),
                ('confident_fraction', models.FloatField()),
                (
                    'run',
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name='thresholds',
                        to='clustering.trainingrun',
                    ),
                ),
            ],
            options={
                'ordering': ['epoch', 'class_id'],
            },
        ),
    ]
