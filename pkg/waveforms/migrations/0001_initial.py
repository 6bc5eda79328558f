# Generated by Django 5.2 on 2026-09-28 09:12

import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='DatasetRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=100)),
                (
                    'kind',
                    models.CharField(
                        choices=[
                            ('1', 'Dataset 1 (entraînement)'),
                            ('2', 'Dataset 2 (balayage RSB)'),
                            ('toy', 'Jouet 4 classes'),
                            ('toy-sweep', 'Jouet, balayage RSB'),
                        ],
                        max_length=20,
                    ),
                ),
                ('path', models.CharField(max_length=500, unique=True)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('scale', models.FloatField(default=1.0)),
                ('num_samples', models.PositiveIntegerField()),
                ('frame_len', models.PositiveIntegerField()),
                ('sample_rate_hz', models.FloatField()),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
    ]
