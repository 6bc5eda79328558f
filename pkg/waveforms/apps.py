from django.apps import AppConfig


class WaveformsConfig(AppConfig):
    name = 'waveforms'
    verbose_name = "Formes d'onde radar"
