from django.apps import AppConfig


class OadmmConfig(AppConfig):
    name = 'oadmm'
