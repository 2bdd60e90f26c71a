from django.apps import AppConfig


class StiefelConfig(AppConfig):
    name = 'stiefel'
