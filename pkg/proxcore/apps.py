from django.apps import AppConfig


class ProxcoreConfig(AppConfig):
    name = 'proxcore'
