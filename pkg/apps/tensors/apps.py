from django.apps import AppConfig


class TensorsConfig(AppConfig):
    name = "apps.tensors"
    verbose_name = "tensors"
