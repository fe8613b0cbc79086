from django.apps import AppConfig


class TerminationConfig(AppConfig):
    name = "apps.termination"
    verbose_name = "termination"
