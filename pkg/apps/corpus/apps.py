from django.apps import AppConfig


class CorpusConfig(AppConfig):
    name = "apps.corpus"
    verbose_name = "learning-curve corpus"
