from django.apps import AppConfig


class RankerConfig(AppConfig):
    name = "apps.ranker"
    verbose_name = "ranker"
