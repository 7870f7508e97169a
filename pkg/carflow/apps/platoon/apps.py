from django.apps import AppConfig


class PlatoonConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "carflow.apps.platoon"
