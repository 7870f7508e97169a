from django.apps import AppConfig


class CarfollowConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "carflow.apps.carfollow"
