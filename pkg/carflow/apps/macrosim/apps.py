from django.apps import AppConfig


class MacrosimConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "carflow.apps.macrosim"
