"""
Django settings for carflow project.

carflow is a batch simulation harness: there are no views, templates or
middleware. Django provides the settings layer, the management command
front end, the run-record database and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent


# SECRET_KEY is unused by the simulation code but required by Django.
# Override in secret.py for any shared deployment.
SECRET_KEY = os.environ.get("CARFLOW_SECRET_KEY", "carflow-local-batch-key")

DEBUG = False

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    "carflow.apps.core",
    "carflow.apps.carfollow",
    "carflow.apps.microsim",
    "carflow.apps.macrosim",
    "carflow.apps.experiments",
    "carflow.apps.platoon",
    "carflow.apps.runs",
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/4.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging

CARFLOW_LOG_LEVEL = os.environ.get("CARFLOW_LOG_LEVEL", "INFO").upper()

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "carflow": {
            "handlers": ["console"],
            "level": CARFLOW_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Simulation harness configuration

# Worker processes for ensemble sweeps
CARFLOW_THREADS = int(os.environ.get("CARFLOW_THREADS", os.cpu_count() or 1))

# Default directory for command outputs when --out is not given
CARFLOW_OUTPUT_DIR = BASE_DIR / "out"

# Size of the "infinite" standing queue; must outlast the horizon at pure CACC flow (50 veh/min)
CARFLOW_QUEUE_SIZE = 80

# Persist finished runs as SimulationRun rows (manifest.json is always written)
CARFLOW_RECORD_RUNS = True

try:
    from .secret import *  # noqa
except ImportError:
    pass
