"""
proxylab_config/settings/development.py
─────────────────────────────────────────────────────────────────────
Local runs: debug on, everything logged.
"""
from .base import *  # noqa: F401, F403

DEBUG = True

ALLOWED_HOSTS = ["*"]

# ── Celery: run queued plans inline when no broker is configured ──────
CELERY_TASK_ALWAYS_EAGER = config("CELERY_TASK_ALWAYS_EAGER", default=False, cast=bool)  # noqa: F405

# ── Logging: show everything in development ───────────────────────────
LOGGING["root"]["level"] = "DEBUG"  # noqa: F405
LOGGING["loggers"]["proxylab"]["level"] = "DEBUG"  # noqa: F405
