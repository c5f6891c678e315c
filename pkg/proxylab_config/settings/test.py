"""
proxylab_config/settings/test.py
─────────────────────────────────────────────────────────────────────
pytest: no broker, tasks run eagerly, console logging at WARNING.
"""
from .base import *  # noqa: F401, F403

DEBUG = False

CELERY_TASK_ALWAYS_EAGER     = True
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_BROKER_URL            = "memory://"
CELERY_RESULT_BACKEND        = "cache+memory://"

PROXYLAB["THREADS"] = 1  # noqa: F405

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "handlers": {"console": {"class": "logging.StreamHandler"}},
    "root": {"handlers": ["console"], "level": "WARNING"},
    "loggers": {
        "proxylab": {"handlers": ["console"], "level": "WARNING", "propagate": False},
    },
}
