"""
proxylab_config/settings/base.py
─────────────────────────────────────────────────────────────────────
Settings shared by every environment (development / production / test).
Everything environment-specific is read through python-decouple, so a
.env file or the process environment can override it.
"""
from pathlib import Path

from decouple import Csv, config

# ── Paths ─────────────────────────────────────────────────────────────
# BASE_DIR = repository root (manage.py lives here)
BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = config("SECRET_KEY", default="proxylab-insecure-local-key")
DEBUG      = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = config("ALLOWED_HOSTS", default="localhost,127.0.0.1", cast=Csv())


# ── Application Definition ────────────────────────────────────────────
# Command-line lab: no admin, no auth, no models.
INSTALLED_APPS = [
    "proxylab.apps.ProxyLabConfig",
]

MIDDLEWARE = []

# ── Internationalization ──────────────────────────────────────────────
LANGUAGE_CODE = "en-us"
TIME_ZONE     = "UTC"
USE_I18N      = False
USE_TZ        = True


# ── Proxy lab ─────────────────────────────────────────────────────────
PROXYLAB = {
    # PROXYLAB_THREADS caps Monte Carlo parallelism; results never depend on it
    "THREADS":          config("PROXYLAB_THREADS", default=1, cast=int),
    "OUTPUT_DIR":       config("PROXYLAB_OUTPUT_DIR", default="./proxylab_out"),
    "CRITICAL_T":       config("PROXYLAB_CRITICAL_T", default=1.96, cast=float),
    "Z_THRESHOLD":      config("PROXYLAB_Z_THRESHOLD", default=4.0, cast=float),
    "MAX_FAILURE_RATE": config("PROXYLAB_MAX_FAILURE_RATE", default=0.01, cast=float),
    "DEFAULT_HORIZON":  config("PROXYLAB_DEFAULT_HORIZON", default=20, cast=int),
    "DEFAULT_ORDERING": config("PROXYLAB_DEFAULT_ORDERING", default="0,1"),
}


# ── Celery ────────────────────────────────────────────────────────────
CELERY_BROKER_URL         = config("REDIS_URL", default="redis://localhost:6379/0")
CELERY_RESULT_BACKEND     = config("REDIS_URL", default="redis://localhost:6379/0")
CELERY_TIMEZONE           = "UTC"
CELERY_TASK_SERIALIZER    = "json"
CELERY_RESULT_SERIALIZER  = "json"
CELERY_ACCEPT_CONTENT     = ["json"]
CELERY_TASK_TRACK_STARTED = True


# ── Logging ───────────────────────────────────────────────────────────
LOG_DIR = BASE_DIR / "logs"
LOG_DIR.mkdir(exist_ok=True)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {"format": "{levelname} {asctime} {module} {message}", "style": "{"},
        "simple":  {"format": "{levelname} {message}", "style": "{"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "simple"},
        "file":    {
            "class":       "logging.handlers.RotatingFileHandler",
            "filename":    LOG_DIR / "proxylab.log",
            "maxBytes":    1024 * 1024 * 10,  # 10 MB
            "backupCount": 5,
            "formatter":   "verbose",
        },
    },
    "root": {"handlers": ["console"], "level": "INFO"},
    "loggers": {
        "django":   {"handlers": ["console", "file"], "level": "WARNING", "propagate": False},
        "proxylab": {"handlers": ["console", "file"], "level": "INFO",    "propagate": False},
    },
}
