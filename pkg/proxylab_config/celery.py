"""
proxylab_config/celery.py
─────────────────────────────────────────────────────────────────────
Celery application for off-line Monte Carlo plans.

    celery -A proxylab_config worker --loglevel=info
"""
import os

from celery import Celery

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "proxylab_config.settings.development")

app = Celery("proxylab")

# Read config from Django settings (CELERY_* keys)
app.config_from_object("django.conf:settings", namespace="CELERY")

# Auto-discover tasks in all INSTALLED_APPS
app.autodiscover_tasks()
