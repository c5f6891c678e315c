# proxylab_config/__init__.py
# Celery app loads with Django so `mc --queue` and the worker share one configuration
from .celery import app as celery_app

__all__ = ("celery_app",)
