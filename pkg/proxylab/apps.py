"""
apps.py: app configuration
"""
from django.apps import AppConfig


class ProxyLabConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name               = "proxylab"
    verbose_name       = "Proxy-variable econometrics lab"
