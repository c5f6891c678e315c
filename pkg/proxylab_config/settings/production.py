"""
proxylab_config/settings/production.py
─────────────────────────────────────────────────────────────────────
Worker containers (docker-compose): Redis broker, Sentry when configured.
"""
from .base import *  # noqa: F401, F403

DEBUG = False

# ── Sentry Error Tracking (optional) ─────────────────────────────────
SENTRY_DSN = config("SENTRY_DSN", default="")  # noqa: F405
if SENTRY_DSN:
    import sentry_sdk
    from sentry_sdk.integrations.celery import CeleryIntegration
    from sentry_sdk.integrations.django import DjangoIntegration
    sentry_sdk.init(
        dsn=SENTRY_DSN,
        integrations=[DjangoIntegration(), CeleryIntegration()],
        traces_sample_rate=0.2,
        send_default_pii=False,
    )
