"""proxylab: proxy-variable econometrics lab (simulation, estimators, VECM pipeline)."""

__version__ = "1.0.0"
