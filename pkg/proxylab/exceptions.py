"""
proxylab/exceptions.py
─────────────────────────────────────────────────────────────────────
Exception hierarchy shared by every service.

Numerical and data errors also derive from ValueError so code that
already guards with ``except ValueError`` keeps working.
"""
from __future__ import annotations

from typing import List, Optional


class ProxyLabError(Exception):
    """Root of every error raised by proxylab services."""


# ── Input / numerical ────────────────────────────────────────────────

class InvalidInputError(ProxyLabError, ValueError):
    """Non-finite values, length mismatch or too few observations."""


class DegenerateRegressorError(ProxyLabError, ValueError):
    """A regressor has zero sample variance."""


class CollinearityError(ProxyLabError, ValueError):
    """V̂(X)V̂(P) − Ĉov(X,P)² fell below the relative tolerance."""


class RankDeficiencyError(ProxyLabError, ValueError):
    """Design matrix (intercept included) is not of full column rank."""


class InsufficientObservationsError(ProxyLabError, ValueError):
    """Too few usable rows for the requested test or lag order."""


class SingularMomentError(ProxyLabError, ValueError):
    """A Johansen residual moment matrix is numerically singular."""


class UnsupportedRankError(ProxyLabError, ValueError):
    """Only cointegration rank 1 can be estimated."""


# ── Configuration ────────────────────────────────────────────────────

class ConfigError(ProxyLabError, ValueError):
    """Invalid DGP configuration, Monte Carlo plan or CLI option value."""


class MissingLatentError(ProxyLabError, ValueError):
    """An operation needs the latent columns (c, u, v) of a simulated sample."""


# ── Monte Carlo ──────────────────────────────────────────────────────

class MonteCarloAbort(ProxyLabError, RuntimeError):
    """More replications failed than the plan tolerates."""

    def __init__(self, message: str, failures: Optional[List[dict]] = None):
        super().__init__(message)
        self.failures = failures or []


# ── Ingestion ────────────────────────────────────────────────────────

class IngestionError(ProxyLabError, ValueError):
    """
    Bad CSV input. ``row`` is the 1-based line number in the file
    (header = line 1); ``column`` names the offending column when known.
    """

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row    = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column:
            where.append(f"column '{column}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


# ── Output ───────────────────────────────────────────────────────────

class OutputError(ProxyLabError, OSError):
    """The output directory cannot be created or written."""
