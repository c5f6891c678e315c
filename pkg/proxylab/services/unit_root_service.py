"""
services/unit_root_service.py
─────────────────────────────────────────────────────────────────────
Augmented Dickey–Fuller test.

    Δz_t = a [+ b·t] + γ·z_{t−1} + Σ_{i=1..k} φᵢ·Δz_{t−i} + e_t

The statistic is the t-ratio on γ; H₀: γ = 0 (unit root) is rejected
when it falls below the left-tail critical value. The lag k minimises
AIC over 0..max_lags on a common sample; the chosen model is then
re-fitted on every row it can use.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from django.db import models

from ..exceptions import ConfigError, InsufficientObservationsError, RankDeficiencyError
from .critical_values import LEVELS, adf_critical_values
from .stats_core import OlsFit, as_vector, ols_general

logger = logging.getLogger(__name__)

MIN_REGRESSION_ROWS = 20

# SSR below this share of ΣΔz² means the deterministic terms fit Δz exactly
EXACT_FIT_RTOL = 1e-20


class AdfSpec(models.TextChoices):
    CONSTANT       = "constant",       "Constant"
    CONSTANT_TREND = "constant_trend", "Constant and linear trend"


_SPEC_ALIASES = {
    "c": AdfSpec.CONSTANT, "constant": AdfSpec.CONSTANT,
    "ct": AdfSpec.CONSTANT_TREND, "constant_trend": AdfSpec.CONSTANT_TREND, "trend": AdfSpec.CONSTANT_TREND,
}


def parse_spec(raw) -> AdfSpec:
    try:
        return _SPEC_ALIASES[str(raw).strip().lower().replace("-", "_")]
    except KeyError:
        raise ConfigError(f"unknown ADF spec {raw!r}; expected constant or constant_trend") from None


@dataclass(frozen=True)
class AdfResult:
    statistic:        float
    lags_used:        int
    spec:             str
    critical_values:  Dict[str, float]
    reject_unit_root: Dict[str, bool]
    nobs:             int
    gamma:            float = 0.0
    degenerate:       bool = False
    label:            Optional[str] = None
    aic_by_lag:       Dict[int, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "label":            self.label,
            "spec":             self.spec,
            "statistic":        self.statistic,
            "lags_used":        self.lags_used,
            "nobs":             self.nobs,
            "gamma":            self.gamma,
            "degenerate":       self.degenerate,
            "critical_values":  dict(self.critical_values),
            "reject_unit_root": dict(self.reject_unit_root),
        }


def default_max_lags(n: int) -> int:
    """12·(n/100)^¼, capped so at least 20 regression rows remain."""
    return max(0, min(int(12.0 * (n / 100.0) ** 0.25), n - MIN_REGRESSION_ROWS - 2))


def _regressors(z: np.ndarray, dz: np.ndarray, lags: int, start: int, with_trend: bool):
    """Dependent Δz_t and regressors for rows t = start .. len(dz)−1 (indices into dz)."""
    rows = np.arange(start, len(dz))
    target = dz[rows]
    cols = [z[rows]]
    for i in range(1, lags + 1):
        cols.append(dz[rows - i])
    if with_trend:
        cols.append(np.arange(1, len(rows) + 1, dtype=np.float64))
    return target, cols


def _fit(z, dz, lags, start, with_trend) -> Optional[OlsFit]:
    target, cols = _regressors(z, dz, lags, start, with_trend)
    try:
        return ols_general(target, cols, intercept=True)
    except RankDeficiencyError:
        return None


def _aic(fit: OlsFit) -> float:
    k = len(fit.slopes) + 1
    ssr = max(fit.ssr, np.finfo(np.float64).tiny)
    return fit.n_obs * math.log(ssr / fit.n_obs) + 2.0 * k


def adf_test(
    series,
    spec=AdfSpec.CONSTANT,
    max_lags: Optional[int] = None,
    lags: Optional[int] = None,
    label: Optional[str] = None,
) -> AdfResult:
    """
    ``lags`` fixes the augmentation order and skips the AIC search;
    otherwise the order is chosen in 0..max_lags.
    """
    spec = parse_spec(spec)
    z = as_vector(series, label or "series")
    n = len(z)

    if lags is not None:
        if lags < 0:
            raise ConfigError(f"lags must be ≥ 0, got {lags}")
        max_lags = int(lags)
    elif max_lags is None:
        max_lags = default_max_lags(n)
    elif max_lags < 0:
        raise ConfigError(f"max_lags must be ≥ 0, got {max_lags}")
    max_lags = int(max_lags)

    if n - max_lags - 2 < MIN_REGRESSION_ROWS:
        raise InsufficientObservationsError(
            f"adf_test needs n − max_lags − 2 ≥ {MIN_REGRESSION_ROWS}; got n={n}, max_lags={max_lags}"
        )

    with_trend = spec == AdfSpec.CONSTANT_TREND
    dz = np.diff(z)

    aic_by_lag: Dict[int, float] = {}
    if lags is None:
        for k in range(max_lags + 1):
            fit_k = _fit(z, dz, k, max_lags, with_trend)
            aic_by_lag[k] = _aic(fit_k) if fit_k is not None else math.inf
        finite = {k: v for k, v in aic_by_lag.items() if math.isfinite(v)}
        chosen = min(finite, key=lambda k: (finite[k], k)) if finite else 0
        logger.debug("ADF lag search (%s): AIC %s → k=%d", label or "series", aic_by_lag, chosen)
    else:
        chosen = max_lags

    fit = _fit(z, dz, chosen, chosen, with_trend)
    nobs = len(dz) - chosen
    crit = adf_critical_values(spec.value, nobs)

    t_gamma = fit.t_stats[0] if fit is not None else None
    exact = fit is not None and fit.ssr <= EXACT_FIT_RTOL * float(np.dot(dz[chosen:], dz[chosen:]))
    if fit is None or exact or t_gamma is None or not math.isfinite(t_gamma):
        # deterministic input: Δz is fitted exactly by the deterministic terms
        logger.warning(
            "ADF on %s: regression is degenerate (deterministic series); statistic set to 0",
            label or "series",
        )
        return AdfResult(
            statistic=0.0,
            lags_used=chosen,
            spec=spec.value,
            critical_values=crit,
            reject_unit_root={level: False for level in LEVELS},
            nobs=nobs,
            gamma=fit.slopes[0] if fit is not None else 0.0,
            degenerate=True,
            label=label,
            aic_by_lag=aic_by_lag,
        )

    statistic = float(t_gamma)
    return AdfResult(
        statistic=statistic,
        lags_used=chosen,
        spec=spec.value,
        critical_values=crit,
        reject_unit_root={level: statistic < crit[level] for level in LEVELS},
        nobs=nobs,
        gamma=fit.slopes[0],
        degenerate=False,
        label=label,
        aic_by_lag=aic_by_lag,
    )
