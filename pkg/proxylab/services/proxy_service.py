"""
services/proxy_service.py
─────────────────────────────────────────────────────────────────────
Omitted-variable bias and proxy estimators.

Omitted C:
    β̂₁ = α₁ + α₂·Ĉov(X,C)/V̂(X) + Ĉov(X,U)/V̂(X)

Perfect proxy P = λC:
    E[γ̂₁] = α₁,   E[γ̂₂] = α₂/λ,   α̂₂ᵖʳᵒˣʸ = λ·γ̂₂

Imperfect proxy C = δ₀ + δ_X X + δ_P P + V:
    μ₀ = α₀ + α₂δ₀,  μ_X = α₁ + α₂δ_X,  μ_P = α₂δ_P,  E = α₂V + U

Every report carries the sample moments that entered its formula.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from django.db import models

from ..exceptions import ConfigError, MissingLatentError
from .dgp_service import DgpConfig, ProxyMode, Sample
from .stats_core import ols_single, ols_two_regressor, sample_cov

logger = logging.getLogger(__name__)

DEFAULT_CRITICAL_T = 1.96

# σ̂² below this share of V̂(c) is an exact projection (perfect-proxy samples)
EXACT_FIT_RTOL = 1e-20


class BiasDirection(models.TextChoices):
    NONE          = "none",          "No omitted-variable bias"
    INFLATED      = "inflated",      "Overstated (α₂ and Cov(X,C) share a sign)"
    UNDERSTATED   = "understated",   "Understated (opposite signs, same sign as α₁)"
    SIGN_REVERSED = "sign_reversed", "Sign reversed (bias outweighs α₁)"


class CriterionStatus(models.TextChoices):
    PASS      = "pass",                     "Pass"
    FAIL      = "fail",                     "Fail"
    UNTESTED  = "assumption_not_testable",  "Assumption, not testable"


# ────────────────────────────────────────────────────────────────────
#  Reports
# ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BiasReport:
    estimator_name:     str
    estimate:           float
    theoretical_target: float
    bias_term_formula:  float
    components:         Dict[str, float] = field(default_factory=dict)
    sampling_term:      Optional[float] = None
    population_target:  Optional[float] = None
    direction:          Optional[str] = None
    std_error:          Optional[float] = None
    t_stat:             Optional[float] = None

    @property
    def deviation(self) -> float:
        return self.estimate - self.theoretical_target

    def as_dict(self) -> dict:
        return {
            "estimator":          self.estimator_name,
            "estimate":           self.estimate,
            "theoretical_target": self.theoretical_target,
            "bias_term_formula":  self.bias_term_formula,
            "sampling_term":      self.sampling_term,
            "population_target":  self.population_target,
            "direction":          self.direction,
            "std_error":          self.std_error,
            "t_stat":             self.t_stat,
            "components":         dict(self.components),
        }


@dataclass(frozen=True)
class CriterionResult:
    name:      str
    status:    str
    estimates: Dict[str, Optional[float]] = field(default_factory=dict)
    note:      str = ""

    @property
    def passed(self) -> bool:
        return self.status == CriterionStatus.PASS

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "estimates": dict(self.estimates), "note": self.note}


@dataclass(frozen=True)
class CriteriaReport:
    relevance:    CriterionResult
    sufficiency:  CriterionResult
    exogeneity:   CriterionResult
    stability:    CriterionResult
    critical_t:   float = DEFAULT_CRITICAL_T
    observational: bool = False

    @property
    def criteria(self) -> List[CriterionResult]:
        return [self.relevance, self.sufficiency, self.exogeneity, self.stability]

    def as_dict(self) -> dict:
        return {
            "critical_t":    self.critical_t,
            "observational": self.observational,
            "criteria":      [c.as_dict() for c in self.criteria],
        }


# ────────────────────────────────────────────────────────────────────
#  Helpers
# ────────────────────────────────────────────────────────────────────

def _require_latent(s: Sample, what: str) -> None:
    if not s.has_latent:
        raise MissingLatentError(f"{what} needs the latent columns c and u (simulation mode)")


def _require_mode(config: DgpConfig, mode: ProxyMode, what: str) -> None:
    if config.proxy_mode != mode:
        raise ConfigError(f"{what} expects a {mode.value} configuration, got {config.mode}")


def classify_bias(alpha1: float, bias: float) -> str:
    """Direction of an omitted-variable bias relative to the true α₁."""
    if bias == 0.0:
        return BiasDirection.NONE.value
    if alpha1 == 0.0 or math.copysign(1.0, bias) == math.copysign(1.0, alpha1):
        return BiasDirection.INFLATED.value
    if abs(bias) > abs(alpha1):
        return BiasDirection.SIGN_REVERSED.value
    return BiasDirection.UNDERSTATED.value


# ────────────────────────────────────────────────────────────────────
#  Omitted C
# ────────────────────────────────────────────────────────────────────

def estimate_omitted(s: Sample, config: DgpConfig) -> BiasReport:
    """
    Short regression of y on x with its sample-exact decomposition

        β̂₁ − α₁ = α₂·Ĉov(x,c)/V̂(x) + Ĉov(x,u)/V̂(x)
    """
    _require_latent(s, "estimate_omitted")
    fit = ols_single(s.y, s.x)

    var_x  = fit.moment_ledger.var_x
    cov_xc = sample_cov(s.x, s.c)
    cov_xu = sample_cov(s.x, s.u)

    bias     = config.alpha2 * cov_xc / var_x
    sampling = cov_xu / var_x
    pop_bias = config.omitted_target - config.alpha1

    return BiasReport(
        estimator_name="omitted",
        estimate=fit.slopes[0],
        theoretical_target=config.alpha1,
        bias_term_formula=bias,
        components={"var_x": var_x, "cov_xc": cov_xc, "cov_xu": cov_xu, "cov_xy": fit.moment_ledger.cov_xy},
        sampling_term=sampling,
        population_target=config.omitted_target,
        direction=classify_bias(config.alpha1, pop_bias),
        std_error=fit.se_slopes[0],
        t_stat=fit.t_stats[0],
    )


# ────────────────────────────────────────────────────────────────────
#  Perfect proxy
# ────────────────────────────────────────────────────────────────────

def rescale_gamma2(gamma2_hat: float, lambda_: float) -> float:
    """α̂₂ᵖʳᵒˣʸ = λ·γ̂₂; λ > 0 keeps the sign of γ̂₂."""
    if not math.isfinite(lambda_) or lambda_ <= 0:
        raise ConfigError(f"lambda must be > 0, got {lambda_}")
    return lambda_ * gamma2_hat


def estimate_perfect_proxy(s: Sample, config: DgpConfig) -> Tuple[BiasReport, BiasReport]:
    _require_mode(config, ProxyMode.PERFECT, "estimate_perfect_proxy")
    fit = ols_two_regressor(s.y, s.x, s.p)
    ledger = fit.moment_ledger.as_dict()
    g1, g2 = fit.slopes
    se1, se2 = fit.se_slopes
    t1, t2 = fit.t_stats

    # with U in the sample the deviations are the U-driven terms
    sampling1 = sampling2 = None
    if s.u is not None:
        d = ledger["var_x"] * ledger["var_p"] - ledger["cov_xp"] ** 2
        cov_xu = sample_cov(s.x, s.u)
        cov_pu = sample_cov(s.p, s.u)
        sampling1 = (cov_xu * ledger["var_p"] - cov_pu * ledger["cov_xp"]) / d
        sampling2 = (cov_pu * ledger["var_x"] - cov_xu * ledger["cov_xp"]) / d

    gamma1 = BiasReport(
        estimator_name="gamma1",
        estimate=g1,
        theoretical_target=config.alpha1,
        bias_term_formula=0.0,
        components=ledger,
        sampling_term=sampling1,
        population_target=config.alpha1,
        std_error=se1,
        t_stat=t1,
    )
    gamma2 = BiasReport(
        estimator_name="gamma2",
        estimate=g2,
        theoretical_target=config.alpha2 / config.lambda_,
        bias_term_formula=0.0,
        components={**ledger, "lambda": config.lambda_, "alpha2_proxy": rescale_gamma2(g2, config.lambda_)},
        sampling_term=sampling2,
        population_target=config.alpha2 / config.lambda_,
        std_error=se2,
        t_stat=t2,
    )
    logger.debug("perfect proxy: γ̂₁=%.6g γ̂₂=%.6g (t=%s)", g1, g2, t2)
    return gamma1, gamma2


# ────────────────────────────────────────────────────────────────────
#  Imperfect proxy
# ────────────────────────────────────────────────────────────────────

def imperfect_targets(config: DgpConfig) -> Dict[str, float]:
    return {
        "mu_0": config.alpha0 + config.alpha2 * config.delta0,
        "mu_x": config.alpha1 + config.alpha2 * config.delta_x,
        "mu_p": config.alpha2 * config.delta_p,
    }


def estimate_imperfect_proxy(s: Sample, config: DgpConfig) -> Tuple[BiasReport, BiasReport]:
    """
    Regress y on (x, p). μ̂_X keeps the residual bias α₂δ_X, μ̂_P is the
    attenuated α₂δ_P. The intercept report is returned through
    ``estimate_imperfect_intercept``.
    """
    _require_mode(config, ProxyMode.IMPERFECT, "estimate_imperfect_proxy")
    fit = ols_two_regressor(s.y, s.x, s.p)
    ledger = fit.moment_ledger.as_dict()
    targets = imperfect_targets(config)
    mu_x, mu_p = fit.slopes

    sampling_x = sampling_p = None
    if s.u is not None and s.v is not None:
        e = config.alpha2 * s.v + s.u
        d = ledger["var_x"] * ledger["var_p"] - ledger["cov_xp"] ** 2
        cov_xe = sample_cov(s.x, e)
        cov_pe = sample_cov(s.p, e)
        sampling_x = (cov_xe * ledger["var_p"] - cov_pe * ledger["cov_xp"]) / d
        sampling_p = (cov_pe * ledger["var_x"] - cov_xe * ledger["cov_xp"]) / d

    report_x = BiasReport(
        estimator_name="mu_x",
        estimate=mu_x,
        theoretical_target=targets["mu_x"],
        bias_term_formula=config.alpha2 * config.delta_x,
        components={**ledger, "residual_bias": config.alpha2 * config.delta_x},
        sampling_term=sampling_x,
        population_target=targets["mu_x"],
        std_error=fit.se_slopes[0],
        t_stat=fit.t_stats[0],
    )
    report_p = BiasReport(
        estimator_name="mu_p",
        estimate=mu_p,
        theoretical_target=targets["mu_p"],
        bias_term_formula=config.alpha2 * config.delta_p - config.alpha2,
        components={**ledger, "attenuation_factor": config.delta_p},
        sampling_term=sampling_p,
        population_target=targets["mu_p"],
        std_error=fit.se_slopes[1],
        t_stat=fit.t_stats[1],
    )
    return report_x, report_p


def estimate_imperfect_intercept(s: Sample, config: DgpConfig) -> BiasReport:
    fit = ols_two_regressor(s.y, s.x, s.p)
    target = imperfect_targets(config)["mu_0"]
    return BiasReport(
        estimator_name="mu_0",
        estimate=fit.intercept,
        theoretical_target=target,
        bias_term_formula=config.alpha2 * config.delta0,
        components={"delta0": config.delta0},
        population_target=target,
        std_error=fit.se_intercept,
        t_stat=(fit.intercept / fit.se_intercept) if fit.se_intercept else None,
    )


# ────────────────────────────────────────────────────────────────────
#  Good-proxy criteria
# ────────────────────────────────────────────────────────────────────

def _is_exact(fit, target) -> bool:
    return fit.sigma2 <= EXACT_FIT_RTOL * max(sample_cov(target, target), 1e-300)


def _projection(c, x, p) -> Dict[str, Optional[float]]:
    fit = ols_two_regressor(c, x, p)
    t_x, t_p = (None, None) if _is_exact(fit, c) else fit.t_stats
    return {
        "delta_x": fit.slopes[0], "t_delta_x": t_x,
        "delta_p": fit.slopes[1], "t_delta_p": t_p,
    }


def _abs_t(t: Optional[float], estimate: float) -> float:
    # a zero standard error means an exact fit: the coefficient is either exactly zero or certain
    if t is None:
        return 0.0 if abs(estimate) <= 1e-8 else math.inf
    return abs(t)


def _untestable(critical_t: float) -> CriteriaReport:
    note = "identification assumption; cannot be validated on observational data"
    status = CriterionStatus.UNTESTED.value
    return CriteriaReport(
        relevance=CriterionResult("relevance", status, note=note),
        sufficiency=CriterionResult("sufficiency", status, note=note),
        exogeneity=CriterionResult("exogeneity", status, note=note),
        stability=CriterionResult("stability", status, note=note),
        critical_t=critical_t,
        observational=True,
    )


def proxy_criteria_report(s: Sample, config: DgpConfig, critical_t: float = DEFAULT_CRITICAL_T) -> CriteriaReport:
    """
    Relevance (δ_P ≠ 0), conditional sufficiency (δ_X = 0), exogeneity
    (U uncorrelated with X and P) and stability (split-half δ's agree).
    Without c the four criteria are reported as untestable assumptions.
    """
    if s.c is None:
        logger.info("criteria requested on observational data; reporting assumptions only")
        return _untestable(critical_t)

    n = s.n
    proj = _projection(s.c, s.x, s.p)

    t_p = _abs_t(proj["t_delta_p"], proj["delta_p"])
    relevance = CriterionResult(
        "relevance",
        CriterionStatus.PASS.value if t_p > critical_t else CriterionStatus.FAIL.value,
        {"delta_p": proj["delta_p"], "t_stat": proj["t_delta_p"]},
    )

    t_x = _abs_t(proj["t_delta_x"], proj["delta_x"])
    sufficiency = CriterionResult(
        "sufficiency",
        CriterionStatus.PASS.value if t_x < critical_t else CriterionStatus.FAIL.value,
        {"delta_x": proj["delta_x"], "t_stat": proj["t_delta_x"]},
    )

    # corr·√n is approximately N(0,1) under zero correlation
    if s.u is None:
        exogeneity = CriterionResult(
            "exogeneity", CriterionStatus.UNTESTED.value,
            note="identification assumption; the sample carries no u column",
        )
    elif np.ptp(s.u) > 0:
        cov_up = sample_cov(s.u, s.p)
        cov_ux = sample_cov(s.u, s.x)
        sd_u = math.sqrt(sample_cov(s.u, s.u))
        z_p = cov_up / (sd_u * math.sqrt(sample_cov(s.p, s.p))) * math.sqrt(n)
        z_x = cov_ux / (sd_u * math.sqrt(sample_cov(s.x, s.x))) * math.sqrt(n)
        ok = abs(z_p) < critical_t and abs(z_x) < critical_t
        exogeneity = CriterionResult(
            "exogeneity",
            CriterionStatus.PASS.value if ok else CriterionStatus.FAIL.value,
            {"cov_up": cov_up, "cov_ux": cov_ux, "z_up": z_p, "z_ux": z_x},
        )
    else:
        exogeneity = CriterionResult(
            "exogeneity", CriterionStatus.PASS.value,
            {"cov_up": 0.0, "cov_ux": 0.0}, note="U is identically zero in this sample",
        )

    half = n // 2
    first  = s.slice(0, half)
    second = s.slice(half, n)
    est_a = ols_two_regressor(first.c, first.x, first.p)
    est_b = ols_two_regressor(second.c, second.x, second.p)
    exact = _is_exact(est_a, first.c) or _is_exact(est_b, second.c)
    diffs = {}
    z_max = 0.0
    for i, name in enumerate(("delta_x", "delta_p")):
        diff = abs(est_a.slopes[i] - est_b.slopes[i])
        se = 0.0 if exact else math.hypot(est_a.se_slopes[i], est_b.se_slopes[i])
        diffs[f"abs_diff_{name}"] = diff
        z_max = max(z_max, (diff / se) if se > 0 else (0.0 if diff <= 1e-8 * (1.0 + abs(est_a.slopes[i])) else math.inf))
    stability = CriterionResult(
        "stability",
        CriterionStatus.PASS.value if z_max < critical_t else CriterionStatus.FAIL.value,
        {
            "first_delta_x": est_a.slopes[0], "first_delta_p": est_a.slopes[1],
            "second_delta_x": est_b.slopes[0], "second_delta_p": est_b.slopes[1],
            **diffs, "max_z": z_max,
        },
        note="split-half comparison; a minimal check, not a structural-break test",
    )

    return CriteriaReport(relevance, sufficiency, exogeneity, stability, critical_t=critical_t)
