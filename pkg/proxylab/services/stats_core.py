"""
services/stats_core.py
─────────────────────────────────────────────────────────────────────
Sample moments and least-squares primitives.

Every estimator in the lab is a ratio of sample moments, so the moment
helpers below are the single source of truth:

    V̂(a)      = Σ(aᵢ − ā)² / (n − 1)
    Ĉov(a, b) = Σ(aᵢ − ā)(bᵢ − b̄) / (n − 1)

The n − 1 denominator cancels in every slope formula; only standard
errors depend on it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy import linalg

from ..exceptions import (
    CollinearityError,
    DegenerateRegressorError,
    InsufficientObservationsError,
    InvalidInputError,
    RankDeficiencyError,
)

logger = logging.getLogger(__name__)

Vector = npt.NDArray[np.float64]


# ══════════════════════════════════════════════════════════════════════
#  CONSTANTS
# ══════════════════════════════════════════════════════════════════════

# V̂(x) ≤ ZERO_VARIANCE_RTOL · mean(x²) counts as a constant regressor
ZERO_VARIANCE_RTOL = 1e-20

# denominator ≤ COLLINEARITY_RTOL · V̂(X)V̂(P) counts as perfect collinearity
COLLINEARITY_RTOL = 1e-12


# ══════════════════════════════════════════════════════════════════════
#  RESULT DATA CLASSES
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class MomentLedger:
    """Sample moments that entered a closed-form fit (None when unused)."""
    var_x:  Optional[float] = None
    var_p:  Optional[float] = None
    cov_xp: Optional[float] = None
    cov_xy: Optional[float] = None
    cov_py: Optional[float] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class OlsFit:
    intercept:     float
    slopes:        Tuple[float, ...]
    residuals:     Vector
    se_slopes:     Tuple[float, ...]
    r_squared:     float
    n_obs:         int
    moment_ledger: MomentLedger = field(default_factory=MomentLedger)
    se_intercept:  Optional[float] = None
    sigma2:        float = 0.0          # SSR / (n − k)

    @property
    def ssr(self) -> float:
        return float(np.dot(self.residuals, self.residuals))

    @property
    def t_stats(self) -> Tuple[Optional[float], ...]:
        """Slope t-ratios; None where the standard error is exactly zero."""
        return tuple(
            (b / se) if se > 0 else None
            for b, se in zip(self.slopes, self.se_slopes)
        )


# ══════════════════════════════════════════════════════════════════════
#  VALIDATION
# ══════════════════════════════════════════════════════════════════════

def as_vector(values, name: str = "values") -> Vector:
    """
    Coerce to a read-only 1-D float64 array.
    Rejects empty input and any NaN/Inf entry.
    """
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name}: expected a 1-D sequence, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name}: empty vector")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise InvalidInputError(f"{name}: non-finite value at position {bad}")
    arr.setflags(write=False)
    return arr


def _same_length(*named: Tuple[str, Vector]) -> int:
    lengths = {name: len(v) for name, v in named}
    if len(set(lengths.values())) != 1:
        raise InvalidInputError(f"length mismatch: {lengths}")
    return next(iter(lengths.values()))


def _require_n(n: int, minimum: int, what: str) -> None:
    if n < minimum:
        raise InsufficientObservationsError(f"{what} needs n ≥ {minimum}, got {n}")


def _is_zero_variance(var: float, x: Vector) -> bool:
    scale = float(np.mean(x * x))
    return var <= 0.0 or scale == 0.0 or var <= ZERO_VARIANCE_RTOL * scale


# ══════════════════════════════════════════════════════════════════════
#  SAMPLE MOMENTS
# ══════════════════════════════════════════════════════════════════════

def sample_cov(a, b) -> float:
    """Ĉov(a, b) with the n − 1 denominator; sample_cov(a, a) is V̂(a)."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    n = _same_length(("a", a), ("b", b))
    _require_n(n, 2, "sample_cov")
    return float(np.dot(a - a.mean(), b - b.mean()) / (n - 1))


def sample_var(a) -> float:
    return sample_cov(a, a)


def _r_squared(y: Vector, residuals: Vector, centered: bool = True) -> float:
    sst = float(np.sum((y - y.mean()) ** 2)) if centered else float(np.dot(y, y))
    if sst == 0.0:
        return 0.0
    r2 = 1.0 - float(np.dot(residuals, residuals)) / sst
    return min(max(r2, 0.0), 1.0)


# ══════════════════════════════════════════════════════════════════════
#  CLOSED FORMS
# ══════════════════════════════════════════════════════════════════════

def ols_single(y, x) -> OlsFit:
    """
    Short regression y = b₀ + b₁x.

        b₁ = Ĉov(x, y) / V̂(x),   b₀ = ȳ − b₁x̄
    """
    y = as_vector(y, "y")
    x = as_vector(x, "x")
    n = _same_length(("y", y), ("x", x))
    _require_n(n, 3, "ols_single")

    var_x  = sample_cov(x, x)
    if _is_zero_variance(var_x, x):
        raise DegenerateRegressorError("regressor x has zero sample variance")
    cov_xy = sample_cov(x, y)

    slope     = cov_xy / var_x
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - intercept - slope * x
    residuals.setflags(write=False)

    sigma2   = float(np.dot(residuals, residuals)) / (n - 2)
    sxx      = (n - 1) * var_x
    se_slope = float(np.sqrt(sigma2 / sxx))
    se_int   = float(np.sqrt(sigma2 * (1.0 / n + x.mean() ** 2 / sxx)))

    return OlsFit(
        intercept=intercept,
        slopes=(float(slope),),
        residuals=residuals,
        se_slopes=(se_slope,),
        r_squared=_r_squared(y, residuals),
        n_obs=n,
        moment_ledger=MomentLedger(var_x=var_x, cov_xy=cov_xy),
        se_intercept=se_int,
        sigma2=sigma2,
    )


def ols_two_regressor(y, x, p) -> OlsFit:
    """
    Long regression y = g₀ + g₁x + g₂p through the symmetric closed forms

        D  = V̂(x)V̂(p) − Ĉov(x,p)²
        g₁ = [Ĉov(x,y)V̂(p) − Ĉov(p,y)Ĉov(x,p)] / D
        g₂ = [Ĉov(p,y)V̂(x) − Ĉov(x,y)Ĉov(x,p)] / D
    """
    y = as_vector(y, "y")
    x = as_vector(x, "x")
    p = as_vector(p, "p")
    n = _same_length(("y", y), ("x", x), ("p", p))
    _require_n(n, 4, "ols_two_regressor")

    var_x = sample_cov(x, x)
    var_p = sample_cov(p, p)
    if _is_zero_variance(var_x, x):
        raise DegenerateRegressorError("regressor x has zero sample variance")
    if _is_zero_variance(var_p, p):
        raise DegenerateRegressorError("regressor p has zero sample variance")

    cov_xp = sample_cov(x, p)
    cov_xy = sample_cov(x, y)
    cov_py = sample_cov(p, y)

    denom = var_x * var_p - cov_xp ** 2
    if denom <= COLLINEARITY_RTOL * var_x * var_p:
        raise CollinearityError(
            f"x and p are perfectly collinear (V̂(x)V̂(p) − Ĉov(x,p)² = {denom:.3e})"
        )

    g1 = (cov_xy * var_p - cov_py * cov_xp) / denom
    g2 = (cov_py * var_x - cov_xy * cov_xp) / denom
    intercept = float(y.mean() - g1 * x.mean() - g2 * p.mean())
    residuals = y - intercept - g1 * x - g2 * p
    residuals.setflags(write=False)

    sigma2 = float(np.dot(residuals, residuals)) / (n - 3)
    scale  = sigma2 / ((n - 1) * denom)
    se_g1  = float(np.sqrt(scale * var_p))
    se_g2  = float(np.sqrt(scale * var_x))

    # intercept variance: σ²[1/n + m'S⁻¹m/(n−1)], m = (x̄, p̄)
    mx, mp = x.mean(), p.mean()
    quad   = (var_p * mx * mx - 2 * cov_xp * mx * mp + var_x * mp * mp) / denom
    se_int = float(np.sqrt(sigma2 * (1.0 / n + quad / (n - 1))))

    return OlsFit(
        intercept=intercept,
        slopes=(float(g1), float(g2)),
        residuals=residuals,
        se_slopes=(se_g1, se_g2),
        r_squared=_r_squared(y, residuals),
        n_obs=n,
        moment_ledger=MomentLedger(
            var_x=var_x, var_p=var_p, cov_xp=cov_xp, cov_xy=cov_xy, cov_py=cov_py,
        ),
        se_intercept=se_int,
        sigma2=sigma2,
    )


# ══════════════════════════════════════════════════════════════════════
#  NORMAL EQUATIONS  (rank-revealing QR, no pseudo-inverse fallback)
# ══════════════════════════════════════════════════════════════════════

def _pivoted_qr(design: np.ndarray, what: str):
    n, k = design.shape
    q, r, piv = linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol  = (diag[0] if diag.size else 0.0) * max(n, k) * np.finfo(np.float64).eps
    rank = int(np.sum(diag > tol))
    if rank < k:
        raise RankDeficiencyError(f"{what}: design matrix has rank {rank} < {k} columns")
    return q, r, piv


def ols_general(y, regressors: Sequence, intercept: bool = True) -> OlsFit:
    """
    Least squares on [1, regressors...] (or on the regressors alone when
    ``intercept`` is False) solved through a column-pivoted QR.
    """
    y = as_vector(y, "y")
    cols = [as_vector(r, f"regressor[{i}]") for i, r in enumerate(regressors)]
    n = _same_length(("y", y), *((f"regressor[{i}]", c) for i, c in enumerate(cols)))

    n_reg = len(cols)
    if intercept:
        cols = [np.ones(n)] + cols
    if not cols:
        raise InvalidInputError("ols_general: no columns to fit")
    k = len(cols)
    _require_n(n, k + 1, "ols_general")

    design = np.column_stack(cols)
    q, r, piv = _pivoted_qr(design, "ols_general")

    coef_p = linalg.solve_triangular(r, q.T @ y)
    coef   = np.empty(k)
    coef[piv] = coef_p

    residuals = y - design @ coef
    residuals.setflags(write=False)
    sigma2 = float(np.dot(residuals, residuals)) / (n - k)

    r_inv = linalg.solve_triangular(r, np.eye(k))
    cov_p = sigma2 * (r_inv @ r_inv.T)
    cov   = np.empty((k, k))
    cov[np.ix_(piv, piv)] = cov_p
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    ledger = MomentLedger()
    if intercept and n_reg in (1, 2):
        x = cols[1]
        ledger = MomentLedger(var_x=sample_cov(x, x), cov_xy=sample_cov(x, y))
        if n_reg == 2:
            p = cols[2]
            ledger = MomentLedger(
                var_x=ledger.var_x, var_p=sample_cov(p, p), cov_xp=sample_cov(x, p),
                cov_xy=ledger.cov_xy, cov_py=sample_cov(p, y),
            )

    offset = 1 if intercept else 0
    return OlsFit(
        intercept=float(coef[0]) if intercept else 0.0,
        slopes=tuple(float(b) for b in coef[offset:]),
        residuals=residuals,
        se_slopes=tuple(float(s) for s in se[offset:]),
        r_squared=_r_squared(y, residuals, centered=intercept),
        n_obs=n,
        moment_ledger=ledger,
        se_intercept=float(se[0]) if intercept else None,
        sigma2=sigma2,
    )


def residualize(targets: np.ndarray, regressors: Optional[np.ndarray]) -> np.ndarray:
    """
    Residuals of every column of ``targets`` regressed (no intercept) on
    ``regressors``. With no regressors the targets come back unchanged.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if regressors is None or np.size(regressors) == 0:
        return targets.copy()
    regressors = np.asarray(regressors, dtype=np.float64)
    if regressors.ndim == 1:
        regressors = regressors[:, None]
    q, _, _ = _pivoted_qr(regressors, "residualize")
    return targets - q @ (q.T @ targets)
