"""
services/vecm_service.py
─────────────────────────────────────────────────────────────────────
Bivariate cointegration pipeline with the constant restricted to the
cointegration space:

    Δy_t = α·β'[y_{t−1}; 1] + Σ_{i=1..k} Γᵢ·Δy_{t−i} + ε_t

    johansen_trace   reduced-rank eigenproblem, trace + max-eigenvalue
    fit_vecm         rank-1 model, β normalised to (1, −b, −c)
    ect / equilibrium_level / ecm_adjustment_step
    irf              orthogonalised responses from the level-VAR form
    simulate_vecm_pair  synthetic cointegrated pair with known α, β, Γ
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..exceptions import (
    ConfigError,
    InsufficientObservationsError,
    InvalidInputError,
    SingularMomentError,
    UnsupportedRankError,
)
from .critical_values import johansen_critical_values
from .stats_core import ols_general, residualize

logger = logging.getLogger(__name__)

MIN_PAIR_OBS = 30
MIN_JOHANSEN_ROWS = 30

# smallest eigenvalue of a moment matrix in correlation form
SINGULAR_RTOL = 1e-10

# |t| thresholds for ***, **, *
STAR_THRESHOLDS: Tuple[Tuple[float, str], ...] = ((3.29, "***"), (2.58, "**"), (1.96, "*"))


def significance_stars(t: Optional[float]) -> str:
    if t is None or not math.isfinite(t):
        return "n.s." if t is None else "***"
    for threshold, stars in STAR_THRESHOLDS:
        if abs(t) > threshold:
            return stars
    return "n.s."


# ══════════════════════════════════════════════════════════════════════
#  DATA
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class TimeSeriesPair:
    """Two equally spaced series, rows = time, no gaps."""
    labels: Tuple[str, str]
    obs:    np.ndarray
    dates:  Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        obs = np.array(self.obs, dtype=np.float64, copy=True)
        if obs.ndim != 2 or obs.shape[1] != 2:
            raise InvalidInputError(f"TimeSeriesPair needs an n×2 matrix, got shape {obs.shape}")
        if not np.all(np.isfinite(obs)):
            row = int(np.flatnonzero(~np.all(np.isfinite(obs), axis=1))[0])
            raise InvalidInputError(f"TimeSeriesPair: missing or non-finite value at row {row}")
        if obs.shape[0] < MIN_PAIR_OBS:
            raise InsufficientObservationsError(f"TimeSeriesPair needs n ≥ {MIN_PAIR_OBS}, got {obs.shape[0]}")
        labels = tuple(str(label) for label in self.labels)
        if len(labels) != 2:
            raise InvalidInputError(f"TimeSeriesPair needs two labels, got {labels}")
        if self.dates is not None and len(self.dates) != obs.shape[0]:
            raise InvalidInputError("TimeSeriesPair: dates and observations differ in length")
        obs.setflags(write=False)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "labels", labels)
        if self.dates is not None:
            object.__setattr__(self, "dates", tuple(str(d) for d in self.dates))

    @property
    def n(self) -> int:
        return int(self.obs.shape[0])

    def column(self, which) -> np.ndarray:
        if isinstance(which, str):
            if which not in self.labels:
                raise ConfigError(f"no column {which!r}; available: {self.labels}")
            which = self.labels.index(which)
        return self.obs[:, int(which)]


# ══════════════════════════════════════════════════════════════════════
#  JOHANSEN
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class JohansenResult:
    trace_stats:    np.ndarray           # r = 0, r ≤ 1
    max_eig_stats:  np.ndarray           # r = 0, r = 1
    eigenvalues:    np.ndarray           # descending
    eigenvectors:   np.ndarray           # 3×2, columns match eigenvalues; rows y1, y2, const
    rank_selected:  int
    trace_critical: Tuple[Dict[str, float], ...]
    max_eig_critical: Tuple[Dict[str, float], ...]
    n_obs:          int
    lags_diff:      int

    def __iter__(self):
        # (trace_stats, rank_selected, eigenvectors)
        return iter((self.trace_stats, self.rank_selected, self.eigenvectors))

    def as_dict(self) -> dict:
        return {
            "trace_stats":      [float(v) for v in self.trace_stats],
            "max_eig_stats":    [float(v) for v in self.max_eig_stats],
            "eigenvalues":      [float(v) for v in self.eigenvalues],
            "rank_selected":    self.rank_selected,
            "trace_critical":   [dict(c) for c in self.trace_critical],
            "max_eig_critical": [dict(c) for c in self.max_eig_critical],
            "n_obs":            self.n_obs,
            "lags_diff":        self.lags_diff,
        }


def _design(y: np.ndarray, lags_diff: int):
    """Z0 = Δy_t, Z1 = [y_{t−1}, 1], Z2 = [Δy_{t−1} .. Δy_{t−k}] over the usable rows."""
    dy = np.diff(y, axis=0)
    rows = np.arange(lags_diff, dy.shape[0])
    z0 = dy[rows]
    z1 = np.column_stack([y[rows], np.ones(len(rows))])
    z2 = np.column_stack([dy[rows - i] for i in range(1, lags_diff + 1)]) if lags_diff else None
    return z0, z1, z2


def _check_moment(s: np.ndarray, what: str) -> None:
    d = np.diag(s)
    if np.any(d <= 0) or not np.all(np.isfinite(s)):
        raise SingularMomentError(f"{what} has a zero-variance direction")
    scale = 1.0 / np.sqrt(d)
    corr  = s * np.outer(scale, scale)
    smallest = float(np.linalg.eigvalsh(corr)[0])
    if smallest < SINGULAR_RTOL:
        raise SingularMomentError(f"{what} is numerically singular (min eigenvalue {smallest:.3e} in correlation form)")


def _check_lags(lags_diff: int) -> int:
    if int(lags_diff) != lags_diff or lags_diff < 0:
        raise ConfigError(f"lags_diff must be a non-negative integer, got {lags_diff}")
    return int(lags_diff)


def johansen_trace(ts: TimeSeriesPair, lags_diff: int = 1) -> JohansenResult:
    lags_diff = _check_lags(lags_diff)
    if ts.n - lags_diff - 2 < MIN_JOHANSEN_ROWS:
        raise InsufficientObservationsError(
            f"johansen_trace needs n − lags_diff − 2 ≥ {MIN_JOHANSEN_ROWS}; got n={ts.n}, lags_diff={lags_diff}"
        )

    z0, z1, z2 = _design(ts.obs, lags_diff)
    t_obs = z0.shape[0]
    r0 = residualize(z0, z2)
    r1 = residualize(z1, z2)

    s00 = r0.T @ r0 / t_obs
    s01 = r0.T @ r1 / t_obs
    s11 = r1.T @ r1 / t_obs
    _check_moment(s00, "S00 (differences)")
    _check_moment(s11, "S11 (lagged levels and constant)")

    # S11 = LL'  →  L⁻¹ S10 S00⁻¹ S01 L⁻ᵀ v = λ v,  β = L⁻ᵀ v
    chol = linalg.cholesky(s11, lower=True)
    s00_inv_s01 = linalg.solve(s00, s01, assume_a="pos")
    half = linalg.solve_triangular(chol, s01.T @ s00_inv_s01, lower=True)
    sym  = linalg.solve_triangular(chol, half.T, lower=True)
    sym  = 0.5 * (sym + sym.T)
    eigvals, eigvecs = linalg.eigh(sym)

    order   = np.argsort(eigvals)[::-1][:2]
    lambdas = np.clip(eigvals[order], 0.0, 1.0 - 1e-15)
    vectors = linalg.solve_triangular(chol.T, eigvecs[:, order], lower=False)

    log_terms = np.log1p(-lambdas)
    trace   = np.array([-t_obs * log_terms.sum(), -t_obs * log_terms[1]])
    max_eig = np.array([-t_obs * log_terms[0], -t_obs * log_terms[1]])

    trace_crit = tuple(johansen_critical_values(2, r, "trace") for r in (0, 1))
    max_crit   = tuple(johansen_critical_values(2, r, "max_eig") for r in (0, 1))
    rank = 2
    for r in (0, 1):
        if trace[r] < trace_crit[r]["5%"]:
            rank = r
            break

    logger.debug("Johansen: eigenvalues=%s trace=%s rank=%d", lambdas, trace, rank)
    return JohansenResult(
        trace_stats=trace,
        max_eig_stats=max_eig,
        eigenvalues=lambdas,
        eigenvectors=vectors,
        rank_selected=rank,
        trace_critical=trace_crit,
        max_eig_critical=max_crit,
        n_obs=t_obs,
        lags_diff=lags_diff,
    )


def normalize_beta(vector) -> np.ndarray:
    """Scale a cointegrating vector so its first entry is exactly 1."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (3,):
        raise InvalidInputError(f"beta must have 3 entries (y1, y2, const), got shape {vector.shape}")
    if abs(vector[0]) <= 1e-12 * max(1.0, float(np.max(np.abs(vector)))):
        raise SingularMomentError("cointegrating vector has no weight on the first series; cannot normalise")
    beta = vector / vector[0]
    beta[0] = 1.0
    return beta


# ══════════════════════════════════════════════════════════════════════
#  VECM
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class VecmModel:
    beta:          np.ndarray                 # (1, −b, −c) on [y1_{t−1}, y2_{t−1}, 1]
    alpha:         np.ndarray
    gamma:         np.ndarray                 # Γ₁
    resid_cov:     np.ndarray
    alpha_se:      np.ndarray = field(default_factory=lambda: np.zeros(2))
    trace_stats:   np.ndarray = field(default_factory=lambda: np.full(2, np.nan))
    rank_selected: int = 1
    gamma_se:      np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    gammas:        Tuple[np.ndarray, ...] = ()  # Γ₁..Γ_k; defaults to (gamma,)
    n_obs:         int = 0
    labels:        Tuple[str, str] = ("y1", "y2")
    eigenvalues:   np.ndarray = field(default_factory=lambda: np.full(2, np.nan))
    max_eig_stats: np.ndarray = field(default_factory=lambda: np.full(2, np.nan))

    def __post_init__(self):
        beta  = np.array(self.beta, dtype=np.float64)
        alpha = np.array(self.alpha, dtype=np.float64)
        gamma = np.array(self.gamma, dtype=np.float64)
        cov   = np.array(self.resid_cov, dtype=np.float64)
        if beta.shape != (3,) or beta[0] != 1.0:
            raise InvalidInputError("beta must be a 3-vector with beta[0] == 1 (use normalize_beta)")
        if alpha.shape != (2,) or gamma.shape != (2, 2) or cov.shape != (2, 2):
            raise InvalidInputError("alpha must be 2-vector; gamma and resid_cov 2×2")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=0.0):
            raise InvalidInputError("resid_cov must be symmetric")
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise InvalidInputError("resid_cov must be positive definite")
        gammas = tuple(np.array(g, dtype=np.float64) for g in self.gammas) or (gamma,)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "resid_cov", cov)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "alpha_se", np.array(self.alpha_se, dtype=np.float64))
        object.__setattr__(self, "gamma_se", np.array(self.gamma_se, dtype=np.float64))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def lags_diff(self) -> int:
        return len(self.gammas)

    @property
    def alpha_t(self) -> Tuple[Optional[float], Optional[float]]:
        return tuple(
            (float(a) / float(se)) if se > 0 else None
            for a, se in zip(self.alpha, self.alpha_se)
        )

    def stars(self, i: int) -> str:
        """Significance label of αᵢ."""
        return significance_stars(self.alpha_t[i])

    @property
    def pi_levels(self) -> np.ndarray:
        """αβ'_y, the 2×2 long-run impact on the lagged levels."""
        return np.outer(self.alpha, self.beta[:2])

    def as_dict(self) -> dict:
        return {
            "labels":        list(self.labels),
            "beta":          [float(v) for v in self.beta],
            "alpha":         [float(v) for v in self.alpha],
            "alpha_se":      [float(v) for v in self.alpha_se],
            "alpha_t":       list(self.alpha_t),
            "alpha_stars":   [self.stars(0), self.stars(1)],
            "gamma":         self.gamma.tolist(),
            "gamma_se":      self.gamma_se.tolist(),
            "resid_cov":     self.resid_cov.tolist(),
            "trace_stats":   [float(v) for v in self.trace_stats],
            "max_eig_stats": [float(v) for v in self.max_eig_stats],
            "eigenvalues":   [float(v) for v in self.eigenvalues],
            "rank_selected": self.rank_selected,
            "lags_diff":     self.lags_diff,
            "n_obs":         self.n_obs,
        }


def fit_vecm(
    ts: TimeSeriesPair,
    rank: int = 1,
    lags_diff: int = 1,
    johansen: Optional[JohansenResult] = None,
) -> VecmModel:
    """
    Rank-1 VECM. β comes from the leading Johansen eigenvector; α and Γ
    from per-equation least squares of Δy_t on (ECT_{t−1}, Δy lags).
    """
    if rank != 1:
        raise UnsupportedRankError(f"only cointegration rank 1 is supported, got rank={rank}")
    lags_diff = _check_lags(lags_diff)
    jo = johansen if johansen is not None else johansen_trace(ts, lags_diff)
    if jo.lags_diff != lags_diff:
        raise ConfigError(f"Johansen result used lags_diff={jo.lags_diff}, model asks for {lags_diff}")
    beta = normalize_beta(jo.eigenvectors[:, 0])

    z0, z1, z2 = _design(ts.obs, lags_diff)
    ect_lag = z1 @ beta
    lag_cols = [] if z2 is None else [z2[:, j] for j in range(z2.shape[1])]

    alpha, alpha_se = np.empty(2), np.empty(2)
    gamma_coef, gamma_se = np.zeros((lags_diff, 2, 2)), np.zeros((lags_diff, 2, 2))
    resid = np.empty_like(z0)
    for eq in range(2):
        fit = ols_general(z0[:, eq], [ect_lag] + lag_cols, intercept=False)
        alpha[eq], alpha_se[eq] = fit.slopes[0], fit.se_slopes[0]
        for i in range(lags_diff):
            gamma_coef[i, eq] = fit.slopes[1 + 2 * i: 3 + 2 * i]
            gamma_se[i, eq]   = fit.se_slopes[1 + 2 * i: 3 + 2 * i]
        resid[:, eq] = fit.residuals

    t_obs = z0.shape[0]
    resid_cov = resid.T @ resid / t_obs
    resid_cov = 0.5 * (resid_cov + resid_cov.T)
    if np.linalg.eigvalsh(resid_cov)[0] <= 0:
        raise SingularMomentError("VECM residual covariance is not positive definite")

    gammas = tuple(gamma_coef[i] for i in range(lags_diff))
    model = VecmModel(
        beta=beta,
        alpha=alpha,
        gamma=gammas[0] if gammas else np.zeros((2, 2)),
        resid_cov=resid_cov,
        alpha_se=alpha_se,
        trace_stats=jo.trace_stats,
        rank_selected=jo.rank_selected,
        gamma_se=gamma_se[0] if lags_diff else np.zeros((2, 2)),
        gammas=gammas,
        n_obs=t_obs,
        labels=ts.labels,
        eigenvalues=jo.eigenvalues,
        max_eig_stats=jo.max_eig_stats,
    )
    if jo.rank_selected != 1:
        logger.warning("fit_vecm: trace test selected rank %d; fitting rank 1 anyway", jo.rank_selected)
    logger.info(
        "VECM fitted on %s: beta=%s alpha=%s (%s, %s)",
        "/".join(ts.labels), np.round(beta, 4), np.round(alpha, 4), model.stars(0), model.stars(1),
    )
    return model


# ── Equilibrium arithmetic ───────────────────────────────────────────

def ect(model: VecmModel, y1_lag: float, y2_lag: float) -> float:
    """β'[y1, y2, 1]."""
    b = model.beta
    return float(b[0] * y1_lag + (b[1] * y2_lag + b[2]))


def equilibrium_level(model: VecmModel, y2_lag: float) -> float:
    """The y1 that sets the ECT to zero for the given y2."""
    b = model.beta
    return float(-(b[1] * y2_lag + b[2]) / b[0])


def ect_series(model: VecmModel, ts: TimeSeriesPair) -> np.ndarray:
    """β'[y_t, 1] for every row of the pair."""
    b = model.beta
    return b[0] * ts.obs[:, 0] + (b[1] * ts.obs[:, 1] + b[2])


def ecm_adjustment_step(model: VecmModel, y_lag: Sequence[float], dy_lag: Sequence[float]) -> np.ndarray:
    """
    Predicted Δy_t = α·ECT(y_lag) + Σ Γᵢ·dy_lag[i]. ``dy_lag`` is one
    2-vector (Δy_{t−1}) or a k×2 block of Δy_{t−1} .. Δy_{t−k}.
    """
    y_lag = np.asarray(y_lag, dtype=np.float64)
    dy = np.atleast_2d(np.asarray(dy_lag, dtype=np.float64))
    if y_lag.shape != (2,) or dy.shape[1] != 2:
        raise InvalidInputError("ecm_adjustment_step needs a 2-vector level and 2-vector differences")
    step = model.alpha * ect(model, y_lag[0], y_lag[1])
    for g, d in zip(model.gammas, dy):
        step = step + g @ d
    return step


# ══════════════════════════════════════════════════════════════════════
#  IMPULSE RESPONSES
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class IrfResult:
    responses: np.ndarray                # (H+1)×2×2, [h, response, impulse]
    ordering:  Tuple[int, int]
    labels:    Tuple[str, str] = ("y1", "y2")

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(self.responses.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.responses.shape[0] - 1)

    @property
    def impact(self) -> np.ndarray:
        return self.responses[0]

    def path(self, impulse: int, response: int) -> np.ndarray:
        return self.responses[:, response, impulse]

    def pairs(self):
        """(impulse, response) in panel order: row = impulse, column = response."""
        for impulse in range(2):
            for response in range(2):
                yield impulse, response

    def as_dict(self) -> dict:
        return {
            "labels":   list(self.labels),
            "ordering": list(self.ordering),
            "horizon":  self.horizon,
            "responses": {
                f"{self.labels[i]}->{self.labels[r]}": [float(v) for v in self.path(i, r)]
                for i, r in self.pairs()
            },
        }


def parse_ordering(raw) -> Tuple[int, int]:
    if isinstance(raw, str):
        try:
            raw = [int(tok) for tok in raw.split(",")]
        except ValueError:
            raise ConfigError(f"ordering must look like 0,1 or 1,0; got {raw!r}") from None
    ordering = tuple(int(i) for i in raw)
    if sorted(ordering) != [0, 1]:
        raise ConfigError(f"ordering must be a permutation of (0, 1), got {ordering}")
    return ordering


def level_var_matrices(model: VecmModel) -> Tuple[np.ndarray, ...]:
    """A₁ = I + αβ'_y + Γ₁, Aᵢ = Γᵢ − Γᵢ₋₁, A_{k+1} = −Γ_k."""
    gammas = model.gammas
    mats = [np.eye(2) + model.pi_levels + gammas[0]]
    for i in range(1, len(gammas)):
        mats.append(gammas[i] - gammas[i - 1])
    if np.any(gammas[-1]):
        mats.append(-gammas[-1])
    return tuple(mats)


def impact_matrix(resid_cov: np.ndarray, ordering: Tuple[int, int]) -> np.ndarray:
    """Lower Cholesky factor of Σ under ``ordering``, mapped back to the natural order."""
    order = list(ordering)
    factor = linalg.cholesky(resid_cov[np.ix_(order, order)], lower=True)
    b = np.zeros((2, 2))
    b[np.ix_(order, order)] = factor
    return b


def irf(model: VecmModel, horizon: int, ordering=(0, 1)) -> IrfResult:
    if int(horizon) != horizon or horizon < 1:
        raise ConfigError(f"horizon must be an integer ≥ 1, got {horizon}")
    horizon  = int(horizon)
    ordering = parse_ordering(ordering)

    mats = level_var_matrices(model)
    phis = [np.eye(2)]
    for h in range(1, horizon + 1):
        phi = np.zeros((2, 2))
        for i, a in enumerate(mats, start=1):
            if h - i >= 0:
                phi = phi + a @ phis[h - i]
        phis.append(phi)

    b = impact_matrix(model.resid_cov, ordering)
    responses = np.stack([phi @ b for phi in phis])
    return IrfResult(responses=responses, ordering=ordering, labels=model.labels)


# ══════════════════════════════════════════════════════════════════════
#  SYNTHETIC SYSTEM
# ══════════════════════════════════════════════════════════════════════

def simulate_vecm_pair(
    alpha,
    beta,
    gamma,
    shock_cov,
    n: int,
    seed: int,
    burn_in: int = 100,
    labels: Tuple[str, str] = ("y1", "y2"),
) -> TimeSeriesPair:
    """
    Δy_t = α·β'[y_{t−1}, 1] + Γ·Δy_{t−1} + ε_t,  ε_t ~ N(0, shock_cov).
    The recursion starts at the equilibrium y = (−β₂, 0) and the first
    ``burn_in`` rows are discarded.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta  = np.asarray(beta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    cov   = np.asarray(shock_cov, dtype=np.float64)
    if alpha.shape != (2,) or beta.shape != (3,) or gamma.shape != (2, 2) or cov.shape != (2, 2):
        raise ConfigError("simulate_vecm_pair: alpha 2-vector, beta 3-vector, gamma and shock_cov 2×2")
    if int(n) != n or n < MIN_PAIR_OBS or burn_in < 0 or seed < 0:
        raise ConfigError(f"simulate_vecm_pair: need n ≥ {MIN_PAIR_OBS}, burn_in ≥ 0, seed ≥ 0")
    n, burn_in = int(n), int(burn_in)

    try:
        chol = linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        raise ConfigError("simulate_vecm_pair: shock_cov must be symmetric positive definite") from None

    rng    = np.random.default_rng(int(seed))
    shocks = rng.standard_normal((n + burn_in, 2)) @ chol.T

    total = n + burn_in
    y  = np.empty((total, 2))
    y_prev  = np.array([-beta[2] / beta[0], 0.0])
    dy_prev = np.zeros(2)
    for t in range(total):
        dy = alpha * (beta[:2] @ y_prev + beta[2]) + gamma @ dy_prev + shocks[t]
        y[t] = y_prev + dy
        y_prev, dy_prev = y[t], dy
    return TimeSeriesPair(labels=labels, obs=y[burn_in:])
