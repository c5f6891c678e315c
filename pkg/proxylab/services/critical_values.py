"""
services/critical_values.py
─────────────────────────────────────────────────────────────────────
Embedded critical-value tables. No runtime simulation.

ADF (left tail), response surface  crit(T) = b₀ + b₁/T + b₂/T² + b₃/T³
    MacKinnon, J.G. (2010), "Critical Values for Cointegration Tests",
    Queen's Economics Department Working Paper No. 1227, Table 2, N = 1.
    T is the number of observations in the test regression.

Johansen trace / maximum-eigenvalue, constant restricted to the
cointegration space
    Osterwald-Lenum, M. (1992), "A Note with Quantiles of the Asymptotic
    Distribution of the Maximum Likelihood Cointegration Rank Test
    Statistics", Oxford Bulletin of Economics and Statistics 54(3),
    Table 1*. Indexed by p − r.

The version strings are written to every run manifest.
"""

from __future__ import annotations

from typing import Dict, Tuple

from ..exceptions import ConfigError

TABLE_VERSIONS: Dict[str, str] = {
    "adf":      "MacKinnon-2010-WP1227-Table2-N1",
    "johansen": "Osterwald-Lenum-1992-Table1star",
}

LEVELS: Tuple[str, ...] = ("1%", "5%", "10%")


# ── ADF response surfaces ────────────────────────────────────────────
#  spec → level → (b₀, b₁, b₂, b₃)

ADF_RESPONSE_SURFACE: Dict[str, Dict[str, Tuple[float, float, float, float]]] = {
    "constant": {
        "1%":  (-3.43035, -6.5393, -16.786, -79.433),
        "5%":  (-2.86154, -2.8903,  -4.234, -40.040),
        "10%": (-2.56677, -1.5384,  -2.809,   0.0),
    },
    "constant_trend": {
        "1%":  (-3.95877, -9.0531, -28.428, -134.155),
        "5%":  (-3.41049, -4.3904,  -9.036,  -45.374),
        "10%": (-3.12705, -2.5856,  -3.925,  -22.380),
    },
}


def adf_critical_values(spec: str, nobs: int) -> Dict[str, float]:
    try:
        surface = ADF_RESPONSE_SURFACE[spec]
    except KeyError:
        raise ConfigError(f"no ADF table for spec {spec!r}") from None
    t = float(nobs)
    return {
        level: b0 + b1 / t + b2 / t ** 2 + b3 / t ** 3
        for level, (b0, b1, b2, b3) in surface.items()
    }


# ── Johansen, restricted constant ────────────────────────────────────
#  p − r → {90%, 95%, 99%}

JOHANSEN_TRACE: Dict[int, Dict[str, float]] = {
    1: {"10%": 7.52,  "5%": 9.24,  "1%": 12.97},
    2: {"10%": 17.85, "5%": 19.96, "1%": 24.60},
}

JOHANSEN_MAX_EIG: Dict[int, Dict[str, float]] = {
    1: {"10%": 7.52,  "5%": 9.24,  "1%": 12.97},
    2: {"10%": 13.75, "5%": 15.67, "1%": 20.20},
}


def johansen_critical_values(n_vars: int, rank: int, statistic: str = "trace") -> Dict[str, float]:
    table = JOHANSEN_TRACE if statistic == "trace" else JOHANSEN_MAX_EIG
    try:
        return dict(table[n_vars - rank])
    except KeyError:
        raise ConfigError(f"no Johansen table entry for p − r = {n_vars - rank}") from None
