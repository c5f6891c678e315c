"""
services/dgp_service.py
─────────────────────────────────────────────────────────────────────
Latent-factor data-generating process.

True model:            Y = α₀ + α₁X + α₂C + U
Perfect proxy:         P = λC,  λ > 0
Imperfect proxy:       C = δ₀ + δ_X X + δ_P P + V,  E[V | X, P] = 0

PerfectProxy mode draws (X, C) jointly and sets P = λC.
ImperfectProxy mode draws (X, P) jointly and builds C from the
projection, so E[V | X, P] = 0 holds by construction.

Config files are plain ``key = value`` lines:

    mode    = perfect_proxy
    alpha2  = 3
    lambda  = 2
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from decouple import RepositoryEnv
from django.db import models

from ..exceptions import ConfigError
from .stats_core import Vector, as_vector

logger = logging.getLogger(__name__)

MIN_SAMPLE_SIZE = 10
_SQRT3 = math.sqrt(3.0)


class ProxyMode(models.TextChoices):
    PERFECT   = "perfect_proxy",   "Perfect proxy (P = λC)"
    IMPERFECT = "imperfect_proxy", "Imperfect proxy (C = δ₀ + δ_X X + δ_P P + V)"


class ShockDistribution(models.TextChoices):
    GAUSSIAN = "gaussian", "Gaussian"
    UNIFORM  = "uniform",  "Uniform (unit variance)"


_MODE_ALIASES = {
    "perfect":         ProxyMode.PERFECT,
    "perfectproxy":    ProxyMode.PERFECT,
    "perfect_proxy":   ProxyMode.PERFECT,
    "imperfect":       ProxyMode.IMPERFECT,
    "imperfectproxy":  ProxyMode.IMPERFECT,
    "imperfect_proxy": ProxyMode.IMPERFECT,
}


# ══════════════════════════════════════════════════════════════════════
#  DGP CONFIG
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class DgpConfig:
    """Structural parameters of the true model and of the proxy relation."""
    alpha0:  float = 0.0
    alpha1:  float = 1.0
    alpha2:  float = 1.0
    lambda_: float = 1.0          # P = λC
    delta0:  float = 0.0
    delta_x: float = 0.0
    delta_p: float = 1.0
    sigma_u: float = 1.0
    sigma_v: float = 1.0
    rho_xc:  float = 0.5
    sigma_x: float = 1.0
    sigma_c: float = 1.0
    rho_xp:  float = 0.5          # ImperfectProxy: corr(X, P)
    sigma_p: float = 1.0          # ImperfectProxy: sd(P)
    mode:    str   = ProxyMode.PERFECT
    shocks:  str   = ShockDistribution.GAUSSIAN

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in ("mode", "shocks"):
                continue
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{f.name} must be a finite number, got {value!r}")

        if self.mode not in ProxyMode.values:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {ProxyMode.values}")
        if self.shocks not in ShockDistribution.values:
            raise ConfigError(f"unknown shocks {self.shocks!r}; expected one of {ShockDistribution.values}")
        object.__setattr__(self, "mode", ProxyMode(self.mode).value)
        object.__setattr__(self, "shocks", ShockDistribution(self.shocks).value)
        if self.lambda_ <= 0:
            raise ConfigError(f"lambda must be > 0, got {self.lambda_}")
        if self.sigma_x <= 0 or self.sigma_c <= 0 or self.sigma_p <= 0:
            raise ConfigError("sigma_x, sigma_c and sigma_p must be strictly positive")
        if self.sigma_u < 0 or self.sigma_v < 0:
            raise ConfigError("sigma_u and sigma_v must be non-negative")
        if not -1.0 < self.rho_xc < 1.0:
            raise ConfigError(f"rho_xc must lie in (−1, 1), got {self.rho_xc}")
        if not -1.0 < self.rho_xp < 1.0:
            raise ConfigError(f"rho_xp must lie in (−1, 1), got {self.rho_xp}")

    @property
    def proxy_mode(self) -> ProxyMode:
        return ProxyMode(self.mode)

    def replace(self, **changes) -> "DgpConfig":
        return dataclasses.replace(self, **changes)

    # ── Population moments ───────────────────────────────────────────
    @property
    def cov_xc(self) -> float:
        """Population Cov(X, C) implied by the DGP."""
        if self.proxy_mode == ProxyMode.PERFECT:
            return self.rho_xc * self.sigma_x * self.sigma_c
        cov_xp = self.rho_xp * self.sigma_x * self.sigma_p
        return self.delta_x * self.sigma_x ** 2 + self.delta_p * cov_xp

    @property
    def omitted_target(self) -> float:
        """α₁ + α₂·Cov(X,C)/V(X): the mean of the short-regression slope."""
        return self.alpha1 + self.alpha2 * self.cov_xc / self.sigma_x ** 2


# ── key = value file mapping ─────────────────────────────────────────

CONFIG_KEYS: Dict[str, str] = {
    "mode":    "mode",
    "alpha0":  "alpha0",
    "alpha1":  "alpha1",
    "alpha2":  "alpha2",
    "lambda":  "lambda_",
    "delta0":  "delta0",
    "deltaX":  "delta_x",
    "deltaP":  "delta_p",
    "sigma_u": "sigma_u",
    "sigma_v": "sigma_v",
    "rho_xc":  "rho_xc",
    "sigma_x": "sigma_x",
    "sigma_c": "sigma_c",
    "rho_xp":  "rho_xp",
    "sigma_p": "sigma_p",
    "shocks":  "shocks",
}


def parse_mode(raw: str) -> ProxyMode:
    key = str(raw).strip().lower().replace("-", "_")
    try:
        return _MODE_ALIASES[key]
    except KeyError:
        raise ConfigError(f"unknown mode {raw!r}") from None


def config_from_mapping(raw: Dict[str, str]) -> DgpConfig:
    """Build a DgpConfig from file-style keys; unknown keys are errors."""
    kwargs: Dict[str, object] = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr = CONFIG_KEYS[key]
        if attr == "mode":
            kwargs[attr] = parse_mode(value).value
        elif attr == "shocks":
            kwargs[attr] = str(value).strip().lower()
        else:
            try:
                kwargs[attr] = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"config key {key!r}: cannot parse {value!r} as a number") from None
    return DgpConfig(**kwargs)


def load_dgp_config(path) -> DgpConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    repo = RepositoryEnv(str(path))
    cfg  = config_from_mapping(dict(repo.data))
    logger.debug("Loaded DGP config from %s: %s", path, cfg)
    return cfg


def dump_dgp_config(config: DgpConfig) -> str:
    """Serialise to ``key = value`` lines, one per parameter, fixed key order."""
    lines = []
    for key, attr in CONFIG_KEYS.items():
        value = getattr(config, attr)
        lines.append(f"{key} = {value}" if attr in ("mode", "shocks") else f"{key} = {float(value)!r}")
    return "\n".join(lines) + "\n"


def save_dgp_config(config: DgpConfig, path) -> Path:
    path = Path(path)
    path.write_text(dump_dgp_config(config), encoding="utf-8")
    return path


# ══════════════════════════════════════════════════════════════════════
#  SAMPLE
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class Sample:
    """Observed columns (y, x, p) plus latent (c, u, v) in simulation mode."""
    y: Vector
    x: Vector
    p: Vector
    c: Optional[Vector] = None
    u: Optional[Vector] = None
    v: Optional[Vector] = None
    seed: Optional[int] = None
    n:    int = field(init=False)

    def __post_init__(self):
        columns = {k: as_vector(col, k) for k, col in self._present().items()}
        lengths = {len(col) for col in columns.values()}
        if len(lengths) != 1:
            raise ConfigError(f"sample columns differ in length: { {k: len(c) for k, c in columns.items()} }")
        for k, col in columns.items():
            object.__setattr__(self, k, col)
        object.__setattr__(self, "n", lengths.pop())

    def _present(self) -> Dict[str, Vector]:
        return {k: getattr(self, k) for k in ("y", "x", "p", "c", "u", "v") if getattr(self, k) is not None}

    @property
    def has_latent(self) -> bool:
        return self.c is not None and self.u is not None

    def columns(self) -> Dict[str, Vector]:
        """Present columns in export order y, x, p[, c, u, v]."""
        return self._present()

    def observed(self) -> "Sample":
        """Drop the latent columns, as an analyst would see the data."""
        return Sample(y=self.y, x=self.x, p=self.p, seed=self.seed)

    def slice(self, start: int, stop: int) -> "Sample":
        cols = {k: v[start:stop] for k, v in self._present().items()}
        return Sample(seed=self.seed, **cols)


# ══════════════════════════════════════════════════════════════════════
#  SIMULATOR
# ══════════════════════════════════════════════════════════════════════

def _standard_shocks(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    """Mean-zero, unit-variance draws from the configured family."""
    if dist == ShockDistribution.UNIFORM:
        return rng.uniform(-_SQRT3, _SQRT3, size=shape)
    return rng.standard_normal(size=shape)


def simulate(config: DgpConfig, n: int, seed: int) -> Sample:
    """
    Draw one sample of size ``n``. Deterministic for a fixed
    (config, n, seed); the column draw order is part of that contract.
    """
    if int(n) != n or n < MIN_SAMPLE_SIZE:
        raise ConfigError(f"n must be an integer ≥ {MIN_SAMPLE_SIZE}, got {n}")
    if int(seed) != seed or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed}")
    n, seed = int(n), int(seed)

    rng = np.random.default_rng(seed)
    z   = _standard_shocks(rng, config.shocks, (n, 4))

    if config.proxy_mode == ProxyMode.PERFECT:
        rho = config.rho_xc
        x = config.sigma_x * z[:, 0]
        c = config.sigma_c * (rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1])
        p = config.lambda_ * c
        v = None
    else:
        rho = config.rho_xp
        x = config.sigma_x * z[:, 0]
        p = config.sigma_p * (rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1])
        v = config.sigma_v * z[:, 2]
        c = config.delta0 + config.delta_x * x + config.delta_p * p + v

    u = config.sigma_u * z[:, 3]
    y = config.alpha0 + config.alpha1 * x + config.alpha2 * c + u

    return Sample(y=y, x=x, p=p, c=c, u=u, v=v, seed=seed)
