"""
services/monte_carlo_service.py
─────────────────────────────────────────────────────────────────────
Replication engine for the expectation claims of the proxy lab.

Replication r draws its sample with seed = mix_seed(base_seed, r), so a
plan's result depends only on the plan: thread count and completion
order never change a bit of the output. Aggregation always walks the
replications in index order.

Usage:
    plan   = McPlan(config=cfg, n_per_rep=200, replications=10_000, base_seed=7,
                    estimators=("perfect_proxy",))
    result = run_plan(plan)
    result.summaries["gamma2"].z
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from decouple import config as env_config
from django.db import models

from ..exceptions import ConfigError, MonteCarloAbort, ProxyLabError
from .dgp_service import CONFIG_KEYS, DgpConfig, ProxyMode, Sample, config_from_mapping, simulate
from .proxy_service import estimate_imperfect_proxy, estimate_omitted, estimate_perfect_proxy, rescale_gamma2

logger = logging.getLogger(__name__)

MIN_REPLICATIONS = 100
DEFAULT_MAX_FAILURE_RATE = 0.01
DEFAULT_Z_THRESHOLD = 4.0


class EstimatorLabel(models.TextChoices):
    OMITTED         = "omitted",         "Short regression (C omitted)"
    PERFECT_PROXY   = "perfect_proxy",   "Long regression on a perfect proxy"
    IMPERFECT_PROXY = "imperfect_proxy", "Long regression on an imperfect proxy"


# summary keys produced by each estimator, in report order
ESTIMATOR_KEYS: Dict[str, Tuple[str, ...]] = {
    EstimatorLabel.OMITTED:         ("beta1",),
    EstimatorLabel.PERFECT_PROXY:   ("gamma1", "gamma2", "alpha2_proxy"),
    EstimatorLabel.IMPERFECT_PROXY: ("mu_x", "mu_p"),
}

_COMPATIBLE_MODES = {
    EstimatorLabel.OMITTED:         {ProxyMode.PERFECT, ProxyMode.IMPERFECT},
    EstimatorLabel.PERFECT_PROXY:   {ProxyMode.PERFECT},
    EstimatorLabel.IMPERFECT_PROXY: {ProxyMode.IMPERFECT},
}

# sweep name → DgpConfig attribute
SWEEP_PARAMETERS: Dict[str, str] = {
    "alpha2": "alpha2",
    "rho_xc": "rho_xc",
    "lambda": "lambda_",
    "deltaX": "delta_x",
    "deltaP": "delta_p",
    "rho_xp": "rho_xp",
}

# parameters the simulator reads in each mode; any other sweep gives a flat curve
_ACTIVE_SWEEPS: Dict[str, Tuple[str, ...]] = {
    ProxyMode.PERFECT:   ("alpha2", "rho_xc", "lambda"),
    ProxyMode.IMPERFECT: ("alpha2", "deltaX", "deltaP", "rho_xp"),
}


# ══════════════════════════════════════════════════════════════════════
#  SEED MIXING  (documented in docs/formats.md; do not change)
# ══════════════════════════════════════════════════════════════════════

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64_finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(base_seed: int, index: int) -> int:
    """
    SplitMix64 of (base_seed + (index + 1)·φ) mod 2⁶⁴.
    φ is odd and the finalizer is a bijection, so seeds are pairwise
    distinct for all indices below 2⁶⁴.
    """
    if base_seed < 0 or index < 0:
        raise ConfigError("base_seed and replication index must be non-negative")
    return _splitmix64_finalize((int(base_seed) + (int(index) + 1) * _GOLDEN) & _MASK64)


# ══════════════════════════════════════════════════════════════════════
#  PLAN
# ══════════════════════════════════════════════════════════════════════

def _normalize_estimators(labels: Iterable[str]) -> Tuple[str, ...]:
    wanted = set()
    for raw in labels:
        label = str(raw).strip().lower()
        if label not in EstimatorLabel.values:
            raise ConfigError(f"unknown estimator {raw!r}; expected one of {EstimatorLabel.values}")
        wanted.add(label)
    if not wanted:
        raise ConfigError("a plan needs at least one estimator")
    return tuple(label for label in EstimatorLabel.values if label in wanted)


@dataclass(frozen=True)
class McPlan:
    config:       DgpConfig
    n_per_rep:    int
    replications: int
    base_seed:    int
    estimators:   Tuple[str, ...] = (EstimatorLabel.OMITTED,)

    def __post_init__(self):
        if int(self.replications) != self.replications or self.replications < MIN_REPLICATIONS:
            raise ConfigError(f"replications must be an integer ≥ {MIN_REPLICATIONS}, got {self.replications}")
        if int(self.n_per_rep) != self.n_per_rep or self.n_per_rep < 10:
            raise ConfigError(f"n_per_rep must be an integer ≥ 10, got {self.n_per_rep}")
        if int(self.base_seed) != self.base_seed or not 0 <= self.base_seed <= _MASK64:
            raise ConfigError(f"base_seed must be an integer in [0, 2⁶⁴), got {self.base_seed}")
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "n_per_rep", int(self.n_per_rep))
        object.__setattr__(self, "base_seed", int(self.base_seed))

        estimators = _normalize_estimators(self.estimators)
        for label in estimators:
            if self.config.proxy_mode not in _COMPATIBLE_MODES[label]:
                raise ConfigError(f"estimator {label!r} is not defined for a {self.config.mode} DGP")
        object.__setattr__(self, "estimators", estimators)

    @property
    def summary_keys(self) -> Tuple[str, ...]:
        return tuple(key for label in self.estimators for key in ESTIMATOR_KEYS[label])

    def seeds(self) -> List[int]:
        return [mix_seed(self.base_seed, r) for r in range(self.replications)]

    def replace(self, **changes) -> "McPlan":
        values = {f: getattr(self, f) for f in ("config", "n_per_rep", "replications", "base_seed", "estimators")}
        values.update(changes)
        return McPlan(**values)

    # ── JSON payload (Celery, manifests) ─────────────────────────────
    def as_dict(self) -> dict:
        return {
            "config":       {key: getattr(self.config, attr) for key, attr in CONFIG_KEYS.items()},
            "n_per_rep":    self.n_per_rep,
            "replications": self.replications,
            "base_seed":    self.base_seed,
            "estimators":   list(self.estimators),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "McPlan":
        try:
            cfg = config_from_mapping({k: str(v) for k, v in payload["config"].items()})
            return cls(
                config=cfg,
                n_per_rep=payload["n_per_rep"],
                replications=payload["replications"],
                base_seed=payload["base_seed"],
                estimators=tuple(payload["estimators"]),
            )
        except KeyError as exc:
            raise ConfigError(f"plan payload is missing {exc.args[0]!r}") from None


def default_estimators(config: DgpConfig) -> Tuple[str, ...]:
    if config.proxy_mode == ProxyMode.PERFECT:
        return (EstimatorLabel.OMITTED.value, EstimatorLabel.PERFECT_PROXY.value)
    return (EstimatorLabel.OMITTED.value, EstimatorLabel.IMPERFECT_PROXY.value)


def population_targets(config: DgpConfig) -> Dict[str, float]:
    """Mean of each estimator under the DGP."""
    return {
        "beta1":        config.omitted_target,
        "gamma1":       config.alpha1,
        "gamma2":       config.alpha2 / config.lambda_,
        "alpha2_proxy": config.alpha2,
        "mu_x":         config.alpha1 + config.alpha2 * config.delta_x,
        "mu_p":         config.alpha2 * config.delta_p,
    }


# ══════════════════════════════════════════════════════════════════════
#  RESULTS
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True, eq=False)
class EstimatorSummary:
    key:           str
    mean:          float
    sd:            float
    mc_se:         float
    target:        float
    z:             float
    n_fail:        int
    all_estimates: np.ndarray     # length = replications, NaN where the replication failed

    @property
    def n_success(self) -> int:
        return int(len(self.all_estimates) - self.n_fail)

    def passes(self, threshold: float = DEFAULT_Z_THRESHOLD) -> bool:
        return abs(self.z) < threshold

    def as_dict(self) -> dict:
        return {
            "mean":   self.mean,
            "sd":     self.sd,
            "mc_se":  self.mc_se,
            "target": self.target,
            "z":      self.z,
            "n_fail": self.n_fail,
        }


@dataclass(frozen=True, eq=False)
class McResult:
    plan:      McPlan
    summaries: Dict[str, EstimatorSummary]
    seeds:     Tuple[int, ...]
    failures:  List[dict] = field(default_factory=list)

    @property
    def n_success(self) -> int:
        failed = {f["replication"] for f in self.failures}
        return self.plan.replications - len(failed)

    def __getitem__(self, key: str) -> EstimatorSummary:
        return self.summaries[key]

    def as_dict(self) -> dict:
        return {
            "mode":         self.plan.config.mode,
            "n_per_rep":    self.plan.n_per_rep,
            "replications": self.plan.replications,
            "base_seed":    self.plan.base_seed,
            "n_success":    self.n_success,
            "estimators":   {k: s.as_dict() for k, s in self.summaries.items()},
            "failures":     list(self.failures),
        }

    def estimates_table(self) -> Dict[str, np.ndarray]:
        """Per-replication estimates in replication order (companion CSV)."""
        table = {"replication": np.arange(self.plan.replications), "seed": np.array(self.seeds, dtype=np.uint64)}
        table.update({k: s.all_estimates for k, s in self.summaries.items()})
        return table


# ══════════════════════════════════════════════════════════════════════
#  ENGINE
# ══════════════════════════════════════════════════════════════════════

def _estimates_for(label: str, sample: Sample, config: DgpConfig) -> Dict[str, float]:
    if label == EstimatorLabel.OMITTED:
        return {"beta1": estimate_omitted(sample, config).estimate}
    if label == EstimatorLabel.PERFECT_PROXY:
        g1, g2 = estimate_perfect_proxy(sample, config)
        return {
            "gamma1": g1.estimate,
            "gamma2": g2.estimate,
            "alpha2_proxy": rescale_gamma2(g2.estimate, config.lambda_),
        }
    mu_x, mu_p = estimate_imperfect_proxy(sample, config)
    return {"mu_x": mu_x.estimate, "mu_p": mu_p.estimate}


def _summarize(key: str, values: np.ndarray, target: float) -> EstimatorSummary:
    ok = values[~np.isnan(values)]
    n_fail = int(len(values) - len(ok))
    if len(ok) < 2:
        mean = float(ok[0]) if len(ok) else math.nan
        return EstimatorSummary(key, mean, math.nan, math.nan, target, math.nan, n_fail, values)

    mean  = float(np.mean(ok))
    sd    = float(np.std(ok, ddof=1))
    mc_se = sd / math.sqrt(len(ok))
    gap   = mean - target
    if abs(gap) <= 1e-12 * max(1.0, abs(target)):
        # mean equals the target up to rounding, whatever the spread
        z = 0.0
    elif mc_se > 0:
        z = gap / mc_se
    else:
        z = math.copysign(math.inf, gap)
    return EstimatorSummary(key, mean, sd, mc_se, target, z, n_fail, values)



class MonteCarloRunner:
    """
    Runs one McPlan on a thread pool of ``threads`` workers.

    Usage:
        runner = MonteCarloRunner(plan, threads=4)
        result = runner.run()
    """

    def __init__(
        self,
        plan: McPlan,
        threads: Optional[int] = None,
        max_failure_rate: float = DEFAULT_MAX_FAILURE_RATE,
    ):
        if threads is None:
            threads = env_config("PROXYLAB_THREADS", default=1, cast=int)
        self.plan             = plan
        self.threads          = max(1, int(threads))
        self.max_failure_rate = max_failure_rate

    # ── Public entry point ─────────────────────────────────────────
    def run(self) -> McResult:
        plan  = self.plan
        seeds = plan.seeds()
        logger.info(
            "Monte Carlo started: mode=%s n=%d reps=%d estimators=%s threads=%d",
            plan.config.mode, plan.n_per_rep, plan.replications, ",".join(plan.estimators), self.threads,
        )

        if self.threads == 1:
            outcomes = [self._replicate(r, s) for r, s in enumerate(seeds)]
        else:
            with ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="proxylab-mc") as pool:
                outcomes = list(pool.map(self._replicate, range(plan.replications), seeds))

        keys   = plan.summary_keys
        matrix = np.full((plan.replications, len(keys)), np.nan)
        failures: List[dict] = []
        for r, (values, errors) in enumerate(outcomes):
            for j, key in enumerate(keys):
                if key in values:
                    matrix[r, j] = values[key]
            failures.extend(errors)

        self._check_failures(failures)

        targets   = population_targets(plan.config)
        summaries = {key: _summarize(key, matrix[:, j].copy(), targets[key]) for j, key in enumerate(keys)}

        result = McResult(plan=plan, summaries=summaries, seeds=tuple(seeds), failures=failures)
        logger.info(
            "Monte Carlo complete: %d/%d replications succeeded; %s",
            result.n_success, plan.replications,
            ", ".join(f"{k} z={s.z:.3f}" for k, s in summaries.items()),
        )
        return result

    # ── One replication ────────────────────────────────────────────
    def _replicate(self, index: int, seed: int) -> Tuple[Dict[str, float], List[dict]]:
        plan = self.plan
        values: Dict[str, float] = {}
        errors: List[dict] = []
        try:
            sample = simulate(plan.config, plan.n_per_rep, seed)
        except ProxyLabError as exc:
            return values, [self._failure(index, seed, "simulate", exc)]

        for label in plan.estimators:
            try:
                values.update(_estimates_for(label, sample, plan.config))
            except ProxyLabError as exc:
                errors.append(self._failure(index, seed, label, exc))
        return values, errors

    @staticmethod
    def _failure(index: int, seed: int, stage: str, exc: Exception) -> dict:
        return {
            "replication": index,
            "seed":        seed,
            "estimator":   stage,
            "error":       type(exc).__name__,
            "message":     str(exc),
        }

    def _check_failures(self, failures: List[dict]) -> None:
        if not failures:
            return
        failed = len({f["replication"] for f in failures})
        logger.warning("%d of %d replications failed", failed, self.plan.replications)
        if failed > self.max_failure_rate * self.plan.replications:
            first = failures[0]
            raise MonteCarloAbort(
                f"{failed} of {self.plan.replications} replications failed "
                f"(limit {self.max_failure_rate:.1%}); first: replication {first['replication']} "
                f"{first['error']}: {first['message']}",
                failures=failures,
            )


def run_plan(plan: McPlan, threads: Optional[int] = None, max_failure_rate: float = DEFAULT_MAX_FAILURE_RATE) -> McResult:
    """Entry point for management commands and the Celery task."""
    return MonteCarloRunner(plan, threads=threads, max_failure_rate=max_failure_rate).run()


# ══════════════════════════════════════════════════════════════════════
#  SWEEPS
# ══════════════════════════════════════════════════════════════════════

def parse_sweep(raw: str) -> Tuple[str, List[float]]:
    """``"rho_xc:-0.8,0,0.8"`` → ("rho_xc", [-0.8, 0.0, 0.8])."""
    name, sep, grid = str(raw).partition(":")
    name = name.strip()
    if not sep or not grid.strip():
        raise ConfigError(f"sweep must look like <param>:<v1,v2,...>, got {raw!r}")
    if name not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {name!r}; expected one of {sorted(SWEEP_PARAMETERS)}")
    values = []
    for token in grid.split(","):
        try:
            values.append(float(token))
        except ValueError:
            raise ConfigError(f"sweep value {token!r} is not a number") from None
    return name, values


def bias_curve(
    plan: McPlan,
    parameter: str,
    values: Sequence[float],
    threads: Optional[int] = None,
) -> List[Tuple[float, McResult]]:
    """
    One McResult per grid value. Every grid point reuses the plan's
    base_seed, so neighbouring points share their random draws.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of {sorted(SWEEP_PARAMETERS)}")
    if not values:
        raise ConfigError("sweep grid is empty")

    attr  = SWEEP_PARAMETERS[parameter]
    mode  = plan.config.proxy_mode
    if parameter not in _ACTIVE_SWEEPS[mode]:
        raise ConfigError(
            f"sweep parameter {parameter!r} has no effect in {mode.value} mode; "
            f"sweep one of {list(_ACTIVE_SWEEPS[mode])}"
        )
    curve = []
    for value in values:
        cfg = plan.config.replace(**{attr: float(value)})
        logger.info("sweep %s = %r", parameter, float(value))
        curve.append((float(value), run_plan(plan.replace(config=cfg), threads=threads)))
    return curve


@dataclass(frozen=True, eq=False)
class BiasCurve:
    """A swept parameter and its grid of results, as emitted by the sweep command."""
    parameter: str
    points:    Tuple[Tuple[float, McResult], ...]

    @property
    def grid(self) -> np.ndarray:
        return np.array([value for value, _ in self.points])

    def means(self, key: str) -> np.ndarray:
        return np.array([result[key].mean for _, result in self.points])

    def mc_ses(self, key: str) -> np.ndarray:
        return np.array([result[key].mc_se for _, result in self.points])

    @property
    def keys(self) -> Tuple[str, ...]:
        return self.points[0][1].plan.summary_keys if self.points else ()

    def as_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "points": [
                {"value": value, "estimators": {k: s.as_dict() for k, s in result.summaries.items()}}
                for value, result in self.points
            ],
        }
