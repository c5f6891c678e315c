"""
tests/test_unit_root.py
─────────────────────────────────────────────────────────────────────
ADF statistic, lag selection, critical values and size/power.
Run with:  python -m pytest tests/test_unit_root.py -v
"""
from __future__ import annotations

import numpy as np
import pytest

from proxylab.exceptions import ConfigError, InsufficientObservationsError
from proxylab.services.critical_values import (
    TABLE_VERSIONS,
    adf_critical_values,
    johansen_critical_values,
)
from proxylab.services.unit_root_service import adf_test, default_max_lags, parse_spec


def _random_walk(n, seed):
    return np.cumsum(np.random.default_rng(seed).standard_normal(n))


def _white_noise(n, seed):
    return np.random.default_rng(seed).standard_normal(n)


# ════════════════════════════════════════════════════════════════════
#  Critical values
# ════════════════════════════════════════════════════════════════════

class TestCriticalValues:

    def test_large_sample_constant(self):
        cv = adf_critical_values("constant", 1_000_000)
        assert cv["1%"] == pytest.approx(-3.43, abs=0.01)
        assert cv["5%"] == pytest.approx(-2.86, abs=0.01)
        assert cv["10%"] == pytest.approx(-2.57, abs=0.01)

    def test_trend_is_further_left(self):
        c, ct = adf_critical_values("constant", 200), adf_critical_values("constant_trend", 200)
        for level in ("1%", "5%", "10%"):
            assert ct[level] < c[level]

    def test_small_samples_widen(self):
        assert adf_critical_values("constant", 50)["5%"] < adf_critical_values("constant", 500)["5%"]

    def test_unknown_spec(self):
        with pytest.raises(ConfigError):
            adf_critical_values("none", 100)

    def test_johansen_table(self):
        assert johansen_critical_values(2, 0)["5%"] == 19.96
        assert johansen_critical_values(2, 1, "trace")["5%"] == 9.24
        assert johansen_critical_values(2, 0, "max_eig")["1%"] == 20.20
        with pytest.raises(ConfigError):
            johansen_critical_values(3, 0)

    def test_table_versions(self):
        assert set(TABLE_VERSIONS) == {"adf", "johansen"}


# ════════════════════════════════════════════════════════════════════
#  ADF mechanics
# ════════════════════════════════════════════════════════════════════

class TestAdfMechanics:

    def test_spec_aliases(self):
        assert parse_spec("c").value == "constant"
        assert parse_spec("ct").value == "constant_trend"
        with pytest.raises(ConfigError):
            parse_spec("nc")

    def test_default_max_lags(self):
        assert default_max_lags(100) == 12
        assert default_max_lags(500) == 17
        assert default_max_lags(30) == 8

    def test_reject_iff_below_critical_value(self):
        for seed in range(20):
            z = _random_walk(150, seed) if seed % 2 else _white_noise(150, seed)
            res = adf_test(z)
            for level, cv in res.critical_values.items():
                assert res.reject_unit_root[level] == (res.statistic < cv)

    def test_fixed_lags_skip_search(self):
        res = adf_test(_random_walk(200, 1), lags=3)
        assert res.lags_used == 3
        assert res.aic_by_lag == {}
        assert res.nobs == 199 - 3

    def test_lag_search_picks_minimum_aic(self):
        res = adf_test(_random_walk(300, 2), max_lags=6)
        assert res.lags_used == min(res.aic_by_lag, key=res.aic_by_lag.get)
        assert set(res.aic_by_lag) == set(range(7))

    def test_ramp_with_trend_is_degenerate(self):
        ramp = 3.0 + 0.5 * np.arange(100)
        res = adf_test(ramp, spec="constant_trend")
        assert res.degenerate
        assert np.isfinite(res.statistic)
        assert not any(res.reject_unit_root.values())

    def test_constant_series_is_degenerate(self):
        res = adf_test(np.full(60, 2.5), lags=0)
        assert res.degenerate
        assert res.statistic == 0.0

    def test_too_short(self):
        with pytest.raises(InsufficientObservationsError):
            adf_test(_white_noise(25, 0), max_lags=5)

    def test_negative_lags(self):
        with pytest.raises(ConfigError):
            adf_test(_white_noise(100, 0), lags=-1)

    def test_report_keys(self):
        d = adf_test(_white_noise(100, 0), label="gpr").as_dict()
        assert d["label"] == "gpr"
        assert set(d["critical_values"]) == {"1%", "5%", "10%"}


# ════════════════════════════════════════════════════════════════════
#  Against statsmodels
# ════════════════════════════════════════════════════════════════════

class TestAgainstStatsmodels:

    @pytest.mark.parametrize("spec, regression", [("constant", "c"), ("constant_trend", "ct")])
    @pytest.mark.parametrize("lags", [0, 2, 5])
    def test_fixed_lag_statistic(self, spec, regression, lags):
        stattools = pytest.importorskip("statsmodels.tsa.stattools")
        z = _random_walk(250, 10 + lags)
        ours = adf_test(z, spec=spec, lags=lags)
        theirs = stattools.adfuller(z, maxlag=lags, regression=regression, autolag=None)
        assert ours.statistic == pytest.approx(theirs[0], rel=1e-8)
        assert ours.nobs == theirs[3]
        for level in ("1%", "5%", "10%"):
            assert ours.critical_values[level] == pytest.approx(theirs[4][level], rel=1e-8)


# ════════════════════════════════════════════════════════════════════
#  Size and power
# ════════════════════════════════════════════════════════════════════

class TestSizeAndPower:

    def test_random_walks_rarely_rejected(self):
        rejections = sum(adf_test(_random_walk(500, s)).reject_unit_root["5%"] for s in range(200))
        assert rejections / 200 <= 0.10

    def test_white_noise_rejected(self):
        rejections = sum(adf_test(_white_noise(500, 10_000 + s)).reject_unit_root["5%"] for s in range(200))
        assert rejections / 200 >= 0.99

    @pytest.mark.slow
    def test_size_full(self):
        rejections = sum(adf_test(_random_walk(500, s)).reject_unit_root["5%"] for s in range(1000))
        assert rejections / 1000 <= 0.10

    @pytest.mark.slow
    def test_power_full(self):
        rejections = sum(adf_test(_white_noise(500, 50_000 + s)).reject_unit_root["5%"] for s in range(1000))
        assert rejections / 1000 >= 0.99
