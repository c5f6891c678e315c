"""
tests/test_vecm.py
─────────────────────────────────────────────────────────────────────
Johansen rank test, rank-1 VECM, equilibrium arithmetic and impulse
responses, mostly on synthetic pairs with a known cointegrating vector.
Run with:  python -m pytest tests/test_vecm.py -v
"""
from __future__ import annotations

import numpy as np
import pytest

from proxylab.exceptions import (
    ConfigError,
    InsufficientObservationsError,
    InvalidInputError,
    SingularMomentError,
    UnsupportedRankError,
)
from proxylab.services.unit_root_service import adf_test
from proxylab.services.vecm_service import (
    TimeSeriesPair,
    VecmModel,
    ecm_adjustment_step,
    ect,
    ect_series,
    equilibrium_level,
    fit_vecm,
    impact_matrix,
    irf,
    johansen_trace,
    normalize_beta,
    parse_ordering,
    significance_stars,
    simulate_vecm_pair,
)


def _model(beta=(1.0, -0.091, -2.319), alpha=(-0.378, 0.161), gamma=None, cov=None, **kw) -> VecmModel:
    return VecmModel(
        beta=np.array(beta),
        alpha=np.array(alpha),
        gamma=np.zeros((2, 2)) if gamma is None else np.array(gamma),
        resid_cov=np.eye(2) if cov is None else np.array(cov),
        **kw,
    )


def _independent_walks(n, seed) -> TimeSeriesPair:
    shocks = np.random.default_rng(seed).standard_normal((n, 2))
    return TimeSeriesPair(labels=("a", "b"), obs=np.cumsum(shocks, axis=0))


def _irf_shaped(res) -> bool:
    """Own response of series 1 decays by h=5; both cross responses positive over h=1..3."""
    own = res.path(0, 0)
    return bool(own[5] < own[0] and np.all(res.path(0, 1)[1:4] > 0) and np.all(res.path(1, 0)[1:4] > 0))


@pytest.fixture

def synthetic(cointegrated_params):
    def make(n=500, seed=0, **overrides):
        params = {**cointegrated_params, **overrides}
        return simulate_vecm_pair(n=n, seed=seed, **params)
    return make


# ════════════════════════════════════════════════════════════════════
#  Data
# ════════════════════════════════════════════════════════════════════

class TestTimeSeriesPair:

    def test_too_short(self):
        with pytest.raises(InsufficientObservationsError):
            TimeSeriesPair(labels=("a", "b"), obs=np.zeros((29, 2)))

    def test_missing_value_row(self):
        obs = np.ones((40, 2))
        obs[12, 1] = np.nan
        with pytest.raises(InvalidInputError, match="row 12"):
            TimeSeriesPair(labels=("a", "b"), obs=obs)

    def test_column_by_label_and_index(self):
        ts = _independent_walks(40, 0)
        np.testing.assert_array_equal(ts.column("b"), ts.column(1))
        with pytest.raises(ConfigError):
            ts.column("c")

    def test_simulated_pair_shape(self, synthetic):
        ts = synthetic(n=120, seed=3, labels=("gpr", "veh"))
        assert ts.n == 120
        assert ts.labels == ("gpr", "veh")

    def test_bad_shock_cov(self, cointegrated_params):
        params = {**cointegrated_params, "shock_cov": [[1.0, 2.0], [2.0, 1.0]]}
        with pytest.raises(ConfigError):
            simulate_vecm_pair(n=100, seed=0, **params)


# ════════════════════════════════════════════════════════════════════
#  Equilibrium arithmetic
# ════════════════════════════════════════════════════════════════════

class TestEquilibrium:

    def test_ect_worked_example(self):
        model = _model()
        assert ect(model, 4.0, 10.0) == pytest.approx(0.771, abs=1e-12)

    def test_equilibrium_levels(self):
        model = _model()
        assert equilibrium_level(model, 10.0) == pytest.approx(3.229, abs=1e-12)
        assert equilibrium_level(model, 0.0) == pytest.approx(2.319, abs=1e-12)

    def test_ect_vanishes_at_equilibrium(self):
        model = _model()
        for y2 in (-3.0, 0.0, 7.5, 120.0):
            assert ect(model, equilibrium_level(model, y2), y2) == pytest.approx(0.0, abs=1e-12)

    def test_ect_ignores_y2_without_weight(self):
        assert ect(_model(beta=(1.0, 0.0, 0.0)), 5.0, 99.0) == 5.0

    def test_adjustment_step(self):
        step = ecm_adjustment_step(_model(), [4.0, 10.0], [0.0, 0.0])
        np.testing.assert_allclose(step, [-0.378 * 0.771, 0.161 * 0.771], atol=1e-12)

    def test_adjustment_at_equilibrium_is_zero(self):
        model = _model()
        y_lag = [equilibrium_level(model, 10.0), 10.0]
        np.testing.assert_allclose(ecm_adjustment_step(model, y_lag, [0.0, 0.0]), [0.0, 0.0], atol=1e-12)

    def test_adjustment_one_sided(self):
        model = _model(beta=(1.0, 0.0, 0.0), alpha=(-0.5, 0.0))
        np.testing.assert_allclose(ecm_adjustment_step(model, [1.0, 0.0], [0.0, 0.0]), [-0.5, 0.0])

    def test_adjustment_includes_short_run_terms(self):
        model = _model(beta=(1.0, 0.0, 0.0), alpha=(0.0, 0.0), gamma=[[0.2, 0.0], [0.1, 0.3]])
        np.testing.assert_allclose(ecm_adjustment_step(model, [0.0, 0.0], [1.0, 2.0]), [0.2, 0.7])

    def test_negative_loading_pulls_back_after_positive_gap(self, cointegrated_params):
        rng = np.random.default_rng(2024)
        checked = 0
        for trial in range(100):
            params = {**cointegrated_params, "alpha": [rng.uniform(-0.6, -0.1), rng.uniform(0.0, 0.3)]}
            model = fit_vecm(simulate_vecm_pair(n=300, seed=trial, **params))
            if model.alpha[0] >= 0:
                continue
            y2 = rng.uniform(-5.0, 5.0)
            gap = rng.uniform(0.1, 3.0)
            y_lag = [equilibrium_level(model, y2) + gap, y2]
            assert ect(model, *y_lag) > 0
            assert ecm_adjustment_step(model, y_lag, [0.0, 0.0])[0] < 0
            checked += 1
        assert checked >= 90

    def test_ect_series(self, synthetic):

        ts = synthetic(n=60)
        model = _model(beta=(1.0, -0.1, -2.3))
        series = ect_series(model, ts)
        assert series[5] == pytest.approx(ect(model, *ts.obs[5]), abs=1e-12)


class TestNormalization:

    def test_first_entry_is_one(self):
        np.testing.assert_allclose(normalize_beta([2.0, 0.2, -4.6]), [1.0, 0.1, -2.3])

    @pytest.mark.parametrize("scale", [-3.0, 0.5, 7.0])
    def test_invariant_to_scaling(self, scale):
        v = np.array([0.8, -0.08, -1.84])
        np.testing.assert_allclose(normalize_beta(scale * v), normalize_beta(v), atol=1e-12)

    def test_no_weight_on_first_series(self):
        with pytest.raises(SingularMomentError):
            normalize_beta([0.0, 1.0, 2.0])

    def test_model_requires_normalized_beta(self):
        with pytest.raises(InvalidInputError):
            _model(beta=(2.0, -0.2, -4.6))

    def test_model_requires_positive_definite_cov(self):
        with pytest.raises(InvalidInputError):
            _model(cov=[[1.0, 2.0], [2.0, 1.0]])


# ════════════════════════════════════════════════════════════════════
#  Johansen
# ════════════════════════════════════════════════════════════════════

class TestJohansen:

    def test_recovers_rank_and_vector(self, synthetic):
        ranks, ratios = [], []
        for seed in range(20):
            jo = johansen_trace(synthetic(n=500, seed=seed), lags_diff=1)
            ranks.append(jo.rank_selected)
            ratios.append(normalize_beta(jo.eigenvectors[:, 0])[1])
        assert ranks.count(1) >= 16
        assert sum(abs(r + 0.1) <= 0.01 for r in ratios) >= 18

    def test_independent_walks_have_no_relation(self):
        ranks = [johansen_trace(_independent_walks(500, 100 + s)).rank_selected for s in range(20)]
        assert ranks.count(0) >= 16

    @pytest.mark.slow
    def test_recovers_rank_full(self, synthetic):
        ranks, ratios = [], []
        for seed in range(500):
            jo = johansen_trace(synthetic(n=500, seed=seed))
            ranks.append(jo.rank_selected)
            ratios.append(normalize_beta(jo.eigenvectors[:, 0])[1])
        assert ranks.count(1) / 500 >= 0.90
        assert sum(abs(r + 0.1) <= 0.01 for r in ratios) / 500 >= 0.90

    @pytest.mark.slow
    def test_independent_walks_full(self):
        ranks = [johansen_trace(_independent_walks(500, 10_000 + s)).rank_selected for s in range(500)]
        assert ranks.count(0) / 500 >= 0.90


    def test_statistics_layout(self, synthetic):
        jo = johansen_trace(synthetic(n=300, seed=1))
        assert jo.trace_stats[0] >= jo.trace_stats[1] >= 0
        assert jo.trace_stats[0] == pytest.approx(jo.max_eig_stats[0] + jo.max_eig_stats[1])
        assert 1 > jo.eigenvalues[0] >= jo.eigenvalues[1] >= 0
        assert jo.trace_critical[0]["5%"] == 19.96
        assert jo.n_obs == 300 - 2
        trace, rank, vectors = jo
        assert vectors.shape == (3, 2)

    def test_series_with_shifted_copy_is_singular(self):
        walk = np.cumsum(np.random.default_rng(0).standard_normal(200))
        ts = TimeSeriesPair(labels=("a", "b"), obs=np.column_stack([walk, walk + 3.0]))
        with pytest.raises(SingularMomentError):
            johansen_trace(ts, lags_diff=0)

    def test_too_short_for_lags(self, synthetic):
        with pytest.raises(InsufficientObservationsError):
            johansen_trace(synthetic(n=35), lags_diff=5)

    def test_negative_lags(self, synthetic):
        with pytest.raises(ConfigError):
            johansen_trace(synthetic(n=100), lags_diff=-1)


# ════════════════════════════════════════════════════════════════════
#  VECM fit
# ════════════════════════════════════════════════════════════════════

class TestFitVecm:

    def test_alpha_within_two_standard_errors(self, synthetic, cointegrated_params):
        truth = np.array(cointegrated_params["alpha"])
        hits = np.zeros(2, dtype=int)
        for seed in range(20):
            model = fit_vecm(synthetic(n=2000, seed=seed))
            hits += np.abs(model.alpha - truth) <= 2 * model.alpha_se
        assert np.all(hits >= 14)

    @pytest.mark.slow
    def test_alpha_within_two_standard_errors_full(self, synthetic, cointegrated_params):
        truth = np.array(cointegrated_params["alpha"])
        hits = np.zeros(2, dtype=int)
        for seed in range(200):
            model = fit_vecm(synthetic(n=2000, seed=seed))
            hits += np.abs(model.alpha - truth) <= 2 * model.alpha_se
        assert np.all(hits >= 180)

    def test_tiny_noise_recovers_beta(self, cointegrated_params):
        cov = np.array(cointegrated_params["shock_cov"]) * 1e-4
        ts = simulate_vecm_pair(
            alpha=cointegrated_params["alpha"], beta=cointegrated_params["beta"],
            gamma=cointegrated_params["gamma"], shock_cov=cov, n=5000, seed=4,
        )
        model = fit_vecm(ts)
        assert model.beta[0] == 1.0
        assert model.beta[1] == pytest.approx(-0.1, abs=1e-3)

    def test_fitted_model_fields(self, synthetic):
        model = fit_vecm(synthetic(n=400, seed=2, labels=("gpr", "veh")))
        assert model.labels == ("gpr", "veh")
        assert model.n_obs == 398
        assert model.stars(0) == "***"
        d = model.as_dict()
        assert d["alpha_stars"][0] == "***"
        assert len(d["beta"]) == 3

    def test_more_lags(self, synthetic):
        model = fit_vecm(synthetic(n=400, seed=2), lags_diff=2)
        assert model.lags_diff == 2
        assert len(model.gammas) == 2

    def test_rank_other_than_one(self, synthetic):
        with pytest.raises(UnsupportedRankError):
            fit_vecm(synthetic(n=200), rank=2)
        with pytest.raises(UnsupportedRankError):
            fit_vecm(synthetic(n=200), rank=0)

    def test_mismatched_johansen_lags(self, synthetic):
        ts = synthetic(n=200)
        with pytest.raises(ConfigError):
            fit_vecm(ts, lags_diff=2, johansen=johansen_trace(ts, lags_diff=1))

    def test_ect_is_stationary(self, synthetic):
        stationary = 0
        for seed in range(20):
            ts = synthetic(n=500, seed=seed)
            stationary += adf_test(ect_series(fit_vecm(ts), ts)).reject_unit_root["5%"]
        assert stationary >= 18

    @pytest.mark.slow
    def test_ect_is_stationary_full(self, synthetic):
        stationary = 0
        for seed in range(200):
            ts = synthetic(n=500, seed=seed)
            stationary += adf_test(ect_series(fit_vecm(ts), ts)).reject_unit_root["5%"]
        assert stationary / 200 >= 0.90


    def test_against_statsmodels(self, synthetic):
        vecm = pytest.importorskip("statsmodels.tsa.vector_ar.vecm")
        ts = synthetic(n=500, seed=9)
        ours = fit_vecm(ts, lags_diff=1)
        theirs = vecm.VECM(ts.obs, k_ar_diff=1, coint_rank=1, deterministic="ci").fit()
        assert ours.beta[1] == pytest.approx(theirs.beta[1, 0], rel=1e-6)
        np.testing.assert_allclose(ours.alpha, theirs.alpha[:, 0], rtol=1e-6)


class TestSignificanceStars:

    @pytest.mark.parametrize("t, stars", [
        (4.0, "***"), (-3.3, "***"), (3.0, "**"), (2.0, "*"), (-1.5, "n.s."), (None, "n.s."),
    ])
    def test_thresholds(self, t, stars):
        assert significance_stars(t) == stars


# ════════════════════════════════════════════════════════════════════
#  Impulse responses
# ════════════════════════════════════════════════════════════════════

class TestIrf:

    def test_no_adjustment_means_permanent_shocks(self):
        model = _model(alpha=(0.0, 0.0), cov=[[1.0, 0.3], [0.3, 2.0]])
        res = irf(model, horizon=10)
        for h in range(11):
            np.testing.assert_allclose(res.responses[h], res.responses[0], atol=1e-12)

    def test_two_steps_by_hand(self):
        model = _model(beta=(1.0, -1.0, 0.0), alpha=(-0.5, 0.2), gamma=[[0.1, 0.0], [0.0, 0.2]])
        res = irf(model, horizon=2)
        np.testing.assert_allclose(res.responses[0], np.eye(2), atol=1e-12)
        np.testing.assert_allclose(res.responses[1], [[0.6, 0.5], [0.2, 1.0]], atol=1e-12)
        np.testing.assert_allclose(res.responses[2], [[0.36, 0.8], [0.32, 0.9]], atol=1e-12)

    def test_impact_is_cholesky_factor(self):
        cov = np.array([[0.25, 0.5], [0.5, 4.0]])
        res = irf(_model(cov=cov), horizon=3)
        np.testing.assert_allclose(res.impact, np.linalg.cholesky(cov), atol=1e-12)

    def test_reversed_ordering(self):
        cov = np.array([[0.25, 0.5], [0.5, 4.0]])
        b = impact_matrix(cov, (1, 0))
        np.testing.assert_allclose(b @ b.T, cov, atol=1e-12)
        assert b[1, 0] == 0.0
        res = irf(_model(cov=cov), horizon=3, ordering="1,0")
        assert res.ordering == (1, 0)
        assert res.path(0, 1)[0] == 0.0

    def test_own_impact_positive(self, synthetic):
        res = irf(fit_vecm(synthetic(n=500, seed=5)), horizon=10)
        assert res.path(0, 0)[0] > 0
        assert res.path(1, 1)[0] > 0

    def test_shape_of_synthetic_responses(self, synthetic):
        shaped = 0
        for seed in range(20):
            shaped += _irf_shaped(irf(fit_vecm(synthetic(n=500, seed=seed)), horizon=10))
        assert shaped >= 16

    @pytest.mark.slow
    def test_shape_of_synthetic_responses_full(self, synthetic):
        shaped = sum(_irf_shaped(irf(fit_vecm(synthetic(n=500, seed=s)), horizon=10)) for s in range(200))
        assert shaped / 200 >= 0.80

    def test_responses_settle(self, synthetic):
        res = irf(fit_vecm(synthetic(n=500, seed=1)), horizon=200)
        assert np.max(np.abs(res.responses[200] - res.responses[199])) < 1e-6

    @pytest.mark.parametrize("horizon", [0, -1, 2.5])
    def test_bad_horizon(self, horizon):
        with pytest.raises(ConfigError):
            irf(_model(), horizon=horizon)

    @pytest.mark.parametrize("raw", ["0,0", "1", "a,b", (0, 2)])
    def test_bad_ordering(self, raw):
        with pytest.raises(ConfigError):
            parse_ordering(raw)

    def test_as_dict_labels(self):
        d = irf(_model(labels=("gpr", "veh")), horizon=4).as_dict()
        assert set(d["responses"]) == {"gpr->gpr", "gpr->veh", "veh->gpr", "veh->veh"}
        assert len(d["responses"]["gpr->veh"]) == 5
