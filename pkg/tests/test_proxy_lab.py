"""
tests/test_proxy_lab.py
─────────────────────────────────────────────────────────────────────
DGP simulator, config files, the three estimators with their
decompositions, and the good-proxy criteria.
Run with:  python -m pytest tests/test_proxy_lab.py -v
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from proxylab.exceptions import ConfigError, MissingLatentError
from proxylab.services.dgp_service import (
    DgpConfig,
    Sample,
    dump_dgp_config,
    load_dgp_config,
    parse_mode,
    save_dgp_config,
    simulate,
)
from proxylab.services.proxy_service import (
    classify_bias,
    estimate_imperfect_intercept,
    estimate_imperfect_proxy,
    estimate_omitted,
    estimate_perfect_proxy,
    imperfect_targets,
    proxy_criteria_report,
    rescale_gamma2,
)


# ════════════════════════════════════════════════════════════════════
#  Simulator
# ════════════════════════════════════════════════════════════════════

class TestSimulate:

    def test_structural_equation_holds(self, perfect_config):
        s = simulate(perfect_config, n=500, seed=3)
        cfg = perfect_config
        rebuilt = cfg.alpha0 + cfg.alpha1 * s.x + cfg.alpha2 * s.c + s.u
        assert np.max(np.abs(s.y - rebuilt)) < 1e-12

    def test_zero_noise_reconstructs_y(self):
        cfg = DgpConfig(alpha0=1.0, alpha1=2.0, alpha2=-1.5, sigma_u=0.0)
        s = simulate(cfg, n=100, seed=1)
        assert np.all(s.u == 0.0)
        np.testing.assert_allclose(s.y, 1.0 + 2.0 * s.x - 1.5 * s.c, atol=1e-12)

    def test_perfect_proxy_is_scaled_latent(self):
        s = simulate(DgpConfig(lambda_=2.0), n=200, seed=5)
        np.testing.assert_array_equal(s.p, 2.0 * s.c)
        assert s.v is None

    def test_correlation_close_to_rho(self):
        s = simulate(DgpConfig(rho_xc=0.5), n=20000, seed=11)
        assert np.corrcoef(s.x, s.c)[0, 1] == pytest.approx(0.5, abs=0.03)

    def test_imperfect_proxy_relation(self, imperfect_config):
        s = simulate(imperfect_config, n=300, seed=2)
        cfg = imperfect_config
        np.testing.assert_allclose(s.c, cfg.delta0 + cfg.delta_x * s.x + cfg.delta_p * s.p + s.v, atol=1e-12)

    def test_deterministic_for_seed(self, imperfect_config):
        a = simulate(imperfect_config, n=100, seed=42)
        b = simulate(imperfect_config, n=100, seed=42)
        c = simulate(imperfect_config, n=100, seed=43)
        for col in ("y", "x", "p", "c", "u", "v"):
            np.testing.assert_array_equal(getattr(a, col), getattr(b, col))
        assert not np.array_equal(a.y, c.y)

    def test_uniform_shocks_are_bounded(self):
        s = simulate(DgpConfig(shocks="uniform", sigma_u=1.0), n=2000, seed=9)
        assert np.max(np.abs(s.u)) <= math.sqrt(3.0)
        assert np.var(s.u, ddof=1) == pytest.approx(1.0, abs=0.1)

    @pytest.mark.parametrize("n", [0, 5, 9])
    def test_too_small_n(self, n):
        with pytest.raises(ConfigError):
            simulate(DgpConfig(), n=n, seed=0)

    def test_negative_seed(self):
        with pytest.raises(ConfigError):
            simulate(DgpConfig(), n=50, seed=-1)

    def test_observed_drops_latent_columns(self, perfect_config):
        s = simulate(perfect_config, n=50, seed=0).observed()
        assert not s.has_latent
        assert set(s.columns()) == {"y", "x", "p"}

    def test_slice(self, imperfect_config):
        s = simulate(imperfect_config, n=100, seed=0)
        half = s.slice(0, 40)
        assert half.n == 40
        np.testing.assert_array_equal(half.v, s.v[:40])

    def test_sample_length_mismatch(self):
        with pytest.raises(ConfigError):
            Sample(y=[1.0, 2.0, 3.0], x=[1.0, 2.0], p=[1.0, 2.0, 3.0])


# ════════════════════════════════════════════════════════════════════
#  Config
# ════════════════════════════════════════════════════════════════════

class TestDgpConfig:

    @pytest.mark.parametrize("changes", [
        {"lambda_": 0.0},
        {"lambda_": -1.0},
        {"rho_xc": 1.0},
        {"rho_xp": -1.0},
        {"sigma_x": 0.0},
        {"sigma_u": -0.1},
        {"alpha1": float("nan")},
        {"mode": "iv"},
        {"shocks": "cauchy"},
    ])
    def test_invalid_values(self, changes):
        with pytest.raises(ConfigError):
            DgpConfig(**changes)

    def test_mode_aliases(self):
        assert parse_mode("perfect").value == "perfect_proxy"
        assert parse_mode("Imperfect-Proxy").value == "imperfect_proxy"
        with pytest.raises(ConfigError):
            parse_mode("partial")

    def test_omitted_target(self):
        cfg = DgpConfig(alpha1=1.0, alpha2=2.0, rho_xc=0.5, sigma_x=2.0, sigma_c=1.0)
        # Cov(X,C) = 0.5·2·1 = 1, V(X) = 4
        assert cfg.omitted_target == pytest.approx(1.5)

    def test_save_and_load(self, tmp_path, imperfect_config):
        path = save_dgp_config(imperfect_config, tmp_path / "imperfect.cfg")
        assert load_dgp_config(path) == imperfect_config

    def test_load_hand_written_file(self, tmp_path):
        path = tmp_path / "omitted.cfg"
        path.write_text("# omitted-variable run\nmode = perfect\nalpha2 = 0\n\nrho_xc = -0.3\n", encoding="utf-8")
        cfg = load_dgp_config(path)
        assert cfg.mode == "perfect_proxy"
        assert cfg.alpha2 == 0.0
        assert cfg.rho_xc == -0.3
        assert cfg.alpha1 == 1.0

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("alpha1 = 1\ngamma = 3\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="gamma"):
            load_dgp_config(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("alpha1 = one\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="alpha1"):
            load_dgp_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_dgp_config(tmp_path / "nope.cfg")

    def test_dump_key_order(self):
        keys = [line.split(" = ")[0] for line in dump_dgp_config(DgpConfig()).splitlines()]
        assert keys[:4] == ["mode", "alpha0", "alpha1", "alpha2"]
        assert "lambda" in keys and "deltaX" in keys


# ════════════════════════════════════════════════════════════════════
#  Omitted variable
# ════════════════════════════════════════════════════════════════════

class TestOmitted:

    def test_decomposition_identity(self, perfect_config):
        for seed in range(200):
            s = simulate(perfect_config, n=100, seed=seed)
            r = estimate_omitted(s, perfect_config)
            assert r.estimate - r.theoretical_target - r.bias_term_formula - r.sampling_term == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.slow
    def test_decomposition_identity_full(self, perfect_config):
        for seed in range(1000):
            s = simulate(perfect_config, n=500, seed=seed)
            r = estimate_omitted(s, perfect_config)
            assert abs(r.estimate - r.theoretical_target - r.bias_term_formula - r.sampling_term) < 1e-10

    def test_no_noise_bias_is_exact(self):
        cfg = DgpConfig(alpha1=1.0, alpha2=1.0, rho_xc=0.8, sigma_u=0.0)
        s = simulate(cfg, n=400, seed=4)
        r = estimate_omitted(s, cfg)
        assert r.sampling_term == pytest.approx(0.0, abs=1e-14)
        assert r.estimate - 1.0 == pytest.approx(r.components["cov_xc"] / r.components["var_x"], abs=1e-10)

    def test_no_omitted_effect(self):
        cfg = DgpConfig(alpha1=1.0, alpha2=0.0, rho_xc=0.7)
        r = estimate_omitted(simulate(cfg, n=300, seed=8), cfg)
        assert r.bias_term_formula == 0.0
        assert r.direction == "none"

    def test_direction_reported(self):
        cfg = DgpConfig(alpha1=1.0, alpha2=1.0, rho_xc=-0.5)
        r = estimate_omitted(simulate(cfg, n=300, seed=8), cfg)
        assert r.direction == "understated"
        assert r.population_target == pytest.approx(0.5)

    def test_needs_latent_columns(self, perfect_config):
        s = simulate(perfect_config, n=50, seed=0).observed()
        with pytest.raises(MissingLatentError):
            estimate_omitted(s, perfect_config)

    def test_report_keys(self, perfect_config):
        r = estimate_omitted(simulate(perfect_config, n=50, seed=0), perfect_config)
        assert set(r.as_dict()) == {
            "estimator", "estimate", "theoretical_target", "bias_term_formula", "sampling_term",
            "population_target", "direction", "std_error", "t_stat", "components",
        }
        assert r.as_dict()["estimator"] == "omitted"


class TestClassifyBias:

    @pytest.mark.parametrize("alpha1, bias, expected", [
        (1.0, 0.0, "none"),
        (1.0, 0.5, "inflated"),
        (-1.0, -0.2, "inflated"),
        (1.0, -0.5, "understated"),
        (1.0, -2.0, "sign_reversed"),
        (-1.0, 1.5, "sign_reversed"),
        (0.0, 0.3, "inflated"),
    ])
    def test_directions(self, alpha1, bias, expected):
        assert classify_bias(alpha1, bias) == expected


# ════════════════════════════════════════════════════════════════════
#  Perfect proxy
# ════════════════════════════════════════════════════════════════════

class TestPerfectProxy:

    def test_cancellation_without_noise(self):
        cfg = DgpConfig(alpha0=0.3, alpha1=1.0, alpha2=2.0, lambda_=4.0, sigma_u=0.0)
        g1, g2 = estimate_perfect_proxy(simulate(cfg, n=200, seed=1), cfg)
        assert g1.estimate == pytest.approx(1.0, abs=1e-8)
        assert g2.estimate == pytest.approx(0.5, abs=1e-8)
        assert g2.components["alpha2_proxy"] == pytest.approx(2.0, abs=1e-8)

    def test_sampling_terms_explain_deviation(self, perfect_config):
        s = simulate(perfect_config, n=250, seed=6)
        g1, g2 = estimate_perfect_proxy(s, perfect_config)
        assert g1.deviation == pytest.approx(g1.sampling_term, abs=1e-10)
        assert g2.deviation == pytest.approx(g2.sampling_term, abs=1e-10)
        assert g2.theoretical_target == pytest.approx(1.5)

    def test_observed_sample_has_no_sampling_term(self, perfect_config):
        s = simulate(perfect_config, n=100, seed=0).observed()
        g1, g2 = estimate_perfect_proxy(s, perfect_config)
        assert g1.sampling_term is None and g2.sampling_term is None
        assert g2.std_error > 0

    def test_wrong_mode(self, imperfect_config):
        s = simulate(imperfect_config, n=100, seed=0)
        with pytest.raises(ConfigError):
            estimate_perfect_proxy(s, imperfect_config)


class TestRescaleGamma2:

    def test_example(self):
        assert rescale_gamma2(0.5, 4.0) == 2.0

    def test_keeps_sign(self):
        assert rescale_gamma2(-0.25, 2.0) == -0.5
        assert rescale_gamma2(0.0, 3.0) == 0.0

    @pytest.mark.parametrize("lam", [0.0, -2.0, float("inf")])
    def test_rejects_bad_lambda(self, lam):
        with pytest.raises(ConfigError):
            rescale_gamma2(1.0, lam)


# ════════════════════════════════════════════════════════════════════
#  Imperfect proxy
# ════════════════════════════════════════════════════════════════════

class TestImperfectProxy:

    def test_targets(self, imperfect_config):
        t = imperfect_targets(imperfect_config)
        assert t["mu_x"] == pytest.approx(1.6)
        assert t["mu_p"] == pytest.approx(1.0)
        assert t["mu_0"] == pytest.approx(0.4)

    def test_sampling_terms_explain_deviation(self, imperfect_config):
        s = simulate(imperfect_config, n=400, seed=12)
        mx, mp = estimate_imperfect_proxy(s, imperfect_config)
        assert mx.deviation == pytest.approx(mx.sampling_term, abs=1e-10)
        assert mp.deviation == pytest.approx(mp.sampling_term, abs=1e-10)

    def test_bias_terms(self, imperfect_config):
        mx, mp = estimate_imperfect_proxy(simulate(imperfect_config, n=100, seed=0), imperfect_config)
        assert mx.bias_term_formula == pytest.approx(0.6)     # α₂δ_X
        assert mp.bias_term_formula == pytest.approx(-1.0)    # α₂δ_P − α₂

    def test_sufficient_proxy_targets_alpha1(self):
        cfg = DgpConfig(alpha1=1.0, alpha2=2.0, delta_x=0.0, delta_p=1.0, mode="imperfect_proxy")
        mx, mp = estimate_imperfect_proxy(simulate(cfg, n=100, seed=0), cfg)
        assert mx.theoretical_target == 1.0
        assert mp.theoretical_target == 2.0

    def test_intercept(self, imperfect_config):
        r = estimate_imperfect_intercept(simulate(imperfect_config, n=2000, seed=3), imperfect_config)
        assert r.estimator_name == "mu_0"
        assert r.theoretical_target == pytest.approx(0.4)
        assert abs(r.estimate - 0.4) < 5 * r.std_error

    def test_wrong_mode(self, perfect_config):
        s = simulate(perfect_config, n=100, seed=0)
        with pytest.raises(ConfigError):
            estimate_imperfect_proxy(s, perfect_config)


# ════════════════════════════════════════════════════════════════════
#  Good-proxy criteria
# ════════════════════════════════════════════════════════════════════

def _status(report) -> dict:
    return {c.name: c.status for c in report.criteria}


class TestCriteria:

    def test_relevant_and_sufficient_proxy(self):
        cfg = DgpConfig(alpha2=1.0, delta_x=0.0, delta_p=1.0, sigma_v=1.0, mode="imperfect_proxy")
        report = proxy_criteria_report(simulate(cfg, n=5000, seed=21), cfg)
        assert report.relevance.status == "pass"
        assert report.relevance.estimates["delta_p"] == pytest.approx(1.0, abs=0.1)
        assert report.sufficiency.estimates["delta_x"] == pytest.approx(0.0, abs=0.1)

    def test_exact_projection_passes_everything(self):
        cfg = DgpConfig(delta_x=0.0, delta_p=1.0, sigma_v=0.0, sigma_u=0.0, mode="imperfect_proxy")
        report = proxy_criteria_report(simulate(cfg, n=5000, seed=0), cfg)
        assert _status(report) == {
            "relevance": "pass", "sufficiency": "pass", "exogeneity": "pass", "stability": "pass",
        }

    def test_direct_effect_fails_sufficiency(self):
        cfg = DgpConfig(delta_x=0.5, delta_p=1.0, mode="imperfect_proxy")
        report = proxy_criteria_report(simulate(cfg, n=5000, seed=21), cfg)
        assert report.sufficiency.status == "fail"
        assert report.relevance.status == "pass"

    def test_irrelevant_proxy(self):
        cfg = DgpConfig(delta_x=0.0, delta_p=0.0, sigma_v=0.0, mode="imperfect_proxy")
        report = proxy_criteria_report(simulate(cfg, n=500, seed=0), cfg)
        assert report.relevance.status == "fail"

    def test_endogenous_error_fails_exogeneity(self, imperfect_config):
        s = simulate(imperfect_config, n=2000, seed=5)
        leaky = Sample(y=s.y, x=s.x, p=s.p, c=s.c, v=s.v, u=0.8 * s.p + 0.2 * s.u)
        report = proxy_criteria_report(leaky, imperfect_config)
        assert report.exogeneity.status == "fail"

    def test_break_fails_stability(self):
        cfg = DgpConfig(delta_p=1.0, sigma_v=0.1, mode="imperfect_proxy")
        s = simulate(cfg, n=2000, seed=7)
        c = s.c.copy()
        c[1000:] = c[1000:] + s.p[1000:]          # δ_P doubles in the second half
        report = proxy_criteria_report(Sample(y=s.y, x=s.x, p=s.p, c=c, u=s.u, v=s.v), cfg)
        assert report.stability.status == "fail"

    def test_observational_data(self, imperfect_config):
        s = simulate(imperfect_config, n=200, seed=0).observed()
        report = proxy_criteria_report(s, imperfect_config)
        assert report.observational
        assert set(_status(report).values()) == {"assumption_not_testable"}

    def test_latent_c_without_u(self, imperfect_config):
        s = simulate(imperfect_config, n=2000, seed=3)
        report = proxy_criteria_report(Sample(y=s.y, x=s.x, p=s.p, c=s.c), imperfect_config)
        assert not report.observational
        assert report.exogeneity.status == "assumption_not_testable"
        assert report.exogeneity.estimates == {}
        assert not report.exogeneity.passed
        assert report.relevance.status == "pass"

    def test_constant_u_passes_exogeneity(self):
        cfg = DgpConfig(delta_p=1.0, sigma_u=0.0, mode="imperfect_proxy")
        report = proxy_criteria_report(simulate(cfg, n=500, seed=1), cfg)
        assert report.exogeneity.passed
        assert report.exogeneity.estimates == {"cov_up": 0.0, "cov_ux": 0.0}

    def test_report_layout(self, imperfect_config):
        d = proxy_criteria_report(simulate(imperfect_config, n=200, seed=0), imperfect_config, critical_t=2.58).as_dict()
        assert d["critical_t"] == 2.58
        assert [c["name"] for c in d["criteria"]] == ["relevance", "sufficiency", "exogeneity", "stability"]
