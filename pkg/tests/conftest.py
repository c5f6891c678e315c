"""
tests/conftest.py
─────────────────────────────────────────────────────────────────────
Django test settings for every test module, plus the --runslow switch
for the full-size acceptance runs.

Run with:  python -m pytest            (reduced sizes)
           python -m pytest --runslow  (10,000 replications, size/power loops)
"""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))
os.environ["DJANGO_SETTINGS_MODULE"] = "proxylab_config.settings.test"

import django  # noqa: E402
import pytest  # noqa: E402

django.setup()

from proxylab.services.dgp_service import DgpConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-size acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="full-size run; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ════════════════════════════════════════════════════════════════════
#  Shared configs
# ════════════════════════════════════════════════════════════════════

@pytest.fixture
def perfect_config() -> DgpConfig:
    """λ = 2, α₂ = 3: γ̂₂ targets 1.5."""
    return DgpConfig(alpha0=0.5, alpha1=1.0, alpha2=3.0, lambda_=2.0, rho_xc=0.5, mode="perfect_proxy")


@pytest.fixture
def imperfect_config() -> DgpConfig:
    """α₁ = 1, α₂ = 2, δ_X = 0.3, δ_P = 0.5: μ̂_X → 1.6, μ̂_P → 1.0."""
    return DgpConfig(
        alpha0=0.0, alpha1=1.0, alpha2=2.0, delta0=0.2, delta_x=0.3, delta_p=0.5,
        rho_xp=0.4, mode="imperfect_proxy",
    )


@pytest.fixture
def cointegrated_params() -> dict:
    """Synthetic rank-1 system: α = (−0.4, 0.15), β = (1, −0.1, −2.3), Γ = 0."""
    return {
        "alpha":     [-0.4, 0.15],
        "beta":      [1.0, -0.1, -2.3],
        "gamma":     [[0.0, 0.0], [0.0, 0.0]],
        "shock_cov": [[0.25, 0.5], [0.5, 4.0]],
    }
