"""
management/commands/simulate.py
─────────────────────────────────────────────────────────────────────
Draw a sample from the proxy DGP, or a synthetic cointegrated pair.

Usage:
    python manage.py simulate --config perfect.cfg --n 5000 --seed 7
    python manage.py simulate --config perfect.cfg --observed      # y,x,p only
    python manage.py simulate --system vecm --n 400 --seed 3 \
        --alpha=-0.4,0.15 --beta=1,-0.1,-2.3 --shock-cov=0.25,0.5,0.5,4
"""
from __future__ import annotations

import numpy as np
from django.core.management.base import CommandError

from proxylab.exceptions import ConfigError
from proxylab.management.base import USAGE_ERROR, LabCommand
from proxylab.services.dgp_service import simulate
from proxylab.services.vecm_service import simulate_vecm_pair


def _floats(raw: str, count: int, flag: str) -> np.ndarray:
    try:
        values = [float(v) for v in str(raw).split(",")]
    except ValueError:
        raise ConfigError(f"--{flag}: expected {count} comma-separated numbers, got {raw!r}") from None
    if len(values) != count:
        raise ConfigError(f"--{flag}: expected {count} numbers, got {len(values)}")
    return np.array(values)


class Command(LabCommand):
    help = "Simulate a proxy-DGP sample (CSV) or, with --system vecm, a cointegrated pair"
    command_name = "simulate"
    takes_config = True
    takes_seed   = True
    takes_n      = True

    def add_command_arguments(self, parser):
        parser.add_argument("--system", choices=("proxy", "vecm"), default="proxy",
                            help="proxy: y,x,p[,c,u,v] sample; vecm: date,y1,y2 pair")
        parser.add_argument("--observed", action="store_true",
                            help="proxy system: drop the latent columns c,u,v")
        parser.add_argument("--alpha", default="-0.4,0.15", help="vecm: adjustment vector α")
        parser.add_argument("--beta", default="1,-0.1,-2.3", help="vecm: cointegrating vector (β₀, β₁, const)")
        parser.add_argument("--gamma", default="0,0,0,0", help="vecm: Γ₁ row-major")
        parser.add_argument("--shock-cov", dest="shock_cov", default="0.25,0.5,0.5,4",
                            help="vecm: shock covariance row-major")
        parser.add_argument("--burn-in", dest="burn_in", type=int, default=100)
        parser.add_argument("--labels", default="y1,y2", help="vecm: column names")

    def run(self, options):
        if options["system"] == "vecm":
            labels = tuple(self.parse_list(options["labels"]))
            if len(labels) != 2:
                raise CommandError("--labels needs exactly two names", returncode=USAGE_ERROR)
            pair = simulate_vecm_pair(
                alpha=_floats(options["alpha"], 2, "alpha"),
                beta=_floats(options["beta"], 3, "beta"),
                gamma=_floats(options["gamma"], 4, "gamma").reshape(2, 2),
                shock_cov=_floats(options["shock_cov"], 4, "shock-cov").reshape(2, 2),
                n=options["n"],
                seed=options["seed"],
                burn_in=options["burn_in"],
                labels=labels,
            )
            return pair, "pair"

        config = self.load_config(options)
        sample = simulate(config, options["n"], options["seed"])
        if options["observed"]:
            sample = sample.observed()
        return sample, "sample"
