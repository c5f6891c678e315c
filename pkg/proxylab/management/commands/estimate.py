"""
management/commands/estimate.py
─────────────────────────────────────────────────────────────────────
One estimation with its bias decomposition.

Usage:
    python manage.py estimate --config omitted.cfg --mode omitted --n 5000 --seed 1
    python manage.py estimate --config perfect.cfg --mode perfect --input sample.csv
    python manage.py estimate --config imperfect.cfg --mode imperfect --format text
"""
from __future__ import annotations

from proxylab.management.base import LabCommand
from proxylab.services.proxy_service import (
    estimate_imperfect_intercept,
    estimate_imperfect_proxy,
    estimate_omitted,
    estimate_perfect_proxy,
)


class Command(LabCommand):
    help = "Estimate with the omitted, perfect-proxy or imperfect-proxy regression and report the bias terms"
    command_name = "estimate"
    takes_config = True
    takes_input  = True
    takes_seed   = True
    takes_n      = True

    def add_command_arguments(self, parser):
        parser.add_argument("--mode", choices=("omitted", "perfect", "imperfect"), default="omitted")

    def run(self, options):
        config = self.load_config(options)
        sample = self.load_sample(options, config)

        mode = options["mode"]
        if mode == "omitted":
            reports = [estimate_omitted(sample, config)]
        elif mode == "perfect":
            reports = list(estimate_perfect_proxy(sample, config))
        else:
            reports = [*estimate_imperfect_proxy(sample, config), estimate_imperfect_intercept(sample, config)]

        for r in reports:
            self.stdout.write(
                f"  {r.estimator_name:<14} {r.estimate: .6f}   target {r.theoretical_target: .6f}"
                f"   bias term {r.bias_term_formula: .6f}"
            )
        return reports, "estimates"
