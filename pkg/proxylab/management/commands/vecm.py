"""
management/commands/vecm.py
─────────────────────────────────────────────────────────────────────
Fit the rank-1 VEC model and print the two-equation display.

Usage:
    python manage.py vecm --input pair.csv --format text
    python manage.py vecm --input pair.csv --lags 2
"""
from __future__ import annotations

from proxylab.management.base import LabCommand
from proxylab.services.report_service import ect_equation
from proxylab.services.vecm_service import fit_vecm


class Command(LabCommand):
    help = "Estimate a rank-1 VECM with restricted constant"
    command_name = "vecm"
    takes_input  = True

    def add_command_arguments(self, parser):
        parser.add_argument("--lags", type=int, default=1, help="lagged differences (default 1)")

    def run(self, options):
        model = fit_vecm(self.load_pair(options), rank=1, lags_diff=options["lags"])
        if model.rank_selected != 1:
            self.stdout.write(self.style.WARNING(
                f"  trace test selected rank {model.rank_selected}; the rank-1 fit is reported anyway"
            ))
        self.stdout.write(f"  ECT_{{t-1}} = {ect_equation(model)}")
        for i, label in enumerate(model.labels):
            self.stdout.write(f"  alpha[{label}] = {model.alpha[i]: .4f} {model.stars(i)}")
        return model, "vecm"
