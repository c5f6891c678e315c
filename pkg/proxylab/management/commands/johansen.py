"""
management/commands/johansen.py
─────────────────────────────────────────────────────────────────────
Johansen trace and maximum-eigenvalue tests, restricted constant.

Usage:
    python manage.py johansen --input pair.csv
    python manage.py johansen --input pair.csv --lags 2 --format csv
"""
from __future__ import annotations

from proxylab.management.base import LabCommand
from proxylab.services.vecm_service import johansen_trace


class Command(LabCommand):
    help = "Johansen cointegration rank test for a bivariate series"
    command_name = "johansen"
    takes_input  = True

    def add_command_arguments(self, parser):
        parser.add_argument("--lags", type=int, default=1, help="lagged differences in the VEC (default 1)")

    def run(self, options):
        result = johansen_trace(self.load_pair(options), lags_diff=options["lags"])
        for r in (0, 1):
            cv = result.trace_critical[r]["5%"]
            self.stdout.write(f"  r {'=' if r == 0 else '<='} {r}: trace {result.trace_stats[r]:.3f}  (5% cv {cv:.2f})")
        self.stdout.write(self.style.SUCCESS(f"  rank selected (trace, 5%): {result.rank_selected}"))
        return result, "johansen"
