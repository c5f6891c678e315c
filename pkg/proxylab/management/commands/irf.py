"""
management/commands/irf.py
─────────────────────────────────────────────────────────────────────
Orthogonalised impulse responses of the fitted VECM.

Usage:
    python manage.py irf --input pair.csv --horizon 20 --plot
    python manage.py irf --input pair.csv --ordering 1,0      # second column first
"""
from __future__ import annotations

from django.conf import settings

from proxylab.management.base import LabCommand
from proxylab.services.vecm_service import fit_vecm, irf


class Command(LabCommand):
    help = "Cholesky impulse responses from a rank-1 VECM"
    command_name = "irf"
    takes_input  = True
    takes_plot   = True

    def add_command_arguments(self, parser):
        parser.add_argument("--lags", type=int, default=1)
        parser.add_argument("--horizon", type=int, default=None,
                            help="last horizon (default settings.PROXYLAB['DEFAULT_HORIZON'])")
        parser.add_argument("--ordering", default=None,
                            help="Cholesky ordering as column indices, e.g. 0,1 (default settings)")

    def run(self, options):
        opts = settings.PROXYLAB
        # settle defaults here so the manifest records the values actually used
        if options.get("horizon") is None:
            options["horizon"] = opts["DEFAULT_HORIZON"]
        if not options.get("ordering"):
            options["ordering"] = opts["DEFAULT_ORDERING"]

        model  = fit_vecm(self.load_pair(options), rank=1, lags_diff=options["lags"])
        result = irf(model, options["horizon"], ordering=options["ordering"])
        for impulse, response in result.pairs():
            path = result.path(impulse, response)
            self.stdout.write(
                f"  {result.labels[impulse]:>8} -> {result.labels[response]:<8}"
                f" impact {path[0]: .4f}   h={result.horizon} {path[-1]: .4f}"
            )
        return result, "irf"
