"""
management/commands/criteria.py
─────────────────────────────────────────────────────────────────────
Good-proxy checks: relevance, sufficiency, exogeneity, stability.

Usage:
    python manage.py criteria --config imperfect.cfg --n 2000 --seed 4
    python manage.py criteria --input observed.csv          # all four reported as assumptions
"""
from __future__ import annotations

from django.conf import settings

from proxylab.management.base import LabCommand
from proxylab.services.dgp_service import DgpConfig
from proxylab.services.proxy_service import proxy_criteria_report


class Command(LabCommand):
    help = "Evaluate the proxy criteria on a simulated or ingested sample"
    command_name = "criteria"
    takes_config = True
    takes_input  = True
    takes_seed   = True
    takes_n      = True

    def add_command_arguments(self, parser):
        parser.add_argument("--critical-t", dest="critical_t", type=float, default=None,
                            help="two-sided critical |t| (default settings.PROXYLAB['CRITICAL_T'])")

    def run(self, options):
        if options.get("critical_t") is None:
            options["critical_t"] = settings.PROXYLAB["CRITICAL_T"]

        # an ingested sample without --config still needs a config object; its values are unused
        config = self.load_config(options, required=not options.get("input")) or DgpConfig()
        sample = self.load_sample(options, config)
        report = proxy_criteria_report(sample, config, critical_t=options["critical_t"])

        for c in report.criteria:
            style = self.style.SUCCESS if c.passed else self.style.WARNING
            self.stdout.write(style(f"  {c.name:<12} {c.status}"))
        return report, "criteria"
