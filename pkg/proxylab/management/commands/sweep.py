"""
management/commands/sweep.py
─────────────────────────────────────────────────────────────────────
Bias curve: one Monte Carlo plan per value of a swept DGP parameter.

Usage:
    python manage.py sweep --config omitted.cfg --sweep rho_xc:-0.8,-0.4,0,0.4,0.8 --reps 2000
    python manage.py sweep --config perfect.cfg --sweep lambda:0.5,1,2,4 --plot
"""
from __future__ import annotations

from django.conf import settings
from django.core.management.base import CommandError

from proxylab.management.base import USAGE_ERROR, LabCommand
from proxylab.management.commands.mc import DEFAULT_REPLICATIONS, build_plan
from proxylab.services.monte_carlo_service import SWEEP_PARAMETERS, BiasCurve, bias_curve, parse_sweep


class Command(LabCommand):
    help = "Monte Carlo bias curve over a grid of one DGP parameter"
    command_name = "sweep"
    takes_config = True
    takes_seed   = True
    takes_n      = True
    takes_plot   = True

    def add_command_arguments(self, parser):
        parser.add_argument("--sweep",
                            help=f"<param>:<v1,v2,...> with param in {sorted(SWEEP_PARAMETERS)}")
        parser.add_argument("--reps", type=int, default=DEFAULT_REPLICATIONS)
        parser.add_argument("--estimators", default="")

    def run(self, options):
        if not options.get("sweep"):
            raise CommandError("--sweep is required", returncode=USAGE_ERROR)
        parameter, values = parse_sweep(options["sweep"])
        plan  = build_plan(self, options)
        curve = BiasCurve(
            parameter=parameter,
            points=tuple(bias_curve(plan, parameter, values, threads=settings.PROXYLAB["THREADS"])),
        )
        for value, result in curve.points:
            means = "  ".join(f"{k}={s.mean: .4f}" for k, s in result.summaries.items())
            self.stdout.write(f"  {parameter}={value:g}  {means}")
        return curve, "sweep"
