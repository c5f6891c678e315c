"""
management/commands/mc.py
─────────────────────────────────────────────────────────────────────
Monte Carlo check of the estimator means against their DGP targets.

Usage:
    python manage.py mc --config perfect.cfg --reps 10000 --seed 7
    python manage.py mc --config imperfect.cfg --estimators omitted,imperfect_proxy --n 500
    python manage.py mc --config perfect.cfg --queue          # hand the plan to a Celery worker

The JSON report sits next to mc_estimates.csv (one row per replication).
PROXYLAB_THREADS changes the wall-clock time, never the bytes written.
"""
from __future__ import annotations

from pathlib import Path

from django.conf import settings

from proxylab.management.base import LabCommand
from proxylab.services.monte_carlo_service import McPlan, default_estimators, run_plan

DEFAULT_REPLICATIONS = 1000


def build_plan(command: LabCommand, options) -> McPlan:
    config = command.load_config(options)
    estimators = command.parse_list(options.get("estimators")) or default_estimators(config)
    return McPlan(
        config=config,
        n_per_rep=options["n"],
        replications=options["reps"],
        base_seed=options["seed"],
        estimators=tuple(estimators),
    )


class Command(LabCommand):
    help = "Run a Monte Carlo plan and compare estimator means with their population targets"
    command_name = "mc"
    takes_config = True
    takes_seed   = True
    takes_n      = True

    def add_command_arguments(self, parser):
        parser.add_argument("--reps", type=int, default=DEFAULT_REPLICATIONS,
                            help=f"replications (≥ 100, default {DEFAULT_REPLICATIONS})")
        parser.add_argument("--estimators", default="",
                            help="comma list of omitted, perfect_proxy, imperfect_proxy (default: by mode)")
        parser.add_argument("--queue", action="store_true", help="run on the Celery worker instead of inline")

    def run(self, options):
        plan = build_plan(self, options)

        if options.get("queue"):
            from proxylab.tasks import run_mc_plan_task

            out_dir = str(Path(options.get("out") or settings.PROXYLAB["OUTPUT_DIR"]))
            async_result = run_mc_plan_task.delay(
                plan.as_dict(), out_dir,
                fmt=options["format"], stem="mc",
                manifest_args=self.recorded_args(options),
                config_path=options.get("config"),
            )
            self.stdout.write(self.style.SUCCESS(f"mc: plan queued as task {async_result.id}; outputs go to {out_dir}"))
            return None, "mc"

        opts = settings.PROXYLAB
        result = run_plan(plan, threads=opts["THREADS"], max_failure_rate=opts["MAX_FAILURE_RATE"])

        threshold = opts["Z_THRESHOLD"]
        for key, summary in result.summaries.items():
            line = (f"  {key:<14} mean {summary.mean: .6f}  target {summary.target: .6f}  "
                    f"mc_se {summary.mc_se:.2e}  z {summary.z: .3f}")
            style = self.style.SUCCESS if summary.passes(threshold) else self.style.WARNING
            self.stdout.write(style(line))
        return result, "mc"
