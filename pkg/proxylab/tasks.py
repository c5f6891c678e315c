"""
proxylab/tasks.py
─────────────────────────────────────────────────────────────────────
Celery background tasks.

`mc --queue` sends the plan here instead of running it in-process:

    celery -A proxylab_config worker --loglevel=info
"""

from __future__ import annotations

import logging
from typing import Optional

from celery import shared_task

logger = logging.getLogger(__name__)


# ─────────────────────────────────────────────────────────────────────
# Monte Carlo plan, off-line
# ─────────────────────────────────────────────────────────────────────
@shared_task(bind=True, max_retries=0, acks_late=True)
def run_mc_plan_task(
    self,
    plan_payload: dict,
    output_dir: str,
    fmt: str = "json",
    stem: str = "mc",
    manifest_args: Optional[dict] = None,
    config_path: Optional[str] = None,
):
    """
    Rebuild the McPlan from its JSON payload, run it, write the report
    and a manifest under ``output_dir``. Returns the summary dictionary.

    ``manifest_args`` are the command-line arguments of the ``mc`` call
    that queued the plan, so the manifest replays the same run inline.
    A failed plan is not retried: the result is a pure function of the payload.
    """
    from django.conf import settings

    from .services.monte_carlo_service import McPlan, run_plan
    from .services.report_service import emit_report, jsonable, write_manifest

    plan = McPlan.from_dict(plan_payload)
    opts = settings.PROXYLAB
    logger.info("[mc task %s] plan: reps=%d n=%d", self.request.id, plan.replications, plan.n_per_rep)

    result  = run_plan(plan, threads=opts["THREADS"], max_failure_rate=opts["MAX_FAILURE_RATE"])
    outputs = emit_report(result, fmt=fmt, out_dir=output_dir, stem=stem)
    write_manifest(
        output_dir,
        command="mc",
        args=manifest_args if manifest_args is not None else {"plan": plan.as_dict(), "format": fmt},
        outputs=outputs,
        seed=plan.base_seed,
        config_path=config_path,
    )
    logger.info("[mc task %s] done: %d successes", self.request.id, result.n_success)
    summary = result.as_dict()
    summary.pop("failures", None)
    return jsonable(summary)
