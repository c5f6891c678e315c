"""
management/commands/adf.py
─────────────────────────────────────────────────────────────────────
Augmented Dickey–Fuller unit-root test on the columns of a pair CSV.

Usage:
    python manage.py adf --input pair.csv                       # both columns, constant
    python manage.py adf --input pair.csv --column gpr --spec ct
    python manage.py adf --input pair.csv --differences --format text
"""
from __future__ import annotations

import numpy as np

from proxylab.management.base import LabCommand
from proxylab.services.unit_root_service import AdfSpec, adf_test, parse_spec


class Command(LabCommand):
    help = "ADF test with AIC lag selection and MacKinnon critical values"
    command_name = "adf"
    takes_input  = True

    def add_command_arguments(self, parser):
        parser.add_argument("--column", default="", help="column label or 0/1 index (default: both)")
        parser.add_argument("--spec", default=AdfSpec.CONSTANT.value,
                            help="constant (c) or constant_trend (ct)")
        parser.add_argument("--max-lags", dest="max_lags", type=int, default=None,
                            help="upper bound of the AIC search (default 12·(n/100)^¼)")
        parser.add_argument("--lags", type=int, default=None, help="fixed augmentation order, no search")
        parser.add_argument("--differences", action="store_true",
                            help="also test the first difference of every selected column")

    def run(self, options):
        pair = self.load_pair(options)
        spec = parse_spec(options["spec"])

        column = options["column"]
        if column == "":
            selected = list(pair.labels)
        elif column in ("0", "1"):
            selected = [pair.labels[int(column)]]
        else:
            pair.column(column)  # ConfigError naming the available labels
            selected = [column]

        series = [(label, pair.column(label)) for label in selected]
        if options["differences"]:
            series += [(f"d_{label}", np.diff(pair.column(label))) for label in selected]

        results = []
        for label, values in series:
            res = adf_test(values, spec=spec, max_lags=options["max_lags"], lags=options["lags"], label=label)
            verdict = "reject unit root at 5%" if res.reject_unit_root["5%"] else "unit root not rejected at 5%"
            self.stdout.write(f"  {label:<12} τ = {res.statistic: .4f}  k = {res.lags_used}  ({verdict})")
            results.append(res)
        return results, "adf"
