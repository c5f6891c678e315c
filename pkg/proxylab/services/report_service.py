"""
services/report_service.py
─────────────────────────────────────────────────────────────────────
Writes any lab result as json, csv or text, optional SVG plots, and the
per-run manifest.

    paths = emit_report(result, fmt="json", out_dir="out", stem="mc", plot=False)
    write_manifest("out", command="mc", args={...}, outputs=paths)

JSON is written with a fixed key order and ``allow_nan=False``
(non-finite numbers become null); CSV is RFC 4180 (CRLF line ends,
minimal quoting); text mirrors the two-equation VEC display.
Schemas are listed in docs/formats.md.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from functools import singledispatch
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .. import __version__
from ..exceptions import ConfigError, OutputError
from .critical_values import LEVELS, TABLE_VERSIONS, johansen_critical_values
from .dgp_service import Sample
from .ingestion_service import FLOAT_FORMAT, write_pair_csv, write_sample_csv
from .monte_carlo_service import BiasCurve, McResult
from .proxy_service import BiasReport, CriteriaReport
from .svg_service import LinePlot
from .unit_root_service import AdfResult
from .vecm_service import IrfResult, JohansenResult, TimeSeriesPair, VecmModel

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "text")
MANIFEST_NAME = "manifest.json"


# ══════════════════════════════════════════════════════════════════════
#  PRIMITIVES
# ══════════════════════════════════════════════════════════════════════

def jsonable(obj: Any) -> Any:
    """numpy → Python, non-finite floats → None, tuples → lists."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(payload: Any) -> str:
    return json.dumps(jsonable(payload), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def ensure_dir(out_dir) -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out_dir}: {exc.strerror or exc}") from None
    if not out_dir.is_dir():
        raise OutputError(f"output path {out_dir} is not a directory")
    return out_dir


def _write_text(path: Path, content: str) -> Path:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def _write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    df = pd.DataFrame([list(r) for r in rows], columns=list(header))
    try:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def _num(value: Optional[float], digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "-"
    return f"{value:.{digits}f}"


def _text_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    cells = [[str(h) for h in header]] + [
        [_num(v) if isinstance(v, (float, np.floating)) or v is None else str(v) for v in row]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# ══════════════════════════════════════════════════════════════════════
#  PAYLOAD / TABLE / TEXT per result type
# ══════════════════════════════════════════════════════════════════════

@singledispatch
def payload(result) -> dict:
    if hasattr(result, "as_dict"):
        return result.as_dict()
    raise ConfigError(f"no report format for {type(result).__name__}")


@payload.register
def _(result: McResult) -> dict:
    return {"type": "mc_result", **result.as_dict()}


@payload.register
def _(result: BiasCurve) -> dict:
    return {"type": "bias_curve", **result.as_dict()}


@payload.register
def _(result: JohansenResult) -> dict:
    return {"type": "johansen", **result.as_dict()}


@payload.register
def _(result: VecmModel) -> dict:
    return {"type": "vecm", **result.as_dict()}


@payload.register
def _(result: IrfResult) -> dict:
    return {"type": "irf", **result.as_dict()}


@payload.register
def _(result: CriteriaReport) -> dict:
    return {"type": "criteria", **result.as_dict()}


@payload.register(list)
@payload.register(tuple)
def _(result) -> dict:
    if all(isinstance(r, BiasReport) for r in result):
        return {"type": "estimates", "reports": [r.as_dict() for r in result]}
    if all(isinstance(r, AdfResult) for r in result):
        return {"type": "adf", "results": [r.as_dict() for r in result]}
    raise ConfigError("no report format for a sequence of mixed results")


@singledispatch
def table(result) -> Tuple[List[str], List[list]]:
    raise ConfigError(f"no CSV format for {type(result).__name__}")


_SUMMARY_FIELDS = ("mean", "sd", "mc_se", "target", "z", "n_fail")


@table.register
def _(result: McResult):
    header = ["estimator", *_SUMMARY_FIELDS]
    rows = [[key, *(s.as_dict()[f] for f in _SUMMARY_FIELDS)] for key, s in result.summaries.items()]
    return header, rows


@table.register
def _(result: BiasCurve):
    keys = result.keys
    header = [result.parameter] + [f"{k}_{f}" for k in keys for f in _SUMMARY_FIELDS]
    rows = []
    for value, res in result.points:
        row = [value]
        for k in keys:
            summary = res[k].as_dict()
            row.extend(summary[f] for f in _SUMMARY_FIELDS)
        rows.append(row)
    return header, rows


_BIAS_FIELDS = ("estimate", "theoretical_target", "bias_term_formula", "sampling_term",
                "population_target", "direction", "std_error", "t_stat")


@table.register(list)
@table.register(tuple)
def _(result):
    if all(isinstance(r, BiasReport) for r in result):
        header = ["estimator", *_BIAS_FIELDS]
        return header, [[r.estimator_name, *(r.as_dict()[f] for f in _BIAS_FIELDS)] for r in result]
    if all(isinstance(r, AdfResult) for r in result):
        header = ["label", "spec", "statistic", "lags_used", "nobs", "degenerate"]
        header += [f"cv_{lv}" for lv in LEVELS] + [f"reject_{lv}" for lv in LEVELS]
        rows = [
            [r.label, r.spec, r.statistic, r.lags_used, r.nobs, r.degenerate]
            + [r.critical_values[lv] for lv in LEVELS]
            + [r.reject_unit_root[lv] for lv in LEVELS]
            for r in result
        ]
        return header, rows
    raise ConfigError("no CSV format for a sequence of mixed results")


@table.register
def _(result: CriteriaReport):
    rows = []
    for c in result.criteria:
        if not c.estimates:
            rows.append([c.name, c.status, "", None, c.note])
        for metric, value in c.estimates.items():
            rows.append([c.name, c.status, metric, value, c.note])
    return ["criterion", "status", "metric", "value", "note"], rows


@table.register
def _(result: JohansenResult):
    header = ["r", "eigenvalue", "trace_stat", "trace_cv_5%", "max_eig_stat", "max_eig_cv_5%"]
    rows = [
        [r, result.eigenvalues[r], result.trace_stats[r], result.trace_critical[r]["5%"],
         result.max_eig_stats[r], result.max_eig_critical[r]["5%"]]
        for r in (0, 1)
    ]
    return header, rows


@table.register
def _(result: VecmModel):
    header = ["parameter", "equation", "regressor", "estimate", "std_error", "t_stat", "stars"]
    labels = result.labels
    rows = [["beta", "", name, float(b), None, None, ""]
            for name, b in zip([labels[0], labels[1], "const"], result.beta)]
    for eq in range(2):
        t = result.alpha_t[eq]
        rows.append(["alpha", labels[eq], "ECT", float(result.alpha[eq]), float(result.alpha_se[eq]), t, result.stars(eq)])
    for eq in range(2):
        for m in range(2):
            se = float(result.gamma_se[eq, m])
            g  = float(result.gamma[eq, m])
            rows.append(["gamma", labels[eq], f"d_{labels[m]}_lag1", g, se, (g / se) if se > 0 else None, ""])
    return header, rows


@table.register
def _(result: IrfResult):
    names = [f"{result.labels[i]}->{result.labels[r]}" for i, r in result.pairs()]
    rows = [[h] + [float(result.path(i, r)[h]) for i, r in result.pairs()] for h in result.horizons]
    return ["horizon", *names], rows


@singledispatch
def text(result) -> str:
    header, rows = table(result)
    return _text_table(header, rows)


@text.register
def _(result: McResult) -> str:
    plan = result.plan
    head = (
        f"Monte Carlo: mode={plan.config.mode} n={plan.n_per_rep} replications={plan.replications} "
        f"base_seed={plan.base_seed} successes={result.n_success}\n\n"
    )
    header, rows = table(result)
    return head + _text_table(header, rows)


def _signed(value: float, name: str, first: bool = False) -> str:
    sign = "-" if value < 0 else ("" if first else "+")
    magnitude = f"{abs(value):.4f}"
    body = f"{magnitude} {name}".rstrip() if name else magnitude
    return f"{sign}{body}" if first else f"{sign} {body}"


def ect_equation(model: VecmModel) -> str:
    y1, y2 = model.labels
    return f"{y1}_{{t-1}} {_signed(model.beta[1], f'{y2}_{{t-1}}')} {_signed(model.beta[2], '')}"


def vecm_text(model: VecmModel) -> str:
    y1, y2 = model.labels
    ect_body = ect_equation(model)
    trace_cv = [johansen_critical_values(2, r)["5%"] for r in (0, 1)]
    lines = [
        f"VEC({model.lags_diff}) with restricted constant, n = {model.n_obs}, "
        f"rank selected (trace, 5%) = {model.rank_selected}",
        f"Trace: r=0 {_num(float(model.trace_stats[0]), 2)} [5% cv {trace_cv[0]:.2f}]   "
        f"r<=1 {_num(float(model.trace_stats[1]), 2)} [5% cv {trace_cv[1]:.2f}]",
        "",
        f"ECT_{{t-1}} = {ect_body}",
        "",
    ]
    for eq, name in enumerate((y1, y2)):
        stars = model.stars(eq)
        tag = f" ({stars})" if stars == "n.s." else stars
        terms = [f"{_signed(float(model.alpha[eq]), '', first=True)}{tag} [{ect_body}]"]
        for m, lag_name in enumerate((y1, y2)):
            terms.append(_signed(float(model.gamma[eq, m]), f"d{lag_name}_{{t-1}}"))
        lines.append(f"d{name}_t = " + " ".join(terms) + f" + e{eq + 1}_t")
    lines.append("")
    header, rows = table(model)
    return "\n".join(lines) + "\n" + _text_table(header, rows)


@text.register
def _(result: VecmModel) -> str:
    return vecm_text(result)


@text.register
def _(result: CriteriaReport) -> str:
    lines = [f"Proxy criteria (critical |t| = {result.critical_t})"]
    for c in result.criteria:
        detail = ", ".join(f"{k}={_num(v)}" for k, v in c.estimates.items())
        lines.append(f"  {c.name:<12} {c.status:<24} {detail}".rstrip())
        if c.note:
            lines.append(f"  {'':<12} {c.note}")
    return "\n".join(lines) + "\n"


# ══════════════════════════════════════════════════════════════════════
#  PLOTS
# ══════════════════════════════════════════════════════════════════════

def plot_bias_curve(curve: BiasCurve, path) -> Path:
    plot = LinePlot(title=f"Monte Carlo means across {curve.parameter}", x_label=curve.parameter,
                    y_label="mean ± 2·mc_se")
    grid = curve.grid
    for key in curve.keys:
        means, ses = curve.means(key), curve.mc_ses(key)
        plot.add_band(grid, means - 2 * ses, means + 2 * ses)
    for key in curve.keys:
        plot.add_line(grid, curve.means(key), label=key)
    return plot.write(path)


def plot_irf(result: IrfResult, out_dir, stem: str) -> List[Path]:
    """One chart per (impulse, response) pair: four files for a bivariate system."""
    paths = []
    for impulse, response in result.pairs():
        imp, resp = result.labels[impulse], result.labels[response]
        plot = LinePlot(title=f"Response of {resp} to a {imp} shock", x_label="horizon", y_label=resp)
        plot.add_line(result.horizons, result.path(impulse, response), label=f"{imp} -> {resp}")
        paths.append(plot.write(Path(out_dir) / f"{stem}_{imp}_to_{resp}.svg"))
    return paths


# ══════════════════════════════════════════════════════════════════════
#  EMIT
# ══════════════════════════════════════════════════════════════════════

def emit_report(result, fmt: str = "json", out_dir=".", stem: str = "report", plot: bool = False) -> List[Path]:
    """Write ``result`` under ``out_dir``; returns every file written, in write order."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    out_dir = ensure_dir(out_dir)
    written: List[Path] = []

    if isinstance(result, Sample):
        written.append(write_sample_csv(result, out_dir / f"{stem}.csv"))
        return written
    if isinstance(result, TimeSeriesPair):
        written.append(write_pair_csv(result, out_dir / f"{stem}.csv"))
        return written

    if fmt == "json":
        written.append(_write_text(out_dir / f"{stem}.json", dumps(payload(result))))
    elif fmt == "csv":
        header, rows = table(result)
        written.append(_write_table(out_dir / f"{stem}.csv", header, rows))
    else:
        written.append(_write_text(out_dir / f"{stem}.txt", text(result)))

    if isinstance(result, McResult):
        estimates = result.estimates_table()
        written.append(_write_table(
            out_dir / f"{stem}_estimates.csv", list(estimates), zip(*(v.tolist() for v in estimates.values())),
        ))

    if plot:
        if isinstance(result, BiasCurve):
            written.append(plot_bias_curve(result, out_dir / f"{stem}.svg"))
        elif isinstance(result, IrfResult):
            written.extend(plot_irf(result, out_dir, stem))

    logger.info("Report written: %s", ", ".join(p.name for p in written))
    return written


# ══════════════════════════════════════════════════════════════════════
#  MANIFEST
# ══════════════════════════════════════════════════════════════════════

def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _input_entry(path) -> Optional[Dict[str, str]]:
    if path is None:
        return None
    path = Path(path)
    return {"path": str(path), "sha256": file_sha256(path)}


def write_manifest(
    out_dir,
    command: str,
    args: Dict[str, Any],
    outputs: Sequence[Path],
    seed: Optional[int] = None,
    input_path=None,
    config_path=None,
) -> Path:
    """
    Everything needed to re-run the command: normalised arguments, seed,
    input hashes and the critical-table versions. No clock, host or thread
    count, so a re-run writes the same bytes.
    """
    out_dir = ensure_dir(out_dir)
    manifest = {
        "proxylab_version": __version__,
        "command":          command,
        "args":             {k: args[k] for k in sorted(args)},
        "seed":             seed,
        "inputs":           {"input": _input_entry(input_path), "config": _input_entry(config_path)},
        "critical_tables":  dict(TABLE_VERSIONS),
        "outputs":          {p.name: file_sha256(p) for p in sorted(outputs, key=lambda p: p.name)},
    }
    return _write_text(out_dir / MANIFEST_NAME, dumps(manifest))


def read_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {path} is not valid JSON: {exc}") from None
    if "command" not in manifest or "args" not in manifest:
        raise ConfigError(f"manifest {path} lacks command/args")
    return manifest
