"""
services/ingestion_service.py
─────────────────────────────────────────────────────────────────────
CSV in / CSV out for samples and time-series pairs.

Pair CSV:    date,<label1>,<label2>    ISO-8601 dates, strictly increasing,
                                       equally spaced, every cell numeric
Sample CSV:  y,x,p[,c,u,v]             written with %.17g so re-reading
                                       reproduces every float exactly

Row numbers in errors are file line numbers (header = line 1), so a
pandas index i is reported as i + 2.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..exceptions import IngestionError, InsufficientObservationsError, InvalidInputError
from .dgp_service import Sample
from .vecm_service import MIN_PAIR_OBS, TimeSeriesPair

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
SAMPLE_COLUMNS = ("y", "x", "p", "c", "u", "v")
DATE_COLUMN_NAMES = {"date", "time", "period", "datetime"}
DEFAULT_START_DATE = "2000-01-01"


def _file_row(df_idx) -> int:
    return int(df_idx) + 2


def _read_raw(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"input file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise IngestionError(f"{path} is empty", row=1) from None
    except pd.errors.ParserError as exc:
        raise IngestionError(f"{path} is not a well-formed CSV: {exc}") from None
    df.columns = [str(c).strip() for c in df.columns]
    return df


def _parse_float(cell: str) -> float:
    # float() rounds correctly, so %.17g text comes back bit-identical
    try:
        return float(cell)
    except ValueError:
        return math.nan


def _numeric_column(df: pd.DataFrame, column: str) -> np.ndarray:
    raw = df[column].str.strip()
    empty = raw == ""
    if empty.any():
        idx = empty[empty].index[0]
        raise IngestionError("missing value (gaps are not imputed)", row=_file_row(idx), column=column)
    values = raw.map(_parse_float).astype(np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = bad[bad].index[0]
        raise IngestionError(f"non-numeric value {raw[idx]!r}", row=_file_row(idx), column=column)
    return values.to_numpy(dtype=np.float64)


# ══════════════════════════════════════════════════════════════════════
#  TIME-SERIES PAIR
# ══════════════════════════════════════════════════════════════════════

def _split_columns(df: pd.DataFrame) -> Tuple[str, List[str]]:
    if len(df.columns) != 3:
        raise IngestionError(
            f"expected a date column and two numeric columns, got {len(df.columns)} columns: {list(df.columns)}",
            row=1,
        )
    named = [c for c in df.columns if c.lower() in DATE_COLUMN_NAMES]
    date_col = named[0] if named else df.columns[0]
    return date_col, [c for c in df.columns if c != date_col]


def _parse_dates(df: pd.DataFrame, column: str) -> pd.DatetimeIndex:
    raw = df[column].str.strip()
    dates = pd.to_datetime(raw, format="ISO8601", errors="coerce")
    bad = dates.isna()
    if bad.any():
        idx = bad[bad].index[0]
        raise IngestionError(f"not an ISO-8601 date: {raw[idx]!r}", row=_file_row(idx), column=column)
    return pd.DatetimeIndex(dates)


def _check_spacing(dates: pd.DatetimeIndex, column: str) -> Optional[str]:
    """Strictly increasing and equally spaced; returns the inferred frequency."""
    steps = dates[1:] - dates[:-1]
    non_increasing = np.flatnonzero(steps <= pd.Timedelta(0))
    if len(non_increasing):
        raise IngestionError("dates must be strictly increasing", row=_file_row(non_increasing[0] + 1), column=column)
    if len(dates) < 3:
        return None

    freq = pd.infer_freq(dates)
    if freq is not None:
        return freq

    # locate the first row that breaks the spacing of the opening rows
    candidate = pd.infer_freq(dates[:3])
    if candidate is not None:
        expected = pd.date_range(dates[0], periods=len(dates), freq=candidate)
        mismatch = np.flatnonzero(expected != dates)
    else:
        mismatch = np.flatnonzero(steps != steps[0]) + 1
    row = _file_row(mismatch[0]) if len(mismatch) else None
    raise IngestionError("dates are not equally spaced (gap or irregular step)", row=row, column=column)


def read_pair_csv(path) -> TimeSeriesPair:
    df = _read_raw(path)
    date_col, value_cols = _split_columns(df)
    if len(df) < MIN_PAIR_OBS:
        raise IngestionError(f"need at least {MIN_PAIR_OBS} rows, got {len(df)}")

    dates = _parse_dates(df, date_col)
    freq = _check_spacing(dates, date_col)
    obs = np.column_stack([_numeric_column(df, c) for c in value_cols])

    try:
        ts = TimeSeriesPair(
            labels=tuple(value_cols),
            obs=obs,
            dates=tuple(d.date().isoformat() if d == d.normalize() else d.isoformat() for d in dates),
        )
    except (InvalidInputError, InsufficientObservationsError) as exc:
        raise IngestionError(str(exc)) from None
    logger.info("Read pair %s from %s: n=%d freq=%s", "/".join(ts.labels), path, ts.n, freq)
    return ts


def write_pair_csv(ts: TimeSeriesPair, path, start: str = DEFAULT_START_DATE) -> Path:
    """Dates default to a daily calendar from ``start`` when the pair has none."""
    path = Path(path)
    dates = ts.dates or tuple(d.date().isoformat() for d in pd.date_range(start, periods=ts.n, freq="D"))
    df = pd.DataFrame({"date": dates, ts.labels[0]: ts.obs[:, 0], ts.labels[1]: ts.obs[:, 1]})
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    return path


# ══════════════════════════════════════════════════════════════════════
#  SAMPLE
# ══════════════════════════════════════════════════════════════════════

def read_sample_csv(path, seed: Optional[int] = None) -> Sample:
    df = _read_raw(path)
    unknown = [c for c in df.columns if c not in SAMPLE_COLUMNS]
    if unknown:
        raise IngestionError(f"unknown sample column(s) {unknown}; expected a subset of {list(SAMPLE_COLUMNS)}", row=1)
    missing = [c for c in ("y", "x", "p") if c not in df.columns]
    if missing:
        raise IngestionError(f"sample CSV lacks required column(s) {missing}", row=1)
    if df.empty:
        raise IngestionError("sample CSV has no data rows", row=2)

    columns: Dict[str, np.ndarray] = {c: _numeric_column(df, c) for c in SAMPLE_COLUMNS if c in df.columns}
    logger.info("Read sample from %s: n=%d columns=%s", path, len(df), ",".join(columns))
    return Sample(seed=seed, **columns)


def write_sample_csv(sample: Sample, path) -> Path:
    path = Path(path)
    df = pd.DataFrame(sample.columns())
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    return path
