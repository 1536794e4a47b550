"""Reading and writing delimited tables, and correlation screening of indicators.

Input files hold one period per row.  The first row may be a header, and a
column of ISO-8601 dates may appear anywhere; it is kept as row labels.
Numbers are written with 12 significant digits.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateColumnWarning, DomainError, ParseError, ShapeError

FLOAT_FORMAT = "{:.12g}"


@dataclass(frozen=True)
class LowFrequencySeries:
    values: np.ndarray
    name: str = "y"
    dates: list[str] | None = None

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class IndicatorPanel:
    values: np.ndarray
    columns: list[str]
    dates: list[str] | None = None

    @property
    def shape(self):
        return self.values.shape


def _is_date(text: str) -> bool:
    try:
        dt.date.fromisoformat(text.strip()[:10])
    except ValueError:
        return False
    return len(text.strip()) >= 10


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_rows(path) -> list[tuple[int, list[str]]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=path) from None
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    delimiter = "\t" if "\t" in first else ";" if ";" in first else ","
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text), delimiter=delimiter), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        rows.append((lineno, [cell.strip() for cell in row]))
    if not rows:
        raise ParseError("file is empty", path=path)
    return rows


def read_table(path) -> tuple[np.ndarray, list[str] | None, list[str] | None]:
    """Parse a numeric table; returns ``(values, header, dates)``."""
    rows = _read_rows(path)
    width = len(rows[0][1])
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(
                f"expected {width} fields, found {len(row)}", path=path, line=lineno
            )

    header = None
    first_line, first = rows[0]
    data_rows = rows
    probe = rows[1][1] if len(rows) > 1 else first
    date_cols = [j for j, cell in enumerate(probe) if _is_date(cell) and not _is_number(cell)]
    date_col = date_cols[0] if date_cols else None
    if any(not _is_number(c) for j, c in enumerate(first) if j != date_col):
        header = first
        data_rows = rows[1:]
    if not data_rows:
        raise ParseError("no data rows", path=path)

    num_cols = [j for j in range(width) if j != date_col]
    if not num_cols:
        raise ParseError("no numeric columns", path=path)
    values = np.empty((len(data_rows), len(num_cols)))
    dates = [] if date_col is not None else None
    for i, (lineno, row) in enumerate(data_rows):
        if date_col is not None:
            if not _is_date(row[date_col]):
                raise ParseError(
                    f"invalid date {row[date_col]!r}", path=path, line=lineno, column=date_col + 1
                )
            dates.append(row[date_col])
        for k, j in enumerate(num_cols):
            try:
                values[i, k] = float(row[j])
            except ValueError:
                raise ParseError(
                    f"invalid number {row[j]!r}", path=path, line=lineno, column=j + 1
                ) from None
    if not np.all(np.isfinite(values)):
        raise ParseError("non-finite values are not supported", path=path)
    names = [header[j] for j in num_cols] if header is not None else None
    return values, names, dates


def load_series(path) -> LowFrequencySeries:
    values, names, dates = read_table(path)
    if values.shape[1] != 1:
        raise ShapeError(f"{path}: expected a single numeric column, found {values.shape[1]}")
    return LowFrequencySeries(values[:, 0], names[0] if names else "y", dates)


def load_panel(path) -> IndicatorPanel:
    values, names, dates = read_table(path)
    if names is None:
        names = [f"x{j + 1}" for j in range(values.shape[1])]
    if len(set(names)) != len(names):
        raise ParseError("duplicate column names", path=path, line=1)
    return IndicatorPanel(values, list(names), dates)


def check_panel_rows(panel: IndicatorPanel, n_low: int, ratio: int) -> None:
    if panel.values.shape[0] < n_low * ratio:
        raise ShapeError(
            f"indicator panel has {panel.values.shape[0]} rows, "
            f"expected at least n_low*ratio = {n_low * ratio}"
        )


def format_value(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FORMAT.format(float(x))
    return str(x)


def write_table(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_matrix(path, values, columns: Sequence[str], dates=None) -> None:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if dates is not None:
        write_table(path, ["date", *columns], ([d, *r] for d, r in zip(dates, values)))
    else:
        write_table(path, list(columns), values)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(FLOAT_FORMAT.format(x)) if math.isfinite(x) else str(x)
    return obj


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n")


class Drop(NamedTuple):
    dropped: int
    kept: int | None
    corr: float
    reason: str


def correlation_filter(X, threshold: float = 0.99):
    """Drop later columns that are almost collinear with an earlier kept one.

    Columns are visited in index order; column ``j`` is dropped when
    ``|corr(x_i, x_j)| > threshold`` for some kept ``i < j`` (the first such
    ``i`` is recorded).  Zero-variance columns are dropped with a
    `DegenerateColumnWarning`.

    Returns
    -------
    X_filtered : ndarray
    kept : list of int
        Surviving column indices.
    dropped : list of Drop
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"expected a matrix, got {X.ndim} dimensions")
    if not 0.0 < threshold <= 1.0:
        raise DomainError(f"threshold must lie in (0, 1], got {threshold!r}")
    n, d = X.shape
    if n < 3:
        raise DomainError(f"need at least 3 rows to estimate correlations, got {n}")
    centered = X - X.mean(axis=0)
    sd = np.sqrt((centered**2).sum(axis=0))
    degenerate = sd <= 1e-12 * np.maximum(np.abs(X).max(axis=0), 1.0)
    Z = np.divide(centered, sd, out=np.zeros_like(centered), where=~degenerate)
    kept: list[int] = []
    dropped: list[Drop] = []
    for j in range(d):
        if degenerate[j]:
            warnings.warn(f"column {j} has zero variance and was dropped", DegenerateColumnWarning, stacklevel=2)
            dropped.append(Drop(j, None, math.nan, "zero-variance"))
            continue
        if kept:
            corr = Z[:, kept].T @ Z[:, j]
            over = np.flatnonzero(np.abs(corr) > threshold)
            if over.size:
                i = over[0]
                dropped.append(Drop(j, kept[i], float(corr[i]), "correlated"))
                continue
        kept.append(j)
    return X[:, kept], kept, dropped
