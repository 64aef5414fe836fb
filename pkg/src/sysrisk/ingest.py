"""Time-series ingestion: CSV parsing, price-to-return conversion,
calendar alignment and period aggregation.

Three on-disk formats are understood:

* format A, prices: header ``date,price``
* format B, returns: header ``date,return``
* panel: header ``date,<asset_1>,...,<asset_N>`` (one column per asset)

Dates are ISO-8601 ``YYYY-MM-DD``; numbers use ``.`` as the decimal point and
carry no thousands separators. Returns are simple returns (price ratio - 1).
"""
from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass
from datetime import date
from functools import reduce
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "AlignedPanel",
    "parse_price_csv",
    "parse_return_csv",
    "parse_panel_csv",
    "read_series",
    "sniff_format",
    "prices_to_returns",
    "align",
    "aggregate",
    "restrict",
    "format_float",
    "write_return_csv",
    "write_panel_csv",
]

Source = Union[bytes, str, IO[bytes], IO[str]]

PRICE_HEADER = ("date", "price")
RETURN_HEADER = ("date", "return")

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_increasing(dates: Sequence[date], what: str) -> None:
    for prev, cur in zip(dates, dates[1:]):
        if not cur > prev:
            raise DataError(f"{what}: dates must be strictly increasing ({prev} then {cur})")


@dataclass(frozen=True)
class PriceSeries:
    """Dated positive prices of one asset."""

    asset_id: str
    dates: tuple
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "prices", _frozen(self.prices))
        if len(self.dates) != len(self.prices):
            raise DataError(f"{self.asset_id}: {len(self.dates)} dates but {len(self.prices)} prices")
        if len(self.dates) < 2:
            raise DataError(f"{self.asset_id}: a price series needs at least 2 points")
        _check_increasing(self.dates, self.asset_id)
        if not np.all(np.isfinite(self.prices)) or np.any(self.prices <= 0):
            raise DataError(f"{self.asset_id}: prices must be finite and positive")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Dated simple returns of one asset; every return is > -1."""

    asset_id: str
    dates: tuple
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _frozen(self.returns))
        if len(self.dates) != len(self.returns):
            raise DataError(f"{self.asset_id}: {len(self.dates)} dates but {len(self.returns)} returns")
        _check_increasing(self.dates, self.asset_id)
        if not np.all(np.isfinite(self.returns)) or np.any(self.returns <= -1):
            raise DataError(f"{self.asset_id}: returns must be finite and > -1")

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class AlignedPanel:
    """N assets by T dates of returns on a shared calendar.

    ``returns[n, k]`` is the return of ``asset_ids[n]`` at ``dates[k]``.
    ``align`` always yields T >= 2; only coarse aggregation can shrink a
    panel to a single period.
    """

    asset_ids: tuple
    dates: tuple
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))
        object.__setattr__(self, "dates", tuple(self.dates))
        values = _frozen(self.returns)
        if values.ndim != 2:
            raise DataError("panel returns must be a 2-d matrix")
        object.__setattr__(self, "returns", values)
        n, t = values.shape
        if n < 1 or n != len(self.asset_ids):
            raise DataError(f"panel has {n} rows for {len(self.asset_ids)} asset ids")
        if t < 1 or t != len(self.dates):
            raise DataError(f"panel needs dates matching its columns (got {t} columns, {len(self.dates)} dates)")
        _check_increasing(self.dates, "panel")
        if not np.all(np.isfinite(values)):
            raise DataError("panel contains non-finite returns")

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_periods(self) -> int:
        return self.returns.shape[1]

    def rows(self) -> list:
        """Split the panel back into one ReturnSeries per asset."""
        return [ReturnSeries(a, self.dates, row) for a, row in zip(self.asset_ids, self.returns)]

    def scaled(self, factor: float) -> "AlignedPanel":
        return AlignedPanel(self.asset_ids, self.dates, self.returns * factor)


# -- parsing ---------------------------------------------------------------

def _text_stream(source: Source) -> IO[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _parse_date(text: str, lineno: int) -> date:
    try:
        if len(text) != 10:
            raise ValueError
        return date.fromisoformat(text)
    except ValueError:
        raise DataError(f"line {lineno}: bad date {text!r} (expected YYYY-MM-DD)") from None


def _parse_number(text: str, lineno: int) -> float:
    if not _NUMBER.match(text):
        raise DataError(f"line {lineno}: bad number {text!r}")
    return float(text)


def _read_rows(source: Source):
    reader = csv.reader(_text_stream(source))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input") from None
    header = [h.strip().lstrip("﻿") for h in header]
    rows = []
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        rows.append((reader.line_num, [cell.strip() for cell in row]))
    return header, rows


def _parse_two_column(source: Source, expected: tuple) -> tuple:
    header, rows = _read_rows(source)
    if tuple(header) != expected:
        raise DataError(f"line 1: expected header {','.join(expected)!r}, got {','.join(header)!r}")
    points = {}
    for lineno, row in rows:
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        d = _parse_date(row[0], lineno)
        if d in points:
            raise DataError(f"line {lineno}: duplicate date {d}")
        points[d] = (_parse_number(row[1], lineno), lineno)
    dates = sorted(points)
    return dates, points


def parse_price_csv(source: Source, asset_id: str) -> PriceSeries:
    """Parse a ``date,price`` CSV into a PriceSeries, sorting rows by date."""
    dates, points = _parse_two_column(source, PRICE_HEADER)
    for d in dates:
        value, lineno = points[d]
        if not value > 0 or not np.isfinite(value):
            raise DataError(f"line {lineno}: non-positive price {value!r}")
    if len(dates) < 2:
        raise DataError(f"{asset_id}: need at least 2 price rows, got {len(dates)}")
    return PriceSeries(asset_id, dates, [points[d][0] for d in dates])


def parse_return_csv(source: Source, asset_id: str) -> ReturnSeries:
    """Parse a ``date,return`` CSV into a ReturnSeries, sorting rows by date."""
    dates, points = _parse_two_column(source, RETURN_HEADER)
    for d in dates:
        value, lineno = points[d]
        if not value > -1 or not np.isfinite(value):
            raise DataError(f"line {lineno}: return {value!r} must be > -1")
    if not dates:
        raise DataError(f"{asset_id}: no return rows")
    return ReturnSeries(asset_id, dates, [points[d][0] for d in dates])


def parse_panel_csv(source: Source) -> AlignedPanel:
    """Parse a wide ``date,<asset>,...`` CSV (as written by write_panel_csv)."""
    header, rows = _read_rows(source)
    if len(header) < 2 or header[0] != "date":
        raise DataError("line 1: panel header must be 'date,<asset_1>,...'")
    ids = header[1:]
    if len(set(ids)) != len(ids):
        raise DataError("line 1: duplicate asset column")
    cells = {}
    for lineno, row in rows:
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        d = _parse_date(row[0], lineno)
        if d in cells:
            raise DataError(f"line {lineno}: duplicate date {d}")
        cells[d] = [_parse_number(x, lineno) for x in row[1:]]
    dates = sorted(cells)
    return AlignedPanel(ids, dates, np.array([cells[d] for d in dates]).T.reshape(len(ids), len(dates)))


def sniff_format(path: Union[str, os.PathLike]) -> str:
    """Return ``"A"``, ``"B"``, ``"C"`` or ``"panel"`` from a file's header line."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
    header = tuple(h.strip().lstrip("﻿") for h in first.strip().split(","))
    if header == PRICE_HEADER:
        return "A"
    if header == RETURN_HEADER:
        return "B"
    if header == ("date", "firm_id", "sic", "market_cap", "return"):
        return "C"
    if len(header) >= 2 and header[0] == "date":
        return "panel"
    raise DataError(f"{path}: unrecognised header {first.strip()!r}")


def read_series(path, asset_id: str | None = None, fmt: str | None = None) -> list:
    """Read a price, return or panel file as a list of ReturnSeries.

    Price files are converted to returns. The asset id defaults to the
    file stem; panel files keep their column names.
    """
    fmt = fmt or sniff_format(path)
    asset_id = asset_id or os.path.splitext(os.path.basename(path))[0]
    with open(path, "rb") as fh:
        try:
            if fmt == "A":
                return [prices_to_returns(parse_price_csv(fh, asset_id))]
            if fmt == "B":
                return [parse_return_csv(fh, asset_id)]
            if fmt == "panel":
                return parse_panel_csv(fh).rows()
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}: format {fmt!r} cannot be read as a return series")


# -- transforms ------------------------------------------------------------

def prices_to_returns(p: PriceSeries) -> ReturnSeries:
    """Simple returns ``p[i] / p[i-1] - 1`` stamped with the later date."""
    prices = p.prices
    return ReturnSeries(p.asset_id, p.dates[1:], prices[1:] / prices[:-1] - 1.0)


def align(series: Sequence[ReturnSeries]) -> AlignedPanel:
    """Intersect the calendars of several series into one panel.

    Dates missing from any series are dropped; nothing is interpolated.
    Asset order follows the input order.
    """
    if not series:
        raise DataError("align needs at least one series")
    common = reduce(lambda acc, s: acc & set(s.dates), series[1:], set(series[0].dates))
    if not common:
        raise DataError("series share no dates")
    if len(common) < 2:
        raise DataError(f"series share only {len(common)} date; need at least 2")
    dates = sorted(common)
    rows = []
    for s in series:
        index = {d: i for i, d in enumerate(s.dates)}
        rows.append(s.returns[[index[d] for d in dates]])
    return AlignedPanel([s.asset_id for s in series], dates, np.vstack(rows))


def aggregate(panel: AlignedPanel, period: int) -> AlignedPanel:
    """Compound consecutive blocks of ``period`` returns into one return.

    Each block is stamped with its last date; a trailing partial block is
    dropped.
    """
    if not isinstance(period, (int, np.integer)) or period < 1:
        raise ConfigError(f"aggregation period must be a positive integer, got {period!r}")
    if period > panel.n_periods:
        raise ConfigError(f"aggregation period {period} exceeds panel length {panel.n_periods}")
    if period == 1:
        return panel
    blocks = panel.n_periods // period
    used = panel.returns[:, : blocks * period].reshape(panel.n_assets, blocks, period)
    compounded = np.prod(1.0 + used, axis=2) - 1.0
    dates = panel.dates[period - 1 : blocks * period : period]
    return AlignedPanel(panel.asset_ids, dates, compounded)


def restrict(panel: AlignedPanel, start: date | None = None, end: date | None = None) -> AlignedPanel:
    """Keep only the dates within ``[start, end]`` (either bound optional)."""
    keep = [i for i, d in enumerate(panel.dates) if (start is None or d >= start) and (end is None or d <= end)]
    if len(keep) < 2:
        raise DataError(f"date range {start}..{end} leaves {len(keep)} dates")
    return AlignedPanel(panel.asset_ids, [panel.dates[i] for i in keep], panel.returns[:, keep])


# -- writing ---------------------------------------------------------------

def format_float(x: float) -> str:
    """Shortest text that parses back to exactly ``x``."""
    return repr(float(x))


def write_return_csv(series: ReturnSeries, fh: IO[str]) -> None:
    fh.write("date,return\n")
    for d, r in zip(series.dates, series.returns):
        fh.write(f"{d.isoformat()},{format_float(r)}\n")


def write_panel_csv(panel: AlignedPanel, fh: IO[str]) -> None:
    fh.write(",".join(("date",) + panel.asset_ids) + "\n")
    for k, d in enumerate(panel.dates):
        fh.write(",".join([d.isoformat()] + [format_float(x) for x in panel.returns[:, k]]) + "\n")


def series_from_iterable(asset_id: str, points: Iterable) -> ReturnSeries:
    """Build a ReturnSeries from ``(date, return)`` pairs in any order."""
    pts = sorted(points)
    return ReturnSeries(asset_id, [d for d, _ in pts], [r for _, r in pts])
