"""Lagged cross-correlation between two return series.

For a window of length k both series are demeaned, the lagged product sums
are read off a full linear convolution (one series against the other,
time-reversed), each lag is averaged over its k - l overlapping terms and
the result is scaled by the two population standard deviations. A
coefficient outside ``+-2/sqrt(k)`` is treated as significant.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import date
from typing import IO, Optional

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .ingest import ReturnSeries, format_float

__all__ = [
    "Direction",
    "LagCovariances",
    "XCorrReport",
    "RollingXCorrEntry",
    "RollingXCorrResult",
    "lag_covariances",
    "significance_band",
    "xcorr",
    "xcorr_bruteforce",
    "rolling_xcorr",
    "write_xcorr_csv",
    "write_lag_dump_csv",
    "DEFAULT_WINDOW",
    "DEFAULT_LAG",
]

DEFAULT_WINDOW = 90
DEFAULT_LAG = 1


class Direction(str, enum.Enum):
    """Which series is allowed to lead.

    With ``A_LEADS_B`` the coefficient at lag l pairs ``a[t]`` with
    ``b[t + l]``; ``B_LEADS_A`` pairs ``b[t]`` with ``a[t + l]``.
    """

    A_LEADS_B = "A_leads_B"
    B_LEADS_A = "B_leads_A"


@dataclass(frozen=True)
class LagCovariances:
    sums: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class XCorrReport:
    r: np.ndarray
    band: float
    k: int
    direction: Direction

    def significant(self, lag: int) -> int:
        return _significance(self.r[lag], self.band)


@dataclass(frozen=True)
class RollingXCorrEntry:
    """``r_at_lag`` is NaN and ``error`` set when a window is constant."""

    window_end_date: date
    r_at_lag: float
    band: float
    error: Optional[str] = None
    r: Optional[np.ndarray] = None

    @property
    def significant(self) -> Optional[int]:
        return None if self.error else _significance(self.r_at_lag, self.band)


@dataclass(frozen=True)
class RollingXCorrResult:
    lag: int
    window_length: int
    stride: int
    direction: Direction
    entries: tuple

    def values(self) -> np.ndarray:
        return np.array([e.r_at_lag for e in self.entries])

    def end_dates(self) -> list:
        return [e.window_end_date for e in self.entries]


def _significance(r: float, band: float) -> int:
    if r > band:
        return 1
    if r < -band:
        return -1
    return 0


def _check_pair(a, b) -> tuple:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ConfigError("cross-correlation inputs must be 1-d")
    if a.shape != b.shape:
        raise ConfigError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ConfigError("cross-correlation needs at least 2 points")
    return a, b


def lag_covariances(a, b) -> LagCovariances:
    """Lagged product sums ``sums[l] = sum_t a[t + l] * b[t]`` for l in [0, k).

    ``a`` and ``b`` must already be demeaned. The full 2k - 1 convolution of
    ``a`` with reversed ``b`` has the zero-lag sum at its centre; the tail
    from the centre onward is kept.
    """
    a, b = _check_pair(a, b)
    k = a.size
    full = np.convolve(a, b[::-1])
    return LagCovariances(full[k - 1:], np.arange(k, 0, -1))


def significance_band(k: int) -> float:
    """Two-standard-error band ``2 / sqrt(k)`` for a window of k points."""
    return 2.0 / math.sqrt(k)


def _demeaned_with_sigma(x: np.ndarray, name: str) -> tuple:
    if np.ptp(x) == 0.0:
        raise NumericError(f"series {name} is constant over the window")
    d = x - x.mean()
    sigma = math.sqrt(float(np.dot(d, d)) / d.size)
    if sigma == 0.0:
        raise NumericError(f"series {name} is constant over the window")
    return d, sigma


def _values(x):
    return x.returns if isinstance(x, ReturnSeries) else x


def _oriented(a, b, direction):
    a, b = _check_pair(_values(a), _values(b))
    da, sa = _demeaned_with_sigma(a, "A")
    db, sb = _demeaned_with_sigma(b, "B")
    direction = Direction(direction)
    # lag_covariances shifts its first argument forward in time
    if direction is Direction.A_LEADS_B:
        return db, da, sa * sb, direction
    return da, db, sa * sb, direction


def xcorr(a, b, direction=Direction.A_LEADS_B) -> XCorrReport:
    """Cross-correlation coefficient at every lag 0..k-1 of one window.

    ``a`` and ``b`` are equal-length windows (ReturnSeries or arrays).
    """
    lead, follow, scale, direction = _oriented(a, b, direction)
    lc = lag_covariances(lead, follow)
    r = lc.sums / lc.counts / scale
    return XCorrReport(r, significance_band(lead.size), lead.size, direction)


def xcorr_bruteforce(a, b, direction=Direction.A_LEADS_B) -> XCorrReport:
    """Same contract as ``xcorr`` using explicit loops; a cross-check only."""
    a, b = _check_pair(_values(a), _values(b))
    k = a.size
    ma = sum(a.tolist()) / k
    mb = sum(b.tolist()) / k
    da = [x - ma for x in a.tolist()]
    db = [x - mb for x in b.tolist()]
    if max(a.tolist()) == min(a.tolist()) or max(b.tolist()) == min(b.tolist()):
        raise NumericError("constant series in window")
    sa = math.sqrt(sum(x * x for x in da) / k)
    sb = math.sqrt(sum(x * x for x in db) / k)
    direction = Direction(direction)
    r = np.empty(k)
    for lag in range(k):
        total = 0.0
        for t in range(k - lag):
            if direction is Direction.A_LEADS_B:
                total += da[t] * db[t + lag]
            else:
                total += db[t] * da[t + lag]
        r[lag] = total / (k - lag) / (sa * sb)
    return XCorrReport(r, 2.0 / math.sqrt(k), k, direction)


def rolling_xcorr(a: ReturnSeries, b: ReturnSeries, window: int = DEFAULT_WINDOW, stride: int = 1,
                  lag: int = DEFAULT_LAG, direction=Direction.A_LEADS_B,
                  keep_all_lags: bool = False) -> RollingXCorrResult:
    """Coefficient at ``lag`` for each ``window``-long slice of an aligned pair.

    Demeaning happens per window. A window where either series is constant
    yields an entry with NaN and an error message instead of being skipped.
    Set ``keep_all_lags`` to retain every lag's coefficient on each entry.
    """
    if tuple(a.dates) != tuple(b.dates):
        raise DataError("rolling cross-correlation needs two series on the same dates")
    n = len(a.dates)
    if window < 2:
        raise ConfigError(f"window must be at least 2, got {window}")
    if stride < 1:
        raise ConfigError(f"stride must be at least 1, got {stride}")
    if window > n:
        raise ConfigError(f"window {window} is longer than the series ({n} points)")
    if not 0 <= lag < window:
        raise ConfigError(f"lag must be in [0, {window}), got {lag}")
    direction = Direction(direction)
    band = significance_band(window)
    entries = []
    for start in range(0, n - window + 1, stride):
        end_date = a.dates[start + window - 1]
        sl = slice(start, start + window)
        try:
            rep = xcorr(a.returns[sl], b.returns[sl], direction)
        except NumericError as exc:
            entries.append(RollingXCorrEntry(end_date, math.nan, band, str(exc)))
            continue
        entries.append(RollingXCorrEntry(end_date, float(rep.r[lag]), band,
                                         r=rep.r if keep_all_lags else None))
    return RollingXCorrResult(lag, window, stride, direction, tuple(entries))


def write_xcorr_csv(result: RollingXCorrResult, fh: IO[str]) -> None:
    """``window_end_date,r_lag,band,significant``; constant windows leave blanks."""
    fh.write("window_end_date,r_lag,band,significant\n")
    for e in result.entries:
        d = e.window_end_date.isoformat()
        if e.error:
            fh.write(f"{d},,{format_float(e.band)},\n")
        else:
            fh.write(f"{d},{format_float(e.r_at_lag)},{format_float(e.band)},{e.significant}\n")


def write_lag_dump_csv(result: RollingXCorrResult, fh: IO[str]) -> None:
    """Long-format ``window_end_date,lag,r`` for every lag of every window."""
    fh.write("window_end_date,lag,r\n")
    for e in result.entries:
        if e.r is None:
            continue
        d = e.window_end_date.isoformat()
        for lag, value in enumerate(e.r):
            fh.write(f"{d},{lag},{format_float(value)}\n")
