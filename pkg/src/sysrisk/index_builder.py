"""Market-cap-weighted sector indexes built from per-firm daily records."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ConfigError, DataError
from .ingest import ReturnSeries, _parse_date, _parse_number

__all__ = [
    "ConstituentRecord",
    "SectorFilter",
    "standard_sector_filters",
    "build_index",
    "read_constituents",
    "CONSTITUENT_HEADER",
]

CONSTITUENT_HEADER = ("date", "firm_id", "sic", "market_cap", "return")


@dataclass(frozen=True)
class ConstituentRecord:
    """One firm on one day."""

    firm_id: str
    date: date
    sic: int
    market_cap: float
    ret: float

    def __post_init__(self):
        if not 0 <= self.sic <= 9999:
            raise DataError(f"{self.firm_id} {self.date}: SIC code {self.sic} outside 0..9999")
        if not (self.market_cap > 0 and np.isfinite(self.market_cap)):
            raise DataError(f"{self.firm_id} {self.date}: market cap must be positive")
        if not (self.ret > -1 and np.isfinite(self.ret)):
            raise DataError(f"{self.firm_id} {self.date}: return must be > -1")


@dataclass(frozen=True)
class SectorFilter:
    """Inclusive SIC code range."""

    sic_lo: int
    sic_hi: int

    def __post_init__(self):
        if not 0 <= self.sic_lo <= self.sic_hi <= 9999:
            raise ConfigError(f"invalid SIC range {self.sic_lo}-{self.sic_hi}")

    def __contains__(self, sic: int) -> bool:
        return self.sic_lo <= sic <= self.sic_hi


_STANDARD = {
    "banks": (6000, 6199),
    "brokerages": (6200, 6299),
    "insurers": (6300, 6499),
}


def standard_sector_filters() -> dict:
    """Return the three financial-sector SIC ranges keyed by name."""
    return {name: SectorFilter(lo, hi) for name, (lo, hi) in _STANDARD.items()}


def build_index(records: Iterable[ConstituentRecord], sector: SectorFilter, index_id: str) -> ReturnSeries:
    """Cap-weighted average return per date over firms inside ``sector``.

    Weights on a date use that same date's market caps, so firms entering
    or leaving the sample simply change the denominator.

    Parameters
    ----------
    records : iterable of ConstituentRecord
        Any order. A repeated ``(firm_id, date)`` pair is an error, even
        for firms outside the sector.
    sector : SectorFilter
    index_id : str
        Asset id of the resulting series.
    """
    seen = set()
    by_date = defaultdict(list)
    for rec in records:
        key = (rec.firm_id, rec.date)
        if key in seen:
            raise DataError(f"duplicate record for firm {rec.firm_id} on {rec.date}")
        seen.add(key)
        if rec.sic in sector:
            by_date[rec.date].append((rec.market_cap, rec.ret))
    if not by_date:
        raise DataError(f"no records with SIC in {sector.sic_lo}-{sector.sic_hi}")

    dates = sorted(by_date)
    out = np.empty(len(dates))
    for i, d in enumerate(dates):
        caps, rets = np.array(by_date[d]).T
        out[i] = np.dot(caps / caps.sum(), rets)
    return ReturnSeries(index_id, dates, out)


def read_constituents(fh: IO[str]) -> Iterator[ConstituentRecord]:
    """Stream records from a ``date,firm_id,sic,market_cap,return`` CSV."""
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(h.strip().lstrip("﻿") for h in header) != CONSTITUENT_HEADER:
        raise DataError(f"line 1: expected header {','.join(CONSTITUENT_HEADER)!r}")
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        lineno = reader.line_num
        if len(row) != 5:
            raise DataError(f"line {lineno}: expected 5 fields, got {len(row)}")
        d, firm, sic, cap, ret = (c.strip() for c in row)
        if not sic.isdigit():
            raise DataError(f"line {lineno}: bad SIC code {sic!r}")
        try:
            yield ConstituentRecord(firm, _parse_date(d, lineno), int(sic),
                                    _parse_number(cap, lineno), _parse_number(ret, lineno))
        except DataError as exc:
            if str(exc).startswith("line "):
                raise
            raise DataError(f"line {lineno}: {exc}") from None
