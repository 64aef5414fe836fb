"""Synthetic equicorrelated return panels with an optional high-correlation regime.

Random numbers come from numpy's ``Generator`` over the PCG64 bit generator
(``np.random.Generator(np.random.PCG64(seed))``) and its ziggurat
``standard_normal``. The whole ``n_periods x n_assets`` block of standard
normals is drawn in a single call, in C order, before any correlation is
applied, so a given seed fixes every draw regardless of the regime layout.
Pinned against numpy 2.2; numpy documents the PCG64 stream as stable, so
the same seed reproduces the same panel on every platform.

Each period's vector of returns is ``vol * L @ z`` where ``L`` is the
Cholesky factor of the equicorrelation matrix in force for that period.
Period ``i`` is dated ``EPOCH + i days``.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Optional

import numpy as np

from .errors import ConfigError
from .ingest import AlignedPanel

__all__ = ["Regime", "PanelSpec", "EPOCH", "equicorrelation", "generate", "expected_first_fraction"]

EPOCH = date(2000, 1, 3)


@dataclass(frozen=True)
class Regime:
    """Periods ``start <= i < end`` use ``correlation`` instead of the base."""

    start: int
    end: int
    correlation: float


@dataclass(frozen=True)
class PanelSpec:
    n_assets: int
    n_periods: int
    base_correlation: float = 0.0
    vol: float = 0.01
    regime: Optional[Regime] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_assets < 1 or self.n_periods < 1:
            raise ConfigError("n_assets and n_periods must be positive")
        if not 0.0 <= self.base_correlation < 1.0:
            raise ConfigError(f"base_correlation must be in [0, 1), got {self.base_correlation}")
        if not self.vol > 0:
            raise ConfigError("vol must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.regime is not None:
            r = self.regime
            if not 0 <= r.start < r.end <= self.n_periods:
                raise ConfigError(f"regime [{r.start}, {r.end}) does not fit in {self.n_periods} periods")
            if not 0.0 <= r.correlation < 1.0:
                raise ConfigError(f"regime correlation must be in [0, 1), got {r.correlation}")


def equicorrelation(rho: float, n: int) -> np.ndarray:
    """N x N matrix with unit diagonal and ``rho`` everywhere else."""
    c = np.full((n, n), float(rho))
    np.fill_diagonal(c, 1.0)
    return c


def _cholesky(rho: float, n: int) -> np.ndarray:
    try:
        return np.linalg.cholesky(equicorrelation(rho, n))
    except np.linalg.LinAlgError:
        raise ConfigError(f"equicorrelation {rho} is not positive definite for {n} assets") from None


def generate(spec: PanelSpec) -> AlignedPanel:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    z = rng.standard_normal((spec.n_periods, spec.n_assets))
    out = z @ _cholesky(spec.base_correlation, spec.n_assets).T
    if spec.regime is not None:
        r = spec.regime
        out[r.start:r.end] = z[r.start:r.end] @ _cholesky(r.correlation, spec.n_assets).T
    out *= spec.vol
    ids = [f"asset_{i}" for i in range(1, spec.n_assets + 1)]
    dates = [EPOCH + timedelta(days=i) for i in range(spec.n_periods)]
    return AlignedPanel(ids, dates, out.T)


def expected_first_fraction(rho: float, n: int) -> float:
    """Leading eigenvalue share ``(1 + (n - 1) rho) / n`` of an equicorrelation matrix."""
    return (1.0 + (n - 1) * rho) / n
