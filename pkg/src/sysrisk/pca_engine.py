"""Rolling-window principal component analysis of a return panel.

The measure of interest is the *fractional eigenvalue*: each eigenvalue of
the cross-asset covariance matrix divided by their sum. A first fraction
near 1 means one component explains nearly all co-movement; for N
independent assets it sits near 1/N.

Eigendecomposition uses a cyclic Jacobi rotation sweep written against
plain Python floats, which is fast for the handful of assets this measure
is meant for (N below ~20).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from datetime import date
from typing import IO, Optional

import numpy as np

from .errors import ConfigError, NumericError
from .ingest import AlignedPanel, format_float

__all__ = [
    "DivisorMode",
    "DemeanedMatrix",
    "CovarianceMatrix",
    "EigenReport",
    "RollingPcaEntry",
    "RollingPcaResult",
    "demean",
    "covariance",
    "eigen_symmetric",
    "rolling_pca",
    "write_pca_csv",
    "write_eigen_json",
    "DEFAULT_WINDOW",
    "DEFAULT_TOL",
    "MAX_SWEEPS",
]

DEFAULT_WINDOW = 30
DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100

_EPS = np.finfo(float).eps


class DivisorMode(str, enum.Enum):
    """Normalisation applied to ``M @ M.T``.

    ``PAPER_TJ`` divides by T - N (N assets), ``SAMPLE_T1`` by T - 1 and
    ``POPULATION_T`` by T. Fractions are ratios, so the choice never changes
    the fractional eigenvalues.
    """

    PAPER_TJ = "paper_TJ"
    SAMPLE_T1 = "sample_T1"
    POPULATION_T = "population_T"

    def divisor(self, n_assets: int, n_periods: int) -> int:
        if self is DivisorMode.PAPER_TJ:
            return n_periods - n_assets
        if self is DivisorMode.SAMPLE_T1:
            return n_periods - 1
        return n_periods


@dataclass(frozen=True)
class DemeanedMatrix:
    values: np.ndarray
    row_means: np.ndarray


@dataclass(frozen=True)
class CovarianceMatrix:
    values: np.ndarray
    divisor: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.values))


@dataclass(frozen=True)
class EigenReport:
    """Eigen-structure of one covariance matrix.

    ``eigenvectors[:, j]`` belongs to ``eigenvalues[j]``; eigenvalues are
    sorted in descending order.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    fractional: np.ndarray
    cumulative: np.ndarray

    @property
    def first_fraction(self) -> float:
        return float(self.fractional[0])


@dataclass(frozen=True)
class RollingPcaEntry:
    """One window. ``report`` is None and ``error`` set for degenerate windows."""

    window_end_date: date
    report: Optional[EigenReport]
    error: Optional[str] = None


@dataclass(frozen=True)
class RollingPcaResult:
    window_length: int
    stride: int
    asset_ids: tuple
    entries: tuple

    def first_fractions(self) -> np.ndarray:
        """First fractional eigenvalue per window, NaN where a window failed."""
        return np.array([e.report.first_fraction if e.report else np.nan for e in self.entries])

    def end_dates(self) -> list:
        return [e.window_end_date for e in self.entries]


def demean(panel) -> DemeanedMatrix:
    """Subtract each asset's mean return from its row.

    Accepts an AlignedPanel or a bare N x T array.
    """
    r = panel.returns if isinstance(panel, AlignedPanel) else np.asarray(panel, dtype=float)
    if r.ndim != 2 or r.shape[1] < 2:
        raise ConfigError("demeaning needs an N x T matrix with T >= 2")
    means = r.mean(axis=1)
    values = r - means[:, None]
    # a constant row must demean to exact zeros, whatever the rounding of its mean
    values[np.ptp(r, axis=1) == 0.0] = 0.0
    return DemeanedMatrix(values, means)


def covariance(m: DemeanedMatrix, divisor_mode=DivisorMode.PAPER_TJ) -> CovarianceMatrix:
    mode = DivisorMode(divisor_mode)
    n, t = m.values.shape
    divisor = mode.divisor(n, t)
    if divisor <= 0:
        if mode is DivisorMode.PAPER_TJ:
            raise ConfigError(f"estimator with divisor T - N is singular for T={t} <= N={n}")
        raise ConfigError(f"{mode.value} divisor is {divisor} for T={t}")
    sigma = m.values @ m.values.T / divisor
    # symmetrise exactly; the product can differ in the last bit
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceMatrix(sigma, float(divisor))


def _jacobi(a: list, max_sweeps: int = MAX_SWEEPS):
    """Diagonalise the symmetric matrix ``a`` (list of row lists) in place.

    Returns ``(diagonal, v)`` with ``v`` the accumulated rotation (columns are
    eigenvectors).
    """
    n = len(a)
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    frob = math.sqrt(sum(x * x for row in a for x in row))
    threshold = 4.0 * _EPS * frob
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p][q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= threshold:
            return [a[i][i] for i in range(n)], v
        for p in range(n - 1):
            ap = a[p]
            for q in range(p + 1, n):
                aq = a[q]
                apq = ap[q]
                if apq == 0.0:
                    continue
                app, aqq = ap[p], aq[q]
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap[p] = app - t * apq
                aq[q] = aqq + t * apq
                ap[q] = aq[p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        ar = a[r]
                        arp, arq = ar[p], ar[q]
                        ar[p] = ap[r] = c * arp - s * arq
                        ar[q] = aq[r] = s * arp + c * arq
                    vr = v[r]
                    vrp, vrq = vr[p], vr[q]
                    vr[p] = c * vrp - s * vrq
                    vr[q] = s * vrp + c * vrq
    raise NumericError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def eigen_symmetric(c, tol: float = DEFAULT_TOL) -> EigenReport:
    """Eigendecomposition of a covariance matrix, with fractional eigenvalues.

    Eigenvalues come back in descending order (stable for ties) and each
    eigenvector's first non-negligible coordinate is made positive, so the
    output is deterministic. Eigenvalues in ``[-tol * trace, 0)`` are
    rounding noise and get clamped to zero; anything more negative means
    the input was not positive semidefinite.

    Parameters
    ----------
    c : CovarianceMatrix or array_like
        Symmetric N x N matrix.
    tol : float
        Relative tolerance, measured against the trace.

    Raises
    ------
    NumericError
        If the trace is not positive (every asset constant in the window),
        the matrix has a materially negative eigenvalue, or Jacobi fails to
        converge within MAX_SWEEPS sweeps.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    values = c.values if isinstance(c, CovarianceMatrix) else np.asarray(c, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ConfigError("eigen_symmetric needs a square matrix")
    if not np.all(np.isfinite(values)):
        raise NumericError("covariance matrix has non-finite entries")
    trace = float(np.trace(values))
    if not trace > 0:
        raise NumericError("degenerate window: covariance trace is not positive")

    diag, v = _jacobi(values.tolist())
    eigvals = np.array(diag)
    vecs = np.array(v)

    order = np.argsort(-eigvals, kind="stable")
    eigvals = eigvals[order]
    vecs = vecs[:, order]

    floor = -tol * trace
    if eigvals[-1] < floor:
        raise NumericError(f"matrix is not positive semidefinite (eigenvalue {eigvals[-1]:.3g})")
    eigvals = np.where(eigvals < 0.0, 0.0, eigvals)

    cutoff = math.sqrt(_EPS)
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > cutoff)
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col

    fractional = eigvals / eigvals.sum()
    return EigenReport(eigvals, vecs, fractional, np.cumsum(fractional))


def _check_rolling(n_periods: int, n_assets: int, window: int, stride: int, mode: DivisorMode) -> None:
    if window < 2:
        raise ConfigError(f"window must be at least 2, got {window}")
    if stride < 1:
        raise ConfigError(f"stride must be at least 1, got {stride}")
    if window > n_periods:
        raise ConfigError(f"window {window} is longer than the panel ({n_periods} periods)")
    if mode is DivisorMode.PAPER_TJ and window <= n_assets:
        raise ConfigError(f"window {window} must exceed the number of assets ({n_assets}) with the T - N divisor")


def window_starts(n_periods: int, window: int, stride: int) -> range:
    return range(0, n_periods - window + 1, stride)


def rolling_pca(panel: AlignedPanel, window: int = DEFAULT_WINDOW, stride: int = 1,
                divisor_mode=DivisorMode.PAPER_TJ, tol: float = DEFAULT_TOL) -> RollingPcaResult:
    """Fractional eigenvalues over every ``window``-long slice of ``panel``.

    Each entry is stamped with the last date of its slice. Windows where
    every asset is constant produce an entry with ``report=None`` rather
    than NaNs; any other numerical failure is raised with the window index.
    """
    mode = DivisorMode(divisor_mode)
    _check_rolling(panel.n_periods, panel.n_assets, window, stride, mode)
    entries = []
    for i, start in enumerate(window_starts(panel.n_periods, window, stride)):
        end_date = panel.dates[start + window - 1]
        cov = covariance(demean(panel.returns[:, start:start + window]), mode)
        try:
            report = eigen_symmetric(cov, tol)
        except NumericError as exc:
            if cov.trace <= 0:
                entries.append(RollingPcaEntry(end_date, None, str(exc)))
                continue
            raise NumericError(f"window {i} ending {end_date}: {exc}") from None
        entries.append(RollingPcaEntry(end_date, report))
    return RollingPcaResult(window, stride, panel.asset_ids, tuple(entries))


def write_pca_csv(result: RollingPcaResult, fh: IO[str]) -> None:
    """``window_end_date,frac_1..frac_N,cum_1..cum_N``; failed windows leave blanks."""
    n = len(result.asset_ids)
    fh.write(",".join(["window_end_date"] + [f"frac_{j}" for j in range(1, n + 1)]
                      + [f"cum_{j}" for j in range(1, n + 1)]) + "\n")
    for e in result.entries:
        if e.report is None:
            cells = [""] * (2 * n)
        else:
            cells = [format_float(x) for x in e.report.fractional] + [format_float(x) for x in e.report.cumulative]
        fh.write(",".join([e.window_end_date.isoformat()] + cells) + "\n")


def write_eigen_json(result: RollingPcaResult, fh: IO[str]) -> None:
    """Full eigenvalue/eigenvector dump, one object per window."""
    dump = []
    for e in result.entries:
        item = {"window_end_date": e.window_end_date.isoformat()}
        if e.report is None:
            item.update(eigenvalues=None, eigenvectors=None, error=e.error)
        else:
            item.update(eigenvalues=e.report.eigenvalues.tolist(),
                        eigenvectors=e.report.eigenvectors.tolist())
        dump.append(item)
    json.dump(dump, fh, indent=1)
    fh.write("\n")
