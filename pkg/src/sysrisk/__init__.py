"""Systemic-risk measures for financial return series.

Two measures are provided: the rolling first fractional eigenvalue of the
cross-asset covariance matrix (:mod:`sysrisk.pca_engine`) and the rolling
lagged cross-correlation of two series with a ``2/sqrt(k)`` significance
band (:mod:`sysrisk.xcorr_engine`). Data plumbing lives in
:mod:`sysrisk.ingest` and :mod:`sysrisk.index_builder`; synthetic test
panels in :mod:`sysrisk.synth_lab`.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NumericError, SysriskError
from .ingest import (
    AlignedPanel,
    PriceSeries,
    ReturnSeries,
    aggregate,
    align,
    parse_price_csv,
    parse_return_csv,
    prices_to_returns,
    read_series,
)
from .index_builder import ConstituentRecord, SectorFilter, build_index, standard_sector_filters
from .pca_engine import DivisorMode, covariance, demean, eigen_symmetric, rolling_pca
from .synth_lab import PanelSpec, Regime, expected_first_fraction, generate
from .xcorr_engine import Direction, lag_covariances, rolling_xcorr, xcorr, xcorr_bruteforce
