import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sysrisk.ingest import AlignedPanel, ReturnSeries  # noqa: E402
from datetime import date, timedelta  # noqa: E402


def make_dates(n, start=date(2006, 1, 2)):
    return [start + timedelta(days=i) for i in range(n)]


def make_series(values, asset_id="x", start=date(2006, 1, 2)):
    return ReturnSeries(asset_id, make_dates(len(values), start), values)


def make_panel(matrix, ids=None):
    matrix = np.asarray(matrix, dtype=float)
    ids = ids or [f"a{i}" for i in range(matrix.shape[0])]
    return AlignedPanel(ids, make_dates(matrix.shape[1]), matrix)


@pytest.fixture
def rng():
    return np.random.default_rng(20200630)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
