import io
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sysrisk.errors import ConfigError, DataError
from sysrisk.index_builder import (
    ConstituentRecord,
    SectorFilter,
    build_index,
    read_constituents,
    standard_sector_filters,
)

BANKS = SectorFilter(6000, 6199)
D1, D2 = date(2008, 9, 12), date(2008, 9, 15)


def test_standard_filters():
    f = standard_sector_filters()
    assert set(f) == {"banks", "brokerages", "insurers"}
    assert (f["banks"].sic_lo, f["banks"].sic_hi) == (6000, 6199)
    assert (f["brokerages"].sic_lo, f["brokerages"].sic_hi) == (6200, 6299)
    assert (f["insurers"].sic_lo, f["insurers"].sic_hi) == (6300, 6499)


def test_single_firm_is_its_own_index():
    recs = [ConstituentRecord("jpm", d, 6021, 1e5 * (i + 1), r) for i, (d, r) in enumerate([(D2, -0.04), (D1, 0.03)])]
    idx = build_index(recs, BANKS, "banks")
    assert idx.dates == (D1, D2)
    assert list(idx.returns) == [0.03, -0.04]


def test_two_firm_weighted_average():
    recs = [ConstituentRecord("a", D1, 6020, 300.0, 0.02), ConstituentRecord("b", D1, 6100, 100.0, -0.02)]
    assert build_index(recs, BANKS, "banks").returns[0] == pytest.approx(0.01, abs=1e-15)


def test_out_of_range_sic_excluded():
    recs = [ConstituentRecord("a", D1, 6020, 300.0, 0.02), ConstituentRecord("lehman", D1, 6250, 1e6, -0.9)]
    assert build_index(recs, BANKS, "banks").returns[0] == 0.02
    with pytest.raises(DataError, match="no records"):
        build_index(recs[1:], BANKS, "banks")


def test_duplicate_firm_date_rejected():
    recs = [ConstituentRecord("a", D1, 6020, 300.0, 0.02), ConstituentRecord("a", D1, 6020, 310.0, 0.01)]
    with pytest.raises(DataError, match="duplicate"):
        build_index(recs, BANKS, "banks")


def test_record_and_filter_validation():
    with pytest.raises(DataError):
        ConstituentRecord("a", D1, 10000, 1.0, 0.0)
    with pytest.raises(DataError):
        ConstituentRecord("a", D1, 6000, 0.0, 0.0)
    with pytest.raises(DataError):
        ConstituentRecord("a", D1, 6000, 1.0, -1.0)
    with pytest.raises(ConfigError):
        SectorFilter(6200, 6100)


def test_firms_entering_change_denominator():
    recs = [
        ConstituentRecord("a", D1, 6000, 100.0, 0.01),
        ConstituentRecord("a", D2, 6000, 100.0, 0.01),
        ConstituentRecord("b", D2, 6000, 300.0, 0.05),
    ]
    idx = build_index(recs, BANKS, "x")
    assert idx.returns[0] == 0.01
    assert idx.returns[1] == pytest.approx(0.25 * 0.01 + 0.75 * 0.05, abs=1e-15)


firm_day = st.tuples(st.floats(1e-3, 1e9), st.floats(-0.99, 2.0))


@settings(max_examples=80, deadline=None)
@given(st.lists(firm_day, min_size=1, max_size=30), st.integers(-20, 20), st.floats(1e-6, 1e6))
def test_weighting_properties(rows, exponent, factor):
    recs = [ConstituentRecord(f"f{i}", D1, 6000 + i, cap, r) for i, (cap, r) in enumerate(rows)]
    value = build_index(recs, BANKS, "x").returns[0]
    rets = [r for _, r in rows]
    span = max(rets) - min(rets)
    assert min(rets) - 1e-12 * (1 + span) <= value <= max(rets) + 1e-12 * (1 + span)

    caps = np.array([c for c, _ in rows])
    assert (caps / caps.sum()).sum() == pytest.approx(1.0, abs=1e-12)

    # a power-of-two rescale is exact in floating point, so the index is bit-identical
    scale = 2.0 ** exponent
    scaled = [ConstituentRecord(r.firm_id, r.date, r.sic, r.market_cap * scale, r.ret) for r in recs]
    assert build_index(scaled, BANKS, "x").returns[0] == value
    other = [ConstituentRecord(r.firm_id, r.date, r.sic, r.market_cap * factor, r.ret) for r in recs]
    assert build_index(other, BANKS, "x").returns[0] == pytest.approx(value, rel=1e-12, abs=1e-15)


def test_read_constituents():
    text = "date,firm_id,sic,market_cap,return\n2008-09-12,a,6020,300,0.02\n2008-09-12,b,6100,100,-0.02\n"
    recs = list(read_constituents(io.StringIO(text)))
    assert build_index(recs, BANKS, "banks").returns[0] == pytest.approx(0.01)
    with pytest.raises(DataError, match="line 2"):
        list(read_constituents(io.StringIO("date,firm_id,sic,market_cap,return\n2008-09-12,a,60x0,300,0.02\n")))
    with pytest.raises(DataError, match="line 2"):
        list(read_constituents(io.StringIO("date,firm_id,sic,market_cap,return\n2008-09-12,a,6000,-3,0.02\n")))
    with pytest.raises(DataError, match="header"):
        list(read_constituents(io.StringIO("date,firm,sic\n")))
