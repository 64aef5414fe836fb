import numpy as np
import pytest

from sysrisk.errors import ConfigError
from sysrisk.pca_engine import rolling_pca
from sysrisk.synth_lab import EPOCH, PanelSpec, Regime, equicorrelation, expected_first_fraction, generate


def test_expected_first_fraction():
    assert expected_first_fraction(0.0, 4) == 0.25
    assert expected_first_fraction(0.6, 4) == pytest.approx(0.70, abs=1e-15)
    assert expected_first_fraction(1 - 1e-12, 7) == pytest.approx(1.0, abs=1e-11)
    for rho, n in [(0.3, 4), (0.9, 5), (0.45, 2)]:
        ev = np.linalg.eigvalsh(equicorrelation(rho, n))
        assert expected_first_fraction(rho, n) == pytest.approx(ev[-1] / ev.sum(), rel=1e-12)


def test_determinism():
    spec = PanelSpec(3, 50, 0.4, 0.02, Regime(10, 20, 0.8), seed=123)
    a, b = generate(spec), generate(spec)
    assert a.returns.tobytes() == b.returns.tobytes()
    assert a.dates == b.dates
    assert generate(PanelSpec(3, 50, 0.4, 0.02, seed=124)).returns.tobytes() != a.returns.tobytes()


def test_frozen_draws():
    # pins the PCG64 + ziggurat stream; a change here breaks cross-run reproducibility
    panel = generate(PanelSpec(2, 3, 0.0, 1.0, seed=42))
    expected = np.random.Generator(np.random.PCG64(42)).standard_normal((3, 2)).T
    np.testing.assert_array_equal(panel.returns, expected)
    np.testing.assert_allclose(panel.returns[:, 0], [0.30471707975443135, -1.0399841062404955], rtol=1e-15)


def test_dates_and_ids():
    panel = generate(PanelSpec(3, 5, seed=1))
    assert panel.asset_ids == ("asset_1", "asset_2", "asset_3")
    assert panel.dates[0] == EPOCH
    assert (panel.dates[-1] - EPOCH).days == 4


def test_independent_sample_correlations_small():
    panel = generate(PanelSpec(4, 10000, 0.0, 0.01, seed=5))
    c = np.corrcoef(panel.returns)
    assert np.all(np.abs(c[~np.eye(4, dtype=bool)]) <= 0.05)


def test_sample_equicorrelation_converges():
    for rho in (0.0, 0.3, 0.75):
        panel = generate(PanelSpec(4, 50000, rho, 0.02, seed=9))
        c = np.corrcoef(panel.returns)
        assert np.all(np.abs(c[~np.eye(4, dtype=bool)] - rho) <= 0.02)
        assert np.allclose(panel.returns.std(axis=1), 0.02, rtol=0.02)


def test_regime_changes_only_its_periods():
    base = generate(PanelSpec(3, 100, 0.2, 0.01, seed=3))
    reg = generate(PanelSpec(3, 100, 0.2, 0.01, Regime(40, 60, 0.9), seed=3))
    np.testing.assert_array_equal(base.returns[:, :40], reg.returns[:, :40])
    np.testing.assert_array_equal(base.returns[:, 60:], reg.returns[:, 60:])
    assert not np.array_equal(base.returns[:, 40:60], reg.returns[:, 40:60])


def test_near_degenerate_pair():
    panel = generate(PanelSpec(2, 300, 0.999, 0.01, seed=2))
    assert np.all(rolling_pca(panel, 30).first_fractions() > 0.95)


def test_regime_detectability():
    panel = generate(PanelSpec(4, 600, 0.3, 0.01, Regime(200, 400, 0.9), seed=17))
    f = rolling_pca(panel, 30).first_fractions()
    start = np.arange(len(f))
    inside = (start >= 200) & (start + 30 <= 400)
    outside = (start + 30 <= 200) | (start >= 400)
    assert f[inside].mean() - f[outside].mean() >= 0.15


@pytest.mark.parametrize("kwargs", [
    dict(n_assets=0, n_periods=5),
    dict(n_assets=2, n_periods=5, base_correlation=1.0),
    dict(n_assets=2, n_periods=5, base_correlation=-0.1),
    dict(n_assets=2, n_periods=5, vol=0.0),
    dict(n_assets=2, n_periods=5, regime=Regime(3, 3, 0.5)),
    dict(n_assets=2, n_periods=5, regime=Regime(0, 6, 0.5)),
    dict(n_assets=2, n_periods=5, regime=Regime(0, 2, 1.0)),
    dict(n_assets=2, n_periods=5, seed=-1),
])
def test_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        PanelSpec(**kwargs)
