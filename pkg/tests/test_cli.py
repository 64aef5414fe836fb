import json
import os

import numpy as np
import pytest

from sysrisk.cli import main, read_config_file
from sysrisk.ingest import parse_panel_csv, parse_return_csv, read_series, write_return_csv
from sysrisk.synth_lab import PanelSpec, generate
from oracles import first_fraction_mc


def _write_series(tmp_path, name, series):
    path = tmp_path / name
    with open(path, "w") as fh:
        write_return_csv(series, fh)
    return str(path)


def _read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


@pytest.fixture
def four_assets(tmp_path):
    panel = generate(PanelSpec(4, 400, 0.0, 0.01, seed=21))
    return [_write_series(tmp_path, f"{s.asset_id}.csv", s) for s in panel.rows()]


def test_synth_panel_and_per_asset(tmp_path):
    out = tmp_path / "panel.csv"
    assert main(["synth", "--assets", "3", "--periods", "50", "--rho", "0.4", "--seed", "7", "--out", str(out)]) == 0
    panel = parse_panel_csv(out.read_bytes())
    assert panel.returns.tobytes() == generate(PanelSpec(3, 50, 0.4, 0.01, seed=7)).returns.tobytes()
    assert (tmp_path / "panel.csv.manifest.json").exists()

    d = tmp_path / "assets"
    assert main(["synth", "--assets", "2", "--periods", "20", "--seed", "7", "--per-asset", "--out", str(d)]) == 0
    assert sorted(os.listdir(d)) == ["asset_1.csv", "asset_2.csv", "manifest.json"]
    s = parse_return_csv((d / "asset_1.csv").read_bytes(), "asset_1")
    assert len(s) == 20


def test_pca_pipeline_matches_oracle(tmp_path, four_assets):
    out = tmp_path / "pca.csv"
    assert main(["pca", *four_assets, "--window", "30", "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header == ["window_end_date"] + [f"frac_{i}" for i in range(1, 5)] + [f"cum_{i}" for i in range(1, 5)]
    assert len(rows) == 400 - 30 + 1
    frac1 = np.array([float(r["frac_1"]) for r in rows])
    assert abs(frac1.mean() - first_fraction_mc(4, 30, 1000, seed=3)) <= 0.1
    manifest = json.loads((tmp_path / "pca.csv.manifest.json").read_text())
    assert manifest["parameters"]["window"] == 30
    assert len(manifest["inputs"]) == 4 and all(len(i["sha256"]) == 64 for i in manifest["inputs"])


def test_pca_same_file_twice(tmp_path, four_assets):
    out = tmp_path / "pca.csv"
    assert main(["pca", four_assets[0], four_assets[0], "--window", "20", "--out", str(out)]) == 0
    _, rows = _read_csv(out)
    assert all(float(r["frac_1"]) == pytest.approx(1.0, abs=1e-12) for r in rows)


def test_pca_window_too_large(tmp_path, four_assets):
    out = tmp_path / "pca.csv"
    assert main(["pca", *four_assets, "--window", "401", "--out", str(out)]) == 2
    assert not out.exists()
    assert not (tmp_path / "pca.csv.manifest.json").exists()


def test_pca_options(tmp_path, four_assets):
    out = tmp_path / "pca.csv"
    eig = tmp_path / "eig.json"
    code = main(["pca", *four_assets, "--window", "10", "--stride", "5", "--period", "2", "--divisor", "population",
                 "--from", "2000-01-10", "--to", "2000-12-31", "--eigen-json", str(eig), "--out", str(out)])
    assert code == 0
    _, rows = _read_csv(out)
    dump = json.loads(eig.read_text())
    assert len(dump) == len(rows)
    assert dump[0]["window_end_date"] == rows[0]["window_end_date"]
    assert len(dump[0]["eigenvectors"]) == 4


def test_config_file_and_override(tmp_path, four_assets):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# pca settings\nwindow = 50\nstride = 10\n")
    out = tmp_path / "pca.csv"
    assert main(["pca", *four_assets, "--config", str(cfg), "--out", str(out)]) == 0
    assert len(_read_csv(out)[1]) == (400 - 50) // 10 + 1
    assert main(["pca", *four_assets, "--config", str(cfg), "--window", "100", "--out", str(out)]) == 0
    assert len(_read_csv(out)[1]) == (400 - 100) // 10 + 1
    assert read_config_file(str(cfg)) == {"window": "50", "stride": "10"}


def test_xcorr_self_lag_zero(tmp_path, four_assets):
    out = tmp_path / "x.csv"
    a = four_assets[0]
    assert main(["xcorr", f"base={a}", f"copy={a}", "--lag", "0", "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header == ["window_end_date", "r_lag", "band", "significant"]
    assert len(rows) == 400 - 90 + 1
    for r in rows:
        assert float(r["r_lag"]) == pytest.approx(1.0, abs=1e-12)
        assert r["significant"] == "1"
        assert float(r["band"]) == pytest.approx(0.21082, abs=1e-5)


def test_xcorr_batch(tmp_path, four_assets):
    panel = generate(PanelSpec(6, 200, 0.2, 0.01, seed=4))
    paths = [_write_series(tmp_path, f"{s.asset_id}.csv", s) for s in panel.rows()]
    out = tmp_path / "fig2"
    dump = tmp_path / "lags"
    assert main(["xcorr", *paths, "--batch", "--lag-dump", str(dump), "--out", str(out)]) == 0
    files = sorted(f for f in os.listdir(out) if f.endswith(".csv"))
    assert len(files) == 5
    assert files[0] == "asset_1__asset_2.csv"
    assert len(os.listdir(dump)) == 5
    assert (out / "manifest.json").exists()


def test_xcorr_requires_two_inputs(tmp_path, four_assets):
    assert main(["xcorr", *four_assets[:3], "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["xcorr", four_assets[0], "--out", str(tmp_path / "x.csv")]) == 2
    assert not (tmp_path / "x.csv").exists()


def test_index_pipeline(tmp_path):
    src = tmp_path / "crsp.csv"
    src.write_text("date,firm_id,sic,market_cap,return\n"
                   "2008-09-12,a,6020,300,0.02\n2008-09-12,b,6100,100,-0.02\n"
                   "2008-09-15,a,6020,290,-0.05\n2008-09-15,leh,6211,50,-0.9\n")
    out = tmp_path / "banks.csv"
    assert main(["index", str(src), "--sector", "banks", "--out", str(out)]) == 0
    s = parse_return_csv(out.read_bytes(), "banks")
    assert list(s.returns) == pytest.approx([0.01, -0.05], abs=1e-15)
    assert main(["index", str(src), "--sector", "6200-6299", "--out", str(tmp_path / "brk.csv")]) == 0
    assert parse_return_csv((tmp_path / "brk.csv").read_bytes(), "b").returns[0] == -0.9


def test_index_single_firm_and_no_match(tmp_path):
    src = tmp_path / "one.csv"
    src.write_text("date,firm_id,sic,market_cap,return\n2010-01-04,a,6022,10,0.013\n2010-01-05,a,6022,11,-0.004\n")
    out = tmp_path / "idx.csv"
    assert main(["index", str(src), "--sector", "banks", "--out", str(out)]) == 0
    assert list(parse_return_csv(out.read_bytes(), "i").returns) == [0.013, -0.004]

    src.write_text("date,firm_id,sic,market_cap,return\n2010-01-04,a,6250,10,0.013\n")
    out2 = tmp_path / "none.csv"
    assert main(["index", str(src), "--sector", "banks", "--out", str(out2)]) == 3
    assert not out2.exists()


def test_exit_codes(tmp_path, four_assets):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,price\n2006-01-03,0\n2006-01-04,1\n")
    assert main(["pca", str(bad), four_assets[0], "--out", str(tmp_path / "o.csv")]) == 3
    assert main(["pca", str(tmp_path / "missing.csv"), four_assets[0], "--out", str(tmp_path / "o.csv")]) == 2
    assert main(["pca", four_assets[0], four_assets[1], "--out", four_assets[0]]) == 2
    assert main(["index", four_assets[0], "--sector", "pharma", "--out", str(tmp_path / "o.csv")]) == 2
    assert main(["synth", "--assets", "2", "--periods", "5", "--rho", "1.5", "--out", str(tmp_path / "o.csv")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["pca", four_assets[0], "--divisor", "weird"])
    assert exc.value.code == 2


def test_numeric_error_exit(tmp_path, monkeypatch, four_assets):
    from sysrisk import cli
    from sysrisk.errors import NumericError

    def boom(*a, **k):
        raise NumericError("no convergence")

    monkeypatch.setattr(cli, "rolling_pca", boom)
    out = tmp_path / "o.csv"
    assert main(["pca", *four_assets, "--out", str(out)]) == 4
    assert not out.exists()


def test_ingest_check(tmp_path, four_assets, capsys):
    prices = tmp_path / "px.csv"
    prices.write_text("date,price\n2000-01-04,100\n2000-01-05,101\n2000-01-06,99.99\n")
    assert main(["ingest-check", str(prices), four_assets[0]]) == 0
    out = capsys.readouterr().out
    assert "format A, 2 returns" in out
    assert "aligned: 2 assets x 2 dates" in out


def test_reruns_are_byte_identical(tmp_path, four_assets):
    outs = []
    for run in ("r1", "r2"):
        out = tmp_path / f"{run}.csv"
        manifest = tmp_path / "manifest.json"
        assert main(["pca", *four_assets, "--out", str(out), "--manifest", str(manifest)]) == 0
        outs.append((out.read_bytes(), json.loads(manifest.read_text())))
    assert outs[0][0] == outs[1][0]
    assert outs[0][1]["outputs"][0]["sha256"] == outs[1][1]["outputs"][0]["sha256"]
    assert outs[0][1]["inputs"] == outs[1][1]["inputs"]


def test_outputs_round_trip_through_ingest(tmp_path):
    out = tmp_path / "p.csv"
    main(["synth", "--assets", "2", "--periods", "30", "--seed", "1", "--out", str(out)])
    series = read_series(str(out))
    panel = generate(PanelSpec(2, 30, seed=1))
    for s, row in zip(series, panel.returns):
        np.testing.assert_array_equal(s.returns, row)
