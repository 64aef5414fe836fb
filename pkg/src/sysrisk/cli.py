"""Command-line pipelines: ``sysrisk {ingest-check,index,pca,xcorr,synth}``.

Settings resolve in three layers: built-in defaults, then an optional flat
``key = value`` file given with ``--config``, then command-line flags.
Every run that writes output also writes a JSON manifest describing its
parameters and the SHA-256 digests of its inputs and outputs.

Exit status: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from datetime import date
from typing import Optional

from . import __version__
from .errors import ConfigError, DataError, NumericError
from .index_builder import SectorFilter, build_index, read_constituents, standard_sector_filters
from .ingest import aggregate, align, read_series, restrict, sniff_format, write_panel_csv, write_return_csv
from .pca_engine import DivisorMode, rolling_pca, write_eigen_json, write_pca_csv
from .synth_lab import PanelSpec, Regime, generate
from .xcorr_engine import Direction, rolling_xcorr, write_lag_dump_csv, write_xcorr_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DIVISORS = {"paper": DivisorMode.PAPER_TJ, "sample": DivisorMode.SAMPLE_T1,
            "population": DivisorMode.POPULATION_T}

DEFAULTS = {
    "pca": {"window": 30, "stride": 1, "period": 1, "divisor": "paper"},
    "xcorr": {"window": 90, "stride": 1, "lag": 1, "period": 1, "direction": "A_leads_B"},
}

INT_KEYS = {"window", "stride", "lag", "period", "seed", "assets", "periods"}
FLOAT_KEYS = {"rho", "vol"}


@dataclass
class InputSpec:
    path: str
    asset_id: Optional[str] = None


# -- config helpers ---------------------------------------------------------

def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
        if key in ("from", "to"):
            return value if isinstance(value, date) else date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value


def resolve(args: argparse.Namespace, measure: str) -> dict:
    settings = dict(DEFAULTS.get(measure, {}))
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if key in ("config", "func", "command") or value is None:
            continue
        settings[key] = value
    if "date_from" in settings:
        settings["from"] = settings.pop("date_from")
    if "date_to" in settings:
        settings["to"] = settings.pop("date_to")
    return {k: _coerce(k, v) for k, v in settings.items()}


def parse_input(token: str) -> InputSpec:
    """``PATH`` or ``ID=PATH``."""
    if "=" in token and not os.path.exists(token):
        asset_id, path = token.split("=", 1)
        return InputSpec(path, asset_id or None)
    return InputSpec(token)


# -- I/O helpers ------------------------------------------------------------

def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary sibling and rename, so a crash leaves nothing behind."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(writer, obj) -> str:
    buf = io.StringIO()
    writer(obj, buf)
    return buf.getvalue()


def _commit(outputs: dict, manifest_path: str, manifest: dict) -> None:
    """Write every output file, then the manifest; undo on failure."""
    manifest = dict(manifest, outputs=[{"path": p, "sha256": _sha256_text(t)} for p, t in outputs.items()])
    written = []
    try:
        for path, text in outputs.items():
            atomic_write(path, text)
            written.append(path)
        atomic_write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    except BaseException:
        for path in written:
            os.unlink(path)
        raise


def _check_output_path(out: Optional[str], inputs: list) -> str:
    if not out:
        raise ConfigError("--out is required")
    target = os.path.abspath(out)
    for spec in inputs:
        if os.path.abspath(spec.path) == target:
            raise ConfigError(f"output path {out} is also an input")
    return out


def _load_inputs(inputs: list) -> tuple:
    series, described = [], []
    for spec in inputs:
        if not os.path.isfile(spec.path):
            raise ConfigError(f"input file not found: {spec.path}")
        loaded = read_series(spec.path, spec.asset_id)
        described.append({"path": spec.path, "format": sniff_format(spec.path),
                          "asset_ids": [s.asset_id for s in loaded], "sha256": sha256_file(spec.path)})
        series.extend(loaded)
    # repeated inputs get distinct ids so panels stay unambiguous
    seen = {}
    unique = []
    for s in series:
        count = seen.get(s.asset_id, 0) + 1
        seen[s.asset_id] = count
        unique.append(s if count == 1 else type(s)(f"{s.asset_id}#{count}", s.dates, s.returns))
    return unique, described


def _prepare_panel(series: list, settings: dict):
    panel = align(series)
    if settings.get("from") or settings.get("to"):
        panel = restrict(panel, settings.get("from"), settings.get("to"))
    return aggregate(panel, settings["period"])


def _manifest(command: str, settings: dict, inputs: list) -> dict:
    params = {k: v for k, v in settings.items() if k not in ("inputs", "manifest")}
    return {"tool": "sysrisk", "version": __version__, "command": command,
            "parameters": params, "inputs": inputs}


def _require_positive(settings: dict, *keys) -> None:
    for key in keys:
        value = settings.get(key)
        if value is None or value < 1:
            raise ConfigError(f"--{key} must be a positive integer, got {value!r}")


# -- subcommands ------------------------------------------------------------

def cmd_ingest_check(args) -> int:
    series = []
    for token in args.inputs:
        spec = parse_input(token)
        if not os.path.isfile(spec.path):
            raise ConfigError(f"input file not found: {spec.path}")
        fmt = sniff_format(spec.path)
        if fmt == "C":
            with open(spec.path, encoding="utf-8", newline="") as fh:
                n = sum(1 for _ in read_constituents(fh))
            print(f"{spec.path}: constituents, {n} records")
            continue
        loaded = read_series(spec.path, spec.asset_id, fmt)
        for s in loaded:
            print(f"{spec.path}: {s.asset_id} format {fmt}, {len(s)} returns, {s.dates[0]} .. {s.dates[-1]}")
        series.extend(loaded)
    if len(series) > 1:
        panel = align(series)
        print(f"aligned: {panel.n_assets} assets x {panel.n_periods} dates, {panel.dates[0]} .. {panel.dates[-1]}")
    return EXIT_OK


def run_pca_pipeline(args) -> int:
    settings = resolve(args, "pca")
    inputs = [parse_input(t) for t in args.inputs]
    out = _check_output_path(settings.get("out"), inputs)
    if settings["divisor"] not in DIVISORS:
        raise ConfigError(f"--divisor must be one of {sorted(DIVISORS)}")
    _require_positive(settings, "window", "stride", "period")

    series, described = _load_inputs(inputs)
    if len(series) < 2:
        raise ConfigError("pca needs at least 2 input series")
    panel = _prepare_panel(series, settings)
    result = rolling_pca(panel, settings["window"], settings["stride"], DIVISORS[settings["divisor"]])

    outputs = {out: _render(write_pca_csv, result)}
    if settings.get("eigen_json"):
        outputs[settings["eigen_json"]] = _render(write_eigen_json, result)
    manifest = _manifest("pca", settings, described)
    manifest["assets"] = list(panel.asset_ids)
    _commit(outputs, settings.get("manifest") or out + ".manifest.json", manifest)
    return EXIT_OK


def _safe_name(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in text)


def run_xcorr_pipeline(args) -> int:
    settings = resolve(args, "xcorr")
    inputs = [parse_input(t) for t in args.inputs]
    batch = bool(settings.get("batch"))
    if batch and len(inputs) < 2:
        raise ConfigError("batch mode needs a baseline and at least one comparison")
    if not batch and len(inputs) != 2:
        raise ConfigError("xcorr takes exactly 2 inputs (use --batch for baseline + several)")
    out = _check_output_path(settings.get("out"), inputs)
    _require_positive(settings, "window", "stride", "period")
    if settings["lag"] is None or settings["lag"] < 0:
        raise ConfigError("--lag must be >= 0")
    try:
        direction = Direction(settings["direction"])
    except ValueError:
        raise ConfigError(f"--direction must be one of {[d.value for d in Direction]}") from None

    series, described = _load_inputs(inputs)
    if len(series) != len(inputs):
        raise ConfigError("xcorr inputs must each hold a single series")
    baseline, comparisons = series[0], series[1:]

    outputs = {}
    for comp in comparisons:
        panel = _prepare_panel([baseline, comp], settings)
        a, b = panel.rows()
        result = rolling_xcorr(a, b, settings["window"], settings["stride"], settings["lag"], direction,
                               keep_all_lags=bool(settings.get("lag_dump")))
        path = os.path.join(out, f"{_safe_name(baseline.asset_id)}__{_safe_name(comp.asset_id)}.csv") if batch else out
        outputs[path] = _render(write_xcorr_csv, result)
        if settings.get("lag_dump"):
            dump = settings["lag_dump"]
            if batch:
                dump = os.path.join(dump, os.path.basename(path))
            outputs[dump] = _render(write_lag_dump_csv, result)
    default_manifest = os.path.join(out, "manifest.json") if batch else out + ".manifest.json"
    _commit(outputs, settings.get("manifest") or default_manifest, _manifest("xcorr", settings, described))
    return EXIT_OK


def _sector(name: str) -> SectorFilter:
    filters = standard_sector_filters()
    if name in filters:
        return filters[name]
    try:
        lo, hi = (int(x) for x in name.split("-"))
    except ValueError:
        raise ConfigError(f"sector must be one of {sorted(filters)} or LO-HI, got {name!r}") from None
    return SectorFilter(lo, hi)


def run_index_pipeline(args) -> int:
    settings = resolve(args, "index")
    spec = parse_input(args.constituents)
    out = _check_output_path(settings.get("out"), [spec])
    if not settings.get("sector"):
        raise ConfigError("--sector is required")
    sector = _sector(settings["sector"])
    if not os.path.isfile(spec.path):
        raise ConfigError(f"input file not found: {spec.path}")
    with open(spec.path, encoding="utf-8", newline="") as fh:
        series = build_index(read_constituents(fh), sector, settings.get("id") or settings["sector"])
    manifest = _manifest("index", settings, [{"path": spec.path, "format": "C", "sha256": sha256_file(spec.path)}])
    manifest["sic_range"] = [sector.sic_lo, sector.sic_hi]
    _commit({out: _render(write_return_csv, series)}, settings.get("manifest") or out + ".manifest.json", manifest)
    return EXIT_OK


def run_synth(args) -> int:
    settings = resolve(args, "synth")
    out = _check_output_path(settings.get("out"), [])
    _require_positive(settings, "assets", "periods")
    regime = None
    if settings.get("regime"):
        try:
            start, end, rho = settings["regime"].split(":")
            regime = Regime(int(start), int(end), float(rho))
        except ValueError:
            raise ConfigError("--regime must look like START:END:RHO") from None
    spec = PanelSpec(settings["assets"], settings["periods"], settings.get("rho") or 0.0,
                     settings.get("vol") or 0.01, regime, settings.get("seed") or 0)
    panel = generate(spec)
    outputs = {}
    if settings.get("per_asset"):
        for s in panel.rows():
            outputs[os.path.join(out, f"{s.asset_id}.csv")] = _render(write_return_csv, s)
        default_manifest = os.path.join(out, "manifest.json")
    else:
        outputs[out] = _render(write_panel_csv, panel)
        default_manifest = out + ".manifest.json"
    _commit(outputs, settings.get("manifest") or default_manifest, _manifest("synth", settings, []))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value settings file; flags override it")
    p.add_argument("--out", help="output path")
    p.add_argument("--manifest", help="manifest path (default: beside the output)")


def _add_window(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--period", type=int, help="compound this many consecutive returns first")
    p.add_argument("--from", dest="date_from", type=date.fromisoformat, metavar="DATE")
    p.add_argument("--to", dest="date_to", type=date.fromisoformat, metavar="DATE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sysrisk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="validate input files and report their date coverage")
    p.add_argument("inputs", nargs="+", metavar="[ID=]PATH")
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("index", help="build a market-cap-weighted sector index")
    p.add_argument("constituents", metavar="PATH", help="CSV with date,firm_id,sic,market_cap,return")
    p.add_argument("--sector", help="banks, brokerages, insurers, or LO-HI")
    p.add_argument("--id", help="asset id of the index (default: sector name)")
    _add_common(p)
    p.set_defaults(func=run_index_pipeline)

    p = sub.add_parser("pca", help="rolling fractional eigenvalues")
    p.add_argument("inputs", nargs="+", metavar="[ID=]PATH")
    _add_window(p)
    p.add_argument("--divisor", choices=sorted(DIVISORS))
    p.add_argument("--eigen-json", help="also dump eigenvalues and eigenvectors as JSON")
    _add_common(p)
    p.set_defaults(func=run_pca_pipeline)

    p = sub.add_parser("xcorr", help="rolling lagged cross-correlation")
    p.add_argument("inputs", nargs="+", metavar="[ID=]PATH", help="baseline first, then comparison(s)")
    _add_window(p)
    p.add_argument("--lag", type=int)
    p.add_argument("--direction", choices=[d.value for d in Direction])
    p.add_argument("--batch", action="store_true", default=None,
                   help="one baseline against several comparisons; --out is a directory")
    p.add_argument("--lag-dump", help="also write every lag's coefficient (window_end_date,lag,r)")
    _add_common(p)
    p.set_defaults(func=run_xcorr_pipeline)

    p = sub.add_parser("synth", help="generate a synthetic equicorrelated panel")
    p.add_argument("--assets", type=int)
    p.add_argument("--periods", type=int)
    p.add_argument("--rho", type=float, help="base equicorrelation in [0, 1)")
    p.add_argument("--vol", type=float, help="per-period return standard deviation")
    p.add_argument("--regime", metavar="START:END:RHO")
    p.add_argument("--seed", type=int)
    p.add_argument("--per-asset", action="store_true", default=None,
                   help="write one date,return file per asset into the --out directory")
    _add_common(p)
    p.set_defaults(func=run_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"sysrisk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"sysrisk: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"sysrisk: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
