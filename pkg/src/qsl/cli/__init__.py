"""Command-line entry point: ``qsl run|preset|sweep|list-presets``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ScenarioConfig, parse_config
from .presets import list_presets, preset_document
from .runner import RunReport, run_scenario, sweep, write_sweep

WORKERS_ENV = "QSL_WORKERS"

__all__ = ["main", "parse_config", "run_scenario", "sweep", "list_presets", "ScenarioConfig", "ConfigError"]


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"not an integer: {raw!r}") from None
    return max(1, n)


def _run_one(args: tuple[str, str, str | None]) -> tuple[str, RunReport | None, str | None]:
    label, text, out = args
    try:
        cfg = parse_config(text)
        return label, run_scenario(cfg, out), None
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        return label, None, f"{type(exc).__name__}: {exc}"


def _summarize(label: str, report: RunReport | None, err: str | None) -> bool:
    if err is not None:
        print(f"{label}: ERROR {err}", file=sys.stderr)
        return False
    tp = "none" if report.t_perp_ns is None else f"{report.t_perp_ns:.6g} ns"
    print(f"{label}: regime={report.regime} t_perp={tp} violations={report.violations} files={len(report.files)}")
    return report.ok


def _run_batch(jobs: list[tuple[str, str, str | None]]) -> int:
    workers = _workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    ok = [_summarize(*r) for r in results]
    return 0 if all(ok) else 1


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None


def _cmd_run(ns) -> int:
    return _run_batch([(p, _read(p), ns.out) for p in ns.configs])


def _cmd_preset(ns) -> int:
    import json

    names = ns.names
    try:
        docs = [json.dumps(preset_document(n)) for n in names]
    except KeyError as exc:
        raise ConfigError("preset", f"unknown preset {exc.args[0]!r}") from None
    return _run_batch([(n, d, ns.out) for n, d in zip(names, docs)])


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError("values", f"not a list of numbers: {text!r}") from None


def _cmd_sweep(ns) -> int:
    cfg = parse_config(_read(ns.config))
    rows = sweep(cfg, ns.param, _parse_values(ns.values))
    out = Path(ns.out) if ns.out else Path(cfg.out_dir) / f"{cfg.file_prefix}_sweep_{ns.param}.csv"
    write_sweep(out, rows)
    print(f"{out}: {len(rows)} rows")
    return 0


def _cmd_list(ns) -> int:
    for name, desc in list_presets():
        print(f"{name}\t{desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsl", description="Speed-limit bounds against exact dynamics.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run scenario config files")
    r.add_argument("configs", nargs="+")
    r.add_argument("--out", help="output directory (overrides outputs.dir)")
    r.set_defaults(func=_cmd_run)

    pr = sub.add_parser("preset", help="run named presets")
    pr.add_argument("names", nargs="+")
    pr.add_argument("--out", default=".", help="output directory")
    pr.set_defaults(func=_cmd_preset)

    s = sub.add_parser("sweep", help="phase-diagram sweep over omega or W")
    s.add_argument("config")
    s.add_argument("--param", required=True, choices=["omega", "W"])
    s.add_argument("--values", required=True, help="comma or space separated MHz values")
    s.add_argument("--out", help="CSV path")
    s.set_defaults(func=_cmd_sweep)

    ls = sub.add_parser("list-presets", help="print preset names and descriptions")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
