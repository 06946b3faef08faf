"""Command-line runner: ``gp-thermal run | suite | list-experiments``.

Outputs of ``run`` go to ``OUT/report.json`` (deterministic for a given config
and seed), ``OUT/series/*.csv`` and ``OUT/timing.json`` (wall clock, kept
apart so the report stays byte-identical across runs).  The exit code is 0
iff every contract passed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, ExperimentConfig, parse_config, with_overrides
from .errors import ConfigurationError
from .experiments import EXPERIMENT_CONTRACTS, ExperimentResult, run_experiment
from .observables import write_report_json, write_series_csv

CONFIG_SUFFIXES = (".cfg", ".conf")


def run(cfg: ExperimentConfig, out_dir: str | os.PathLike | None = None) -> dict:
    """Execute one experiment and write its outputs; returns the report record."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    (out / "series").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        res = run_experiment(cfg)
        error = None
    except Exception as exc:  # recorded, never silently dropped
        res = ExperimentResult(cfg.experiment)
        res.add("experiment_completed", False, detail=f"{type(exc).__name__}: {exc}")
        error = traceback.format_exc()
    wall = time.perf_counter() - t0
    series_files = {}
    for name, (series, meta) in sorted(res.series.items()):
        path = out / "series" / f"{name}.csv"
        header = {"experiment": cfg.experiment, "seed": cfg.seed, **meta}
        write_series_csv(path, series, header)
        series_files[name] = f"series/{name}.csv"
    record = {
        "experiment": cfg.experiment,
        "params": cfg.to_dict(),
        "contracts": [c.to_dict() for c in res.contracts],
        "passed": res.passed,
        "metrics": res.metrics,
        "series": {k: {**s.to_dict(), "meta": m, "csv": series_files[k]} for k, (s, m) in sorted(res.series.items())},
        "warnings": res.warnings,
        "version": __version__,
    }
    record["params"]["out_dir"] = None
    write_report_json(out / "report.json", record)
    timing = {"wall_clock_seconds": wall}
    if error:
        timing["error"] = error
    write_report_json(out / "timing.json", timing)
    return record


def _load(path, seed=None, out=None) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = parse_config(text)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return with_overrides(cfg, seed=seed, out_dir=None if out is None else str(out))


def _suite_job(args):
    path, out = args
    try:
        cfg = _load(path, out=out)
    except (ConfigurationError, OSError) as exc:
        return {"config": Path(path).name, "experiment": None, "passed": False,
                "contracts": [{"name": "config_valid", "pass": False, "detail": str(exc)}]}
    rec = run(cfg, out)
    return {"config": Path(path).name, "experiment": rec["experiment"], "passed": rec["passed"],
            "contracts": rec["contracts"]}


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("GP_THERMAL_THREADS")
    try:
        limit = int(cap) if cap else 1
    except ValueError:
        limit = 1
    return max(1, min(limit, n_jobs, os.cpu_count() or 1))


def suite(config_dir, out_root=None) -> dict:
    """Run every ``*.cfg``/``*.conf`` in ``config_dir``; failures never stop the suite."""
    root = Path(config_dir)
    paths = sorted(p for p in root.iterdir() if p.is_file() and p.suffix in CONFIG_SUFFIXES)
    out_root = Path(out_root) if out_root is not None else root / "results"
    jobs = [(str(p), str(out_root / p.stem)) for p in paths]
    n = worker_count(len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as ex:
            rows = list(ex.map(_suite_job, jobs))
    else:
        rows = [_suite_job(j) for j in jobs]
    agg = {"configs": rows, "passed": all(r["passed"] for r in rows), "n_configs": len(rows)}
    if rows:
        out_root.mkdir(parents=True, exist_ok=True)
        write_report_json(out_root / "aggregate.json", agg)
    return agg


def _print_table(rows, stream=sys.stdout):
    for r in rows:
        for c in r["contracts"]:
            verdict = "PASS" if c["pass"] else "FAIL"
            print(f"{verdict}  {r['config']:<28} {c['name']}", file=stream)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gp-thermal", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment configuration")
    r.add_argument("--config", required=True, help="key=value configuration file")
    r.add_argument("--seed", type=int, default=None, help="override the configured seed (uint64)")
    r.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    s = sub.add_parser("suite", help="run every config in a directory")
    s.add_argument("--dir", required=True, help="directory of *.cfg files")
    s.add_argument("--out", default=None, help="output root (default DIR/results)")
    sub.add_parser("list-experiments", help="list experiment names and their contracts")
    args = ap.parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(f"{name:<18} {EXPERIMENT_CONTRACTS[name]}")
        return 0
    if args.command == "run":
        try:
            cfg = _load(args.config, seed=args.seed, out=args.out)
        except (ConfigurationError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        rec = run(cfg, args.out)
        _print_table([{"config": Path(args.config).name, "contracts": rec["contracts"]}])
        return 0 if rec["passed"] else 1
    agg = suite(args.dir, args.out)
    _print_table(agg["configs"])
    print(f"{sum(r['passed'] for r in agg['configs'])}/{agg['n_configs']} configurations passed")
    return 0 if agg["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
