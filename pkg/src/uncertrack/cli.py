"""Command-line entry point: ``uncertrack run`` and ``uncertrack validate``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import sim
from .config import ConfigError, load_config, validate
from .search import SpiralPlan
from .svg import plan_svg, write_svg

EXIT_OK, EXIT_MISSING, EXIT_SCHEMA = 0, 2, 3
WORKERS_ENV = "UNCERTRACK_WORKERS"
SUMMARY_FIELDS = ("scenario", "n", "success_rate", "mean_s", "std_s")


def worker_count(trials: int) -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        n = int(raw) if raw else os.cpu_count() or 1
    except ValueError:
        n = 1
    return max(1, min(n, trials))


def _run_one(args):
    name, cfg, seed = args
    return sim.run_scenario(name, cfg, seed).to_json()


def run_trials(name: str, cfg: dict, seed: int, trials: int, workers: int = 1) -> list[str]:
    """JSON lines for seeds ``seed .. seed + trials - 1``, in seed order."""
    jobs = [(name, cfg, seed + i) for i in range(trials)]
    if workers <= 1:
        lines = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            lines = list(ex.map(_run_one, jobs, chunksize=max(1, trials // (4 * workers))))
    return sorted(lines, key=lambda s: json.loads(s)["seed"])


def summarize(rows: list[dict]) -> list[dict]:
    """Per-scenario success rate and mean / population std of seconds."""
    out = []

    def add(label, seconds, success):
        s = np.asarray(seconds, dtype=float)
        out.append({"scenario": label, "n": len(s), "success_rate": float(np.mean(success)),
                    "mean_s": float(s.mean()), "std_s": float(s.std())})

    by = {}
    for r in rows:
        by.setdefault(r["scenario"], []).append(r)
    for name, rs in by.items():
        add(name, [r["seconds"] for r in rs], [bool(r["success"]) for r in rs])
        if all("circular_seconds" in r["metrics"] for r in rs):
            add(f"{name}/circular", [r["metrics"]["circular_seconds"] for r in rs],
                [bool(r["metrics"]["circular_success"]) for r in rs])
    return out


def summary_csv(summary: list[dict]) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    wr.writeheader()
    for row in summary:
        wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _figure(cfg: dict, row: dict) -> str:
    cov = row["metrics"].get("cov_xy")
    if cov is None and "grasp" in row["stages"]:
        cov = np.asarray(row["stages"]["grasp"]["cov"]).reshape(6, 6)[3:5, 3:5]
    if cov is None:
        return plan_svg(np.zeros((1, 2)))
    cov = np.asarray(cov, dtype=float)
    plan = sim._spiral_for(cov, cfg) if row["scenario"] != "grasp-only" else SpiralPlan(np.zeros((1, 2)), 1.0, 0.0)
    return plan_svg(plan.waypoints, cov)


def output_paths(out) -> dict:
    out = Path(out)
    stem = out.with_suffix("") if out.suffix else out
    return {"jsonl": out, "summary": Path(f"{stem}.summary.csv"), "svg": Path(f"{stem}.svg")}


def cmd_run(ns) -> int:
    if ns.trials < 1:
        print("error: --trials must be at least 1", file=sys.stderr)
        return EXIT_SCHEMA
    if not 0 <= ns.seed < 2**64:
        print("error: --seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        cfg = load_config(ns.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_MISSING if exc.missing else EXIT_SCHEMA
    lines = run_trials(ns.scenario, cfg, ns.seed, ns.trials, worker_count(ns.trials))
    rows = [json.loads(s) for s in lines]
    paths = output_paths(ns.out)
    paths["jsonl"].parent.mkdir(parents=True, exist_ok=True)
    paths["jsonl"].write_text("".join(s + "\n" for s in lines))
    paths["summary"].write_text(summary_csv(summarize(rows)))
    if ns.emit_svg:
        write_svg(paths["svg"], _figure(cfg, rows[0]))
    return EXIT_OK


def cmd_validate(ns) -> int:
    try:
        diags = validate(ns.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    for d in diags:
        print(d)
    return EXIT_OK if not diags else EXIT_SCHEMA


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uncertrack", description="Seeded uncertainty-aware assembly experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a batch of seeded trials")
    r.add_argument("--scenario", required=True, choices=sim.SCENARIOS)
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--out", required=True, help="JSON-lines report path; summary CSV and SVG are written beside it")
    r.add_argument("--emit-svg", action="store_true")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config file and print diagnostics")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
