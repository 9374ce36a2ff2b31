"""Sweep driver: Cartesian product of (units, rate, seed) cells, process-
parallel, resumable, emitting per-run CSVs plus summary and CDF tables."""

from __future__ import annotations

import csv
import json
import pathlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .config import SimConfig, parse_config
from .experiment import run_experiment, run_records_csv
from .metrics import cdf_points, compute_metrics

SUMMARY_COLUMNS = ("units", "rate_per_s", "seed", "completed", "throughput_per_s",
                   "mean_latency_ns", "p50_ns", "p95_ns", "truncated")


def write_run_outputs(out_dir: pathlib.Path, config_doc: dict, units: int,
                      rate: float, seed: int, result, metrics,
                      drain: bool = True) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run.csv").write_text(run_records_csv(result.records))
    row = {
        "units": units,
        "rate_per_s": rate,
        "seed": seed,
        "completed": metrics.count,
        "throughput_per_s": metrics.throughput_per_s,
        "mean_latency_ns": metrics.mean_latency_ns,
        "p50_ns": metrics.p50_ns,
        "p95_ns": metrics.p95_ns,
        "truncated": int(result.truncated),
    }
    (out_dir / "run.json").write_text(json.dumps({
        "status": "ok" if not result.truncated else "truncated",
        "config": config_doc,
        "units": units,
        "rate_per_s": rate,
        "seed": seed,
        "drain": drain,
        "trace_hash": result.trace_hash,
        "events": result.events,
        "end_time_ns": result.end_time_ns,
        "summary": row,
    }, indent=2) + "\n")
    return row


def execute_cell(config_doc: dict, units: int, rate: float, seed: int,
                 out_dir: str) -> dict:
    """One isolated simulation; suitable as a process-pool work item.

    Sweep cells follow the measurement protocol: the clock stops at the
    demand duration and pending requests stay incomplete (they cannot enter
    the window anyway), so saturating rates do not cost a long drain."""
    cfg = parse_config(config_doc)
    topology = cfg.with_units(units)
    demand = replace(cfg.demand, rate_per_s=rate)
    result, _net = run_experiment(topology, cfg.physics, demand, seed, drain=False)
    metrics = compute_metrics(result.records, demand.window_ns)
    return write_run_outputs(pathlib.Path(out_dir), config_doc, units, rate,
                             seed, result, metrics, drain=False)


def cell_path(out: pathlib.Path, units: int, rate: float, seed: int) -> pathlib.Path:
    return out / f"units{units}_rate{rate:g}" / f"seed{seed}"


def sweep_cells(cfg: SimConfig) -> list[tuple[int, float, int]]:
    if cfg.demand.base_seed is None:
        raise ValueError("sweep needs demand.base_seed")
    units_axis = cfg.sweep_units or sorted(
        {n.bsm_units for n in cfg.topology.nodes if n.role == "heralding_hub"})
    rate_axis = cfg.sweep_rates or [cfg.demand.rate_per_s]
    seeds = [cfg.demand.base_seed + i for i in range(cfg.demand.repetitions)]
    return [(u, r, s) for u in units_axis for r in rate_axis for s in seeds]


def run_sweep(config_doc: dict, out, workers: int = 1) -> tuple[list[dict], int]:
    """Returns (summary rows, failed cell count). Completed cells are skipped."""
    cfg = parse_config(config_doc)
    out = pathlib.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cells = sweep_cells(cfg)

    rows: dict[tuple, dict] = {}
    todo = []
    for units, rate, seed in cells:
        marker = cell_path(out, units, rate, seed) / "run.json"
        if marker.exists():
            info = json.loads(marker.read_text())
            if info.get("status") == "ok":
                rows[(units, rate, seed)] = info["summary"]
                continue
        todo.append((units, rate, seed))

    failed = 0
    if workers <= 1:
        for units, rate, seed in todo:
            try:
                rows[(units, rate, seed)] = execute_cell(
                    config_doc, units, rate, seed,
                    str(cell_path(out, units, rate, seed)))
            except Exception as exc:  # cell failures recorded, sweep continues
                failed += 1
                _record_failure(out, units, rate, seed, exc)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(execute_cell, config_doc, units, rate, seed,
                            str(cell_path(out, units, rate, seed))): (units, rate, seed)
                for units, rate, seed in todo}
            for future, key in futures.items():
                try:
                    rows[key] = future.result()
                except Exception as exc:
                    failed += 1
                    _record_failure(out, *key, exc)

    ordered = [rows[key] for key in sorted(rows)]
    _write_summary(out / "summary.csv", ordered)
    _write_cdfs(out, cfg, ordered)
    return ordered, failed


def _record_failure(out: pathlib.Path, units, rate, seed, exc):
    cell = cell_path(out, units, rate, seed)
    cell.mkdir(parents=True, exist_ok=True)
    (cell / "run.json").write_text(json.dumps({
        "status": "failed", "units": units, "rate_per_s": rate, "seed": seed,
        "error": repr(exc)}, indent=2) + "\n")


def _write_summary(path: pathlib.Path, rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _window_latencies(cell_dir: pathlib.Path, window_ns) -> list[int]:
    w0, w1 = window_ns
    out = []
    with open(cell_dir / "run.csv") as fh:
        for row in csv.DictReader(fh):
            if not row["start_ns"] or not row["complete_ns"]:
                continue
            start, complete = int(row["start_ns"]), int(row["complete_ns"])
            if start >= w0 and complete <= w1:
                out.append(start - int(row["submit_ns"]))
    return out


def _write_cdfs(out: pathlib.Path, cfg: SimConfig, rows: list[dict]):
    """Plot-ready latency CDF per (units, rate), pooled over seeds."""
    combos = sorted({(row["units"], row["rate_per_s"]) for row in rows})
    for units, rate in combos:
        latencies = []
        for row in rows:
            if (row["units"], row["rate_per_s"]) != (units, rate):
                continue
            latencies.extend(_window_latencies(
                cell_path(out, units, rate, row["seed"]), cfg.demand.window_ns))
        path = out / f"cdf_units{units}_rate{rate:g}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["latency_ns", "cdf"])
            for value, prob in cdf_points(latencies):
                writer.writerow([value, f"{prob:.6f}"])
