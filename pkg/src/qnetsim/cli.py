"""Command-line entry point.

Subcommands:
  validate  check a program document against the supported subset
  run       execute one simulation from a config file
  sweep     Cartesian (units x rate x seed) sweep with resume and workers
  replay    re-execute a stored run and compare hashes/CSV bytes
  table     apply a table insert/delete on a built network and dump the table
  trace     print the event log of a run

Exit codes: 0 success, 1 program validation, 2 configuration, 3 runtime.
Everything a run writes stays under --out.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys
from dataclasses import replace

from .bmv2 import ProgramValidationError, load_program
from .harness.config import ConfigError, load_config, parse_config
from .harness.experiment import run_experiment, run_records_csv
from .harness.metrics import compute_metrics
from .harness.sweep import run_sweep, write_run_outputs

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config_doc(path: str) -> dict:
    try:
        return json.loads(open(path).read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None


def cmd_validate(args) -> int:
    try:
        text = open(args.program).read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        prog = load_program(text)
    except ProgramValidationError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    tables = sum(len(p.tables) for p in prog.pipelines)
    print(f"{args.program}: ok (target {prog.target}, "
          f"{len(prog.headers)} headers, {tables} tables)")
    return EXIT_OK


def _resolve_seed(args, cfg) -> int:
    if args.seed is not None:
        return args.seed
    if cfg.demand.base_seed is not None:
        return cfg.demand.base_seed
    raise ConfigError("no seed: pass --seed or set demand.base_seed")


def cmd_run(args) -> int:
    config_doc = _load_config_doc(args.config)
    cfg = parse_config(config_doc)
    seed = _resolve_seed(args, cfg)
    out = pathlib.Path(args.out)
    result, _net = run_experiment(cfg.topology, cfg.physics, cfg.demand, seed)
    metrics = compute_metrics(result.records, cfg.demand.window_ns)
    units = max((n.bsm_units for n in cfg.topology.nodes
                 if n.role == "heralding_hub"), default=0)
    write_run_outputs(out, config_doc, units, cfg.demand.rate_per_s, seed,
                      result, metrics)
    print(f"seed={seed} requests={len(result.records)} "
          f"completed_in_window={metrics.count} "
          f"throughput={metrics.throughput_per_s:.2f}/s "
          f"mean_latency={metrics.mean_latency_ns / 1e6:.3f}ms "
          f"trace={result.trace_hash[:16]}")
    if result.truncated:
        print("warning: run truncated before quiescence; results are partial",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_sweep(args) -> int:
    config_doc = _load_config_doc(args.config)
    parse_config(config_doc)  # fail fast on config errors
    rows, failed = run_sweep(config_doc, args.out, workers=args.workers)
    print(f"sweep: {len(rows)} cells ok, {failed} failed -> {args.out}/summary.csv")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_replay(args) -> int:
    run_dir = pathlib.Path(args.run_dir)
    try:
        info = json.loads((run_dir / "run.json").read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read run directory: {exc}") from None
    cfg = parse_config(info["config"])
    topology = cfg.with_units(info["units"]) if info.get("units") else cfg.topology
    demand = replace(cfg.demand, rate_per_s=info["rate_per_s"])
    result, _net = run_experiment(topology, cfg.physics, demand, info["seed"],
                                  drain=info.get("drain", True))
    csv_now = run_records_csv(result.records)
    csv_then = (run_dir / "run.csv").read_text()
    if result.trace_hash == info["trace_hash"] and csv_now == csv_then:
        print(f"replay OK: trace {result.trace_hash[:16]} and run.csv identical")
        return EXIT_OK
    print("replay MISMATCH:", file=sys.stderr)
    if result.trace_hash != info["trace_hash"]:
        print(f"  trace {result.trace_hash} != stored {info['trace_hash']}",
              file=sys.stderr)
    if csv_now != csv_then:
        print("  run.csv differs", file=sys.stderr)
    return EXIT_RUNTIME


def _parse_ints(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    return tuple(int(part.strip(), 0) for part in text.split(","))


def cmd_table(args) -> int:
    cfg = load_config(args.config)
    from .harness.topology import build_network

    net = build_network(cfg.topology, cfg.physics, seed=0)
    if args.node not in net.devices:
        raise ConfigError(f"unknown node '{args.node}'")
    proc = net.devices[args.node].processor
    from .runtime import RuntimeExecutionError

    try:
        if args.insert:
            proc.table_insert(args.table, _parse_ints(args.key), args.action,
                              _parse_ints(args.params))
        elif args.delete:
            proc.table_delete(args.table, _parse_ints(args.key))
        entries = proc.table_dump(args.table)
    except RuntimeExecutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{args.node}/{args.table}: {len(entries)} entries")
    for key, action, params in entries:
        key_text = ",".join(str(k) for k in key)
        params_text = ",".join(str(p) for p in params)
        print(f"  [{key_text}] -> {action}({params_text})")
    return EXIT_OK


def cmd_trace(args) -> int:
    config_doc = _load_config_doc(args.config)
    cfg = parse_config(config_doc)
    seed = _resolve_seed(args, cfg)
    result, net = run_experiment(cfg.topology, cfg.physics, cfg.demand, seed,
                                 keep_trace_lines=True)
    lines = net.engine.trace.lines or []
    for line in lines[: args.limit] if args.limit else lines:
        print(line)
    print(f"# {len(lines)} events, trace {result.trace_hash}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetsim",
        description="Discrete-event quantum network simulator with a "
                    "programmable match+action data plane.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a program document")
    p.add_argument("program")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="run one simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run the configured sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("replay", help="re-run a stored run and compare")
    p.add_argument("run_dir")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("table", help="table management against a built network")
    p.add_argument("--config", required=True)
    p.add_argument("--node", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--insert", action="store_true")
    p.add_argument("--delete", action="store_true")
    p.add_argument("--key", default="")
    p.add_argument("--action", default="")
    p.add_argument("--params", default="")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("trace", help="print the event log of a run")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--limit", type=int)
    p.set_defaults(fn=cmd_trace)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures: deterministic exit code
        print(f"runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
