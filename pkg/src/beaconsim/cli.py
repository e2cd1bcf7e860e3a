"""Command-line entry point: run scenarios, sweep parameters, inspect presets."""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import presets
from .engine import derive_seed, run
from .metrics import write_report
from .params import (ConfigError, SimConfig, apply_override, config_from_dict,
                     config_to_dict, load_config)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _base_config(args) -> SimConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = presets.make(args.preset, 0)
    else:
        cfg = SimConfig()
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects path=value, got {item!r}")
        path, raw = item.split("=", 1)
        apply_override(cfg, path, raw)
    return cfg


def _out_root(args) -> str:
    return args.out or os.environ.get("BEACONSIM_OUT", "results")


def cmd_run(args) -> int:
    cfg = _base_config(args)
    cfg.seed = args.seed
    cfg.require_valid()
    report = run(cfg)
    out_dir = os.path.join(_out_root(args),
                           f"{args.preset or 'custom'}_seed{args.seed}")
    write_report(report, out_dir)
    summary = report.summary()
    print(f"run complete: {out_dir}")
    for key in ("expiration_ratio", "mean_waiting_ms", "discovery_frac_500ms",
                "event_acceptance_ratio"):
        print(f"  {key}: {summary[key]}")
    return EXIT_OK


def _sweep_one(task) -> tuple[str, dict]:
    cfg_dict, out_dir = task
    cfg = config_from_dict(cfg_dict)
    report = run(cfg)
    write_report(report, out_dir)
    return out_dir, report.summary()


def cmd_sweep(args) -> int:
    base = _base_config(args)
    grids: list[tuple[str, list[str]]] = []
    for spec in args.param or []:
        if "=" not in spec:
            raise ConfigError(f"--param expects path=v1,v2,..., got {spec!r}")
        path, vals = spec.split("=", 1)
        grids.append((path, vals.split(",")))
    combos = list(itertools.product(*[vals for _, vals in grids])) or [()]
    tasks = []
    run_index = 0
    for combo in combos:
        for s in range(args.seeds):
            cfg = config_from_dict(config_to_dict(base))
            label_parts = []
            for (path, _), val in zip(grids, combo):
                apply_override(cfg, path, val)
                label_parts.append(f"{path.replace('.', '_')}{val}")
            cfg.seed = derive_seed(args.seed, f"run:{run_index}")
            cfg.require_valid()
            label = "_".join(label_parts) or "base"
            out_dir = os.path.join(_out_root(args),
                                   f"{label}_s{s}")
            tasks.append((config_to_dict(cfg), out_dir))
            run_index += 1
    workers = args.jobs or os.cpu_count() or 1
    results = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    print(f"{len(results)} runs complete")
    for out_dir, summary in results:
        print(f"  {out_dir}: expiration={summary['expiration_ratio']:.4f} "
              f"wait={summary['mean_waiting_ms']}")
    return EXIT_OK


def cmd_presets(_args) -> int:
    for name, (_fn, desc) in presets.PRESETS.items():
        print(f"{name:18s} {desc}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config_file)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    errs = cfg.validate()
    if errs:
        for e in errs:
            print(f"invalid: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beaconsim")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario")
    run_p.add_argument("--preset", choices=sorted(presets.PRESETS))
    run_p.add_argument("--config")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--set", action="append", metavar="PATH=VALUE")
    run_p.add_argument("--out")
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="cartesian parameter grid x seeds")
    sweep_p.add_argument("--preset", choices=sorted(presets.PRESETS))
    sweep_p.add_argument("--config")
    sweep_p.add_argument("--param", action="append", metavar="PATH=V1,V2,...")
    sweep_p.add_argument("--seeds", type=int, default=5)
    sweep_p.add_argument("--seed", type=int, default=0,
                         help="master seed; per-run seeds derive from it")
    sweep_p.add_argument("--set", action="append", metavar="PATH=VALUE")
    sweep_p.add_argument("--jobs", type=int, default=0)
    sweep_p.add_argument("--out")
    sweep_p.set_defaults(fn=cmd_sweep)

    pres_p = sub.add_parser("presets", help="list scenario presets")
    pres_p.set_defaults(fn=cmd_presets)

    val_p = sub.add_parser("validate-config", help="check a config file")
    val_p.add_argument("config_file")
    val_p.set_defaults(fn=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
