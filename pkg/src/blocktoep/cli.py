"""Command line interface.

Subcommands:

* ``run CONFIG``      -- execute an experiment config (a YAML path or the
                         name of a bundled config) and write its artifacts.
* ``validate CONFIG`` -- check a config without running anything.
* ``list-builtin``    -- show the bundled configs.

Exit codes: 0 on success, 1 on validation failure, 2 when the run finished
with some tasks failed (a partial manifest was still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    MissingArtifact,
    ValidationError,
    builtin_config_names,
    builtin_config_path,
    emit_plotdata,
    load_config,
    run_experiment,
)


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    return builtin_config_path(name)


def _cmd_run(args) -> int:
    config = load_config(_resolve_config(args.config))
    tasks = args.tasks.split(",") if args.tasks else None
    manifest = run_experiment(config, args.out, workers=args.workers,
                              tasks=tasks, figures=args.figures)
    if args.plotdata:
        for figure_id in manifest.figure_ids:
            emit_plotdata(manifest, figure_id)
    failed = [e for e in manifest.entries if e["status"] != "ok"]
    for entry in manifest.entries:
        where = f"eta={entry['eta']}" if entry["eta"] is not None else "sweep"
        status = entry["status"]
        line = f"[{status}] {entry['task']} ({where})"
        if entry["error"]:
            line += f": {entry['error']}"
        print(line)
    print(f"manifest: {Path(manifest.out_dir) / (manifest.label + '__manifest.json')}")
    return 2 if failed else 0


def _cmd_validate(args) -> int:
    config = load_config(_resolve_config(args.config))
    counts = {eta: config.structure.block_counts(eta) for eta in config.etas}
    print(f"ok: {config.label} "
          f"(nu={config.structure.nu}, shape={config.structure.block_shape}, "
          f"tasks={','.join(config.tasks)})")
    for eta, c in counts.items():
        print(f"  eta={eta}: block sizes {c}, total {sum(c)}")
    return 0


def _cmd_list_builtin(_args) -> int:
    for name in builtin_config_names():
        config = load_config(builtin_config_path(name))
        desc = config.description or "(no description)"
        print(f"{name:20s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocktoep",
        description="Assemble block Toeplitz structures and verify their "
                    "spectral distribution against the predicted symbol.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="config path or builtin name")
    run.add_argument("--out", default="runs", help="output directory (default: runs)")
    run.add_argument("--workers", type=int, default=1,
                     help="parallel workers across eta values (default: 1)")
    run.add_argument("--tasks", default=None,
                     help="comma-separated task filter (subset of the config's tasks)")
    run.add_argument("--figures", dest="figures", action="store_true", default=True,
                     help="render PNG panels next to the value files (default)")
    run.add_argument("--no-figures", dest="figures", action="store_false",
                     help="skip PNG rendering")
    run.add_argument("--plotdata", action="store_true",
                     help="also emit gnuplot-friendly two-column series")
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate", help="validate a config without running")
    validate.add_argument("config", help="config path or builtin name")
    validate.set_defaults(func=_cmd_validate)

    lsb = sub.add_parser("list-builtin", help="list bundled configs")
    lsb.set_defaults(func=_cmd_list_builtin)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, MissingArtifact) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
