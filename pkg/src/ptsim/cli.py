"""ptsim command line: batch experiment runs, presets, dump analysis, and the
memory-overhead table.

    ptsim run <config.json> [--out DIR] [--seed N]
    ptsim preset <name> [--out DIR] [--seed N] [--sockets N]
                 [--page-size 4k|2m] [--pgtablerepl LIST] [--sys-policy P]
    ptsim analyze <dump.jsonl> [--observer S] [--matrix|--csv] [--replica R]
    ptsim memtable [--footprints ...] [--replicas ...] [--csv]

PTSIM_SEED in the environment supplies the seed when --seed is absent.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import analyzer, config as cfgmod, memtable
from .policy import SystemPolicy


def _seed_from(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PTSIM_SEED")
    return int(env) if env else None


def _apply_overrides(cfg, args):
    if getattr(args, "sockets", None):
        cfg.machine = dataclasses.replace(cfg.machine,
                                          socket_count=args.sockets)
    if getattr(args, "sys_policy", None):
        cfg.sys_policy = SystemPolicy.parse(args.sys_policy)
    if getattr(args, "page_size", None):
        cfg.scenarios = [
            dataclasses.replace(
                b, scenario=dataclasses.replace(b.scenario, page_size=args.page_size))
            for b in cfg.scenarios
        ]
    if getattr(args, "pgtablerepl", None):
        mask = "replicate:" + args.pgtablerepl.replace(",", "+")
        cfg.scenarios = [
            dataclasses.replace(
                b, scenario=dataclasses.replace(b.scenario, mitosis=mask))
            for b in cfg.scenarios
        ]
    return cfg


def cmd_run(args) -> int:
    cfg = cfgmod.load_config(args.config)
    seed = _seed_from(args)
    if seed is not None:
        cfg.seed = seed
        cfg.workloads = {
            name: dataclasses.replace(w, seed=seed)
            for name, w in cfg.workloads.items()
        }
    cfg = _apply_overrides(cfg, args)
    text = cfgmod.run_experiment(cfg, out_dir=args.out)
    sys.stdout.write(text)
    return 0


def cmd_preset(args) -> int:
    seed = _seed_from(args)
    cfg = cfgmod.preset(args.name, seed=42 if seed is None else seed,
                        sockets=args.sockets or 4)
    cfg = _apply_overrides(cfg, args)
    out = Path(args.out) if args.out else Path.cwd() / f"ptsim-{args.name}"
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfgmod.config_to_obj(cfg), indent=2) + "\n")
    text = cfgmod.run_experiment(cfg, out_dir=out)
    sys.stdout.write(text)
    sys.stderr.write(f"wrote {out / cfg.csv_path}\n")
    return 0


def cmd_analyze(args) -> int:
    with open(args.dump) as fh:
        dump = analyzer.parse_dump(fh)
    if args.observer is not None:
        pct = analyzer.remote_leaf_view(dump, args.observer)
        sys.stdout.write(f"{100.0 * pct:.2f}\n")
        return 0
    replica = None if args.replica in (None, "merged") else int(args.replica)
    dist = analyzer.level_distribution(dump, replica)
    if args.csv:
        sys.stdout.write(analyzer.distribution_csv(dist))
    else:
        sys.stdout.write(analyzer.render_matrix(dist))
    return 0


def cmd_memtable(args) -> int:
    footprints = (
        tuple(memtable.parse_size(f) for f in args.footprints)
        if args.footprints else memtable.DEFAULT_FOOTPRINTS
    )
    replicas = tuple(args.replicas) if args.replicas else memtable.DEFAULT_REPLICAS
    if args.csv:
        sys.stdout.write(memtable.table_csv(footprints, replicas))
    else:
        sys.stdout.write(memtable.render_table(footprints, replicas))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptsim", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--sockets", type=int, default=None,
                        help="override the machine's socket count")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--page-size", choices=("4k", "2m"), default=None)
        sp.add_argument("--pgtablerepl", default=None, metavar="SOCKETS",
                        help="replicate page-tables on this socket list, e.g. 0,1")
        sp.add_argument("--sys-policy", default=None,
                        help="off | per-process | fixed:<s> | all")

    runp = sub.add_parser("run", help="run a JSON experiment config")
    runp.add_argument("config")
    common(runp)
    runp.set_defaults(func=cmd_run)

    prep = sub.add_parser("preset", help="run a built-in experiment")
    prep.add_argument("name", choices=cfgmod.PRESET_NAMES)
    common(prep)
    prep.set_defaults(func=cmd_preset)

    ana = sub.add_parser("analyze", help="analyze a page-table dump")
    ana.add_argument("dump")
    ana.add_argument("--observer", type=int, default=None,
                     help="print remote-leaf %% seen from this socket")
    ana.add_argument("--replica", default=None,
                     help="restrict to one replica tree (socket id or 'merged')")
    ana.add_argument("--matrix", action="store_true", default=True)
    ana.add_argument("--csv", action="store_true")
    ana.set_defaults(func=cmd_analyze)

    mem = sub.add_parser("memtable", help="closed-form memory overhead table")
    mem.add_argument("--footprints", nargs="+", default=None,
                     help="e.g. 1MB 1GB 1TB 16TB")
    mem.add_argument("--replicas", nargs="+", type=int, default=None)
    mem.add_argument("--csv", action="store_true")
    mem.set_defaults(func=cmd_memtable)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (cfgmod.ConfigError, cfgmod.UnknownPreset, analyzer.ParseError,
            OSError, ValueError) as exc:
        sys.stderr.write(f"ptsim: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
