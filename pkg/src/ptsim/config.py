"""Experiment configuration: JSON schema, built-in presets, batch runner.

A config names one machine, one or more workload blocks, and a list of
scenario blocks that reference workloads by name. Scenarios run on fresh
machines in config order; results land in a CSV with a fixed schema, each row
optionally normalized to a named baseline scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .machine import Machine, MachineConfig
from .memtable import table_csv
from .policy import PolicyEngine, SystemPolicy
from .translation import TLBConfig
from .workload import RunStats, ScenarioConfig, WorkloadSpec, run_scenario_full

MB = 1024 ** 2


class ConfigError(Exception):
    pass


class UnknownPreset(Exception):
    pass


@dataclass(frozen=True)
class ScenarioBlock:
    scenario: ScenarioConfig
    workload_name: str
    baseline: str | None = None
    dump: bool = False


@dataclass
class ExperimentConfig:
    machine: MachineConfig
    workloads: dict[str, WorkloadSpec]
    scenarios: list[ScenarioBlock]
    seed: int = 0
    csv_path: str = "results.csv"
    dump_dir: str | None = None
    sys_policy: SystemPolicy | None = None
    memtable: bool = False  # the closed-form table needs no simulation


def _tlb_from_obj(obj: dict) -> TLBConfig:
    return TLBConfig(
        l1_entries=obj.get("l1_entries", 64),
        l2_entries=obj.get("l2_entries", 1024),
        psc_entries_per_level=obj.get("psc_entries_per_level", 32),
        pte_cacheline_cache=obj.get("pte_cacheline_cache", 0),
        pte_cacheline_latency=obj.get("pte_cacheline_latency", 100),
    )


def load_config(path) -> ExperimentConfig:
    """Load and validate a JSON experiment file."""
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_obj(obj)


def config_from_obj(obj: dict) -> ExperimentConfig:
    try:
        seed = int(obj.get("seed", 0))
        m = obj.get("machine", {})
        machine = MachineConfig(
            socket_count=m.get("sockets", 4),
            frames_per_socket=m.get("frames_per_socket", 65536),
            local_latency=m.get("local_latency", 280),
            remote_latency=m.get("remote_latency", 580),
            local_bw=m.get("local_bw", 28.0),
            remote_bw=m.get("remote_bw", 11.0),
            pagecache_reserve=m.get("pagecache_reserve", 1024),
        )
        tlb = _tlb_from_obj(obj.get("tlb", {}))
        workloads = {}
        for w in obj.get("workloads", []):
            name = w["name"]
            workloads[name] = WorkloadSpec(
                pattern=w["pattern"],
                footprint_bytes=int(w["footprint_bytes"]),
                accesses=int(w["accesses"]),
                write_ratio=float(w.get("write_ratio", 0.5)),
                threads=tuple((int(t), int(s)) for t, s in w.get("threads", [[0, 0]])),
                init_socket=int(w.get("init_socket", 0)),
                seed=int(w.get("seed", seed)),
            )
        scenarios = []
        for s in obj.get("scenarios", []):
            wname = s["workload"]
            if wname not in workloads:
                raise ConfigError(f"scenario {s.get('name')} references "
                                  f"unknown workload {wname!r}")
            ev = s.get("migration_event")
            scenarios.append(ScenarioBlock(
                scenario=ScenarioConfig(
                    name=s["name"],
                    page_size=s.get("page_size", "4k"),
                    mitosis=s.get("mitosis", "off"),
                    data_policy=s.get("data_policy", "first-touch"),
                    pt_policy=s.get("pt_policy", "first-touch"),
                    interference_sockets=tuple(s.get("interference", [])),
                    migration_event=tuple(ev) if ev else None,
                    frag_fail_prob=float(s.get("frag_fail_prob", 0.0)),
                    compute_cost=int(s.get("compute_cost", 50)),
                    interference_factor=float(s.get("interference_factor", 1.5)),
                    tlb=tlb,
                ),
                workload_name=wname,
                baseline=s.get("baseline"),
                dump=bool(s.get("dump", False)),
            ))
        out = obj.get("output", {})
        sys_policy = obj.get("sys_policy")
        return ExperimentConfig(
            machine=machine,
            workloads=workloads,
            scenarios=scenarios,
            seed=seed,
            csv_path=out.get("csv", "results.csv"),
            dump_dir=out.get("dumps"),
            sys_policy=SystemPolicy.parse(sys_policy) if sys_policy else None,
            memtable=bool(obj.get("memtable", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def config_to_obj(cfg: ExperimentConfig) -> dict:
    """Inverse of config_from_obj, for materializing presets."""
    tlb = cfg.scenarios[0].scenario.tlb if cfg.scenarios else TLBConfig()
    obj = {
        "seed": cfg.seed,
        "machine": {
            "sockets": cfg.machine.socket_count,
            "frames_per_socket": cfg.machine.frames_per_socket,
            "local_latency": cfg.machine.local_latency,
            "remote_latency": cfg.machine.remote_latency,
            "pagecache_reserve": cfg.machine.pagecache_reserve,
        },
        "tlb": {
            "l1_entries": tlb.l1_entries,
            "l2_entries": tlb.l2_entries,
            "psc_entries_per_level": tlb.psc_entries_per_level,
        },
        "workloads": [
            {
                "name": name,
                "pattern": w.pattern,
                "footprint_bytes": w.footprint_bytes,
                "accesses": w.accesses,
                "write_ratio": w.write_ratio,
                "threads": [list(t) for t in w.threads],
                "init_socket": w.init_socket,
                "seed": w.seed,
            }
            for name, w in cfg.workloads.items()
        ],
        "scenarios": [
            {
                "name": b.scenario.name,
                "workload": b.workload_name,
                "page_size": b.scenario.page_size,
                "mitosis": b.scenario.mitosis,
                "data_policy": b.scenario.data_policy,
                "pt_policy": b.scenario.pt_policy,
                "interference": list(b.scenario.interference_sockets),
                "migration_event": list(b.scenario.migration_event)
                if b.scenario.migration_event else None,
                "frag_fail_prob": b.scenario.frag_fail_prob,
                "compute_cost": b.scenario.compute_cost,
                "baseline": b.baseline,
                "dump": b.dump,
            }
            for b in cfg.scenarios
        ],
        "output": {"csv": cfg.csv_path, "dumps": cfg.dump_dir},
        "memtable": cfg.memtable,
    }
    return obj


# -- batch runner ------------------------------------------------------------


def csv_header(socket_count: int) -> str:
    cols = ["scenario", "page_size", "mitosis", "total_cycles", "walk_cycles",
            "walk_fraction"]
    cols += [f"remote_leaf_pct_s{s}" for s in range(socket_count)]
    cols += ["pt_frames", "overhead_vs_baseline"]
    return ",".join(cols)


def csv_row(block: ScenarioBlock, stats: RunStats, overhead: float | None) -> str:
    sc = block.scenario
    cells = [sc.name, sc.page_size, sc.mitosis, str(stats.total_cycles),
             str(stats.walk_cycles), f"{stats.walk_fraction:.6f}"]
    cells += [f"{p:.3f}" for p in stats.remote_leaf_pct]
    cells += [str(stats.pt_frames),
              f"{overhead:.3f}" if overhead is not None else ""]
    return ",".join(cells)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> str:
    """Run every scenario and return the CSV text (also written to disk).

    Scenarios execute on fresh machines in config order; rows normalize
    total_cycles to their named baseline scenario when one is given.
    """
    out_dir = Path(out_dir) if out_dir else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.memtable:
        text = table_csv()
        (out_dir / cfg.csv_path).write_text(text)
        return text

    results: list[tuple[ScenarioBlock, RunStats]] = []
    totals: dict[str, int] = {}
    for block in cfg.scenarios:
        machine = Machine(cfg.machine)
        pengine = PolicyEngine(cfg.sys_policy) if cfg.sys_policy else None
        stats, space = run_scenario_full(
            machine, block.scenario, cfg.workloads[block.workload_name],
            policy_engine=pengine,
        )
        totals[block.scenario.name] = stats.total_cycles
        results.append((block, stats))
        if block.dump and cfg.dump_dir is not None:
            ddir = out_dir / cfg.dump_dir
            ddir.mkdir(parents=True, exist_ok=True)
            (ddir / f"{block.scenario.name}.jsonl").write_text(
                space.snapshot_dump().to_jsonl())

    lines = [csv_header(cfg.machine.socket_count)]
    for block, stats in results:
        overhead = None
        if block.baseline:
            base = totals.get(block.baseline)
            if base:
                overhead = stats.total_cycles / base
        lines.append(csv_row(block, stats, overhead))
    text = "\n".join(lines) + "\n"
    (out_dir / cfg.csv_path).write_text(text)
    return text


# -- presets -------------------------------------------------------------------

_PRESET_TLB = {"l1_entries": 16, "l2_entries": 64, "psc_entries_per_level": 32}


def _migration_preset(page_size: str, seed: int, sockets: int) -> dict:
    if sockets < 2:
        raise ConfigError("migration preset needs at least 2 sockets")
    local = {"name": "stream-local", "pattern": "uniform-random",
             "footprint_bytes": 32 * MB, "accesses": 400_000,
             "write_ratio": 0.5, "threads": [[0, 0]], "init_socket": 0}
    origin = dict(local, name="stream-origin", threads=[[0, 1]], init_socket=1)

    def sc(name, wl, **kw):
        d = {"name": name, "workload": wl, "page_size": page_size,
             "baseline": "LP-LD" if name != "LP-LD" else None}
        d.update(kw)
        return d

    event = [0, 1, 0]
    scenarios = [
        sc("LP-LD", "stream-local"),
        sc("LP-LD+M", "stream-local", mitosis="replicate:0"),
        sc("LP-RD", "stream-local", data_policy="fixed:1"),
        sc("LP-RD+M", "stream-local", data_policy="fixed:1", mitosis="replicate:0"),
        sc("RP-LD", "stream-origin", migration_event=event),
        sc("RP-LD+M", "stream-origin", migration_event=event, mitosis="migrate"),
        sc("RP-RD", "stream-local", pt_policy="fixed:1", data_policy="fixed:1"),
        sc("RP-RD+M", "stream-local", pt_policy="fixed:1", data_policy="fixed:1",
           mitosis="replicate:0+1"),
        sc("RPI-LD", "stream-origin", migration_event=event, interference=[1]),
        sc("RPI-LD+M", "stream-origin", migration_event=event, interference=[1],
           mitosis="migrate"),
        sc("LP-RDI", "stream-local", data_policy="fixed:1", interference=[1]),
        sc("LP-RDI+M", "stream-local", data_policy="fixed:1", interference=[1],
           mitosis="replicate:0"),
        sc("RPI-RDI", "stream-local", pt_policy="fixed:1", data_policy="fixed:1",
           interference=[1]),
        sc("RPI-RDI+M", "stream-local", pt_policy="fixed:1", data_policy="fixed:1",
           interference=[1], mitosis="replicate:0+1"),
    ]
    return {
        "seed": seed,
        "machine": {"sockets": sockets},
        "tlb": _PRESET_TLB,
        "workloads": [local, origin],
        "scenarios": scenarios,
        "output": {"csv": f"migration-{page_size}.csv", "dumps": None},
    }


def _multisocket_preset(page_size: str, seed: int, sockets: int) -> dict:
    wl = {"name": "spread", "pattern": "uniform-random",
          "footprint_bytes": 64 * MB, "accesses": 400_000,
          "write_ratio": 0.5,
          "threads": [[t, t] for t in range(sockets)], "init_socket": 0}
    all_mask = "replicate:" + "+".join(str(s) for s in range(sockets))

    def sc(name, **kw):
        d = {"name": name, "workload": "spread", "page_size": page_size,
             "baseline": "F" if name != "F" else None}
        d.update(kw)
        return d

    scenarios = [
        sc("F", data_policy="first-touch", pt_policy="first-touch"),
        sc("F+M", data_policy="first-touch", pt_policy="first-touch",
           mitosis=all_mask),
        sc("I", data_policy="interleave", pt_policy="interleave"),
        sc("I+M", data_policy="interleave", pt_policy="interleave",
           mitosis=all_mask),
    ]
    return {
        "seed": seed,
        "machine": {"sockets": sockets},
        "tlb": _PRESET_TLB,
        "workloads": [wl],
        "scenarios": scenarios,
        "output": {"csv": f"multisocket-{page_size}.csv", "dumps": None},
    }


FRAG_SWEEP = (0.0, 0.5, 0.9, 1.0)


def _fragmentation_preset(seed: int, sockets: int) -> dict:
    wl = {"name": "stream-local", "pattern": "uniform-random",
          "footprint_bytes": 32 * MB, "accesses": 300_000,
          "write_ratio": 0.5, "threads": [[0, 0]], "init_socket": 0}
    scenarios = [
        {"name": f"frag-{p:.2f}", "workload": "stream-local", "page_size": "2m",
         "frag_fail_prob": p, "baseline": "frag-0.00" if p else None}
        for p in FRAG_SWEEP
    ]
    return {
        "seed": seed,
        "machine": {"sockets": sockets},
        "tlb": _PRESET_TLB,
        "workloads": [wl],
        "scenarios": scenarios,
        "output": {"csv": "fragmentation.csv", "dumps": None},
    }


PRESET_NAMES = ("migration-4k", "migration-2m", "multisocket-4k",
                "multisocket-2m", "fragmentation", "memtable")


def preset(name: str, seed: int = 42, sockets: int = 4) -> ExperimentConfig:
    """Built-in experiment reproducing one published analysis at desk scale."""
    if name == "migration-4k":
        obj = _migration_preset("4k", seed, sockets)
    elif name == "migration-2m":
        obj = _migration_preset("2m", seed, sockets)
    elif name == "multisocket-4k":
        obj = _multisocket_preset("4k", seed, sockets)
    elif name == "multisocket-2m":
        obj = _multisocket_preset("2m", seed, sockets)
    elif name == "fragmentation":
        obj = _fragmentation_preset(seed, sockets)
    elif name == "memtable":
        obj = {"seed": seed, "machine": {"sockets": sockets}, "memtable": True,
               "output": {"csv": "memtable.csv", "dumps": None}}
    else:
        raise UnknownPreset(f"unknown preset {name!r}; "
                            f"choose from {', '.join(PRESET_NAMES)}")
    return config_from_obj(obj)
