"""ptsim: a workload-driven NUMA virtual-memory simulator.

Models a multi-socket machine, four-level radix page-tables that can be
replicated per socket and migrated between sockets, per-core translation
hardware (TLBs, paging-structure caches, the page walker), synthetic
workloads, and the snapshot analyses that expose where page-table pages live
and what remote walks cost.
"""

from .machine import (
    AllocPolicy, DoubleFree, Frame, FrameKind, Machine, MachineConfig,
    OutOfMemory, PolicyKind,
)
from .pagetable import (
    HUGE_PAGE_SIZE, PAGE_SIZE, AddressSpace, AlreadyMapped, NotMapped,
    PageFault, PageTableNode, PTE, WalkTrace, WriteLog, create_address_space,
)
from .policy import PolicyEngine, SystemPolicy
from .snapshot import EntryRecord, NodeRecord, SnapshotDump
from .translation import (
    PTECachelineCache, TLBConfig, TranslateResult, TranslationEngine,
    WalkResult, flush_tlb,
)
from .workload import (
    ConfigMismatch, RunStats, ScenarioConfig, WorkloadSpec, access_pattern,
    apply_fragmentation, move_data_frames, run_multisocket, run_scenario,
    run_scenario_full,
)
from .memtable import mem_overhead
from .analyzer import (
    LevelDistribution, ParseError, level_distribution, parse_dump,
    remote_leaf_view, render_matrix,
)
from .config import ExperimentConfig, load_config, preset, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AddressSpace", "AllocPolicy", "AlreadyMapped", "ConfigMismatch",
    "DoubleFree", "EntryRecord", "ExperimentConfig", "Frame", "FrameKind",
    "HUGE_PAGE_SIZE", "LevelDistribution", "Machine", "MachineConfig",
    "NodeRecord", "NotMapped", "OutOfMemory", "PAGE_SIZE", "PTE",
    "PTECachelineCache", "PageFault", "PageTableNode", "ParseError",
    "PolicyEngine", "PolicyKind", "RunStats", "ScenarioConfig", "SnapshotDump",
    "SystemPolicy", "TLBConfig", "TranslateResult", "TranslationEngine",
    "WalkResult", "WalkTrace", "WorkloadSpec", "WriteLog", "access_pattern",
    "apply_fragmentation", "create_address_space", "flush_tlb",
    "level_distribution", "load_config", "mem_overhead", "move_data_frames",
    "parse_dump", "preset", "remote_leaf_view", "render_matrix",
    "run_experiment", "run_multisocket", "run_scenario", "run_scenario_full",
]
