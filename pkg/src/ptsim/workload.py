"""Synthetic workload generation and scenario execution.

A run has two phases. The init phase maps the footprint and first-touches
every page from the init socket, which is what pins data frames and (under
first-touch) page-table pages to that socket. The access phase replays the
workload's access pattern round-robin across its threads, charging each access
a fixed compute cost plus the data access cost plus any page-walk cycles.

An optional migration event models the OS moving the process mid-run: threads
and data frames move to the target socket instantly; page-tables move only
when page-table migration is enabled, otherwise they stay behind exactly like
a stock kernel. Interference is modeled as a latency multiplier on the
affected sockets' memory during the access phase.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from random import Random

from .machine import AllocPolicy, FrameKind, Machine
from .pagetable import (
    FRAME_SHIFT, H_BIT, HUGE_PAGE_SIZE, PAGE_SIZE, AddressSpace, pte_frame,
)
from .policy import PolicyEngine
from .translation import PTECachelineCache, TLBConfig, TranslationEngine

DEFAULT_BASE = 1 << 39

PATTERNS = ("uniform-random", "sequential-stream", "hash-probe", "pointer-chase")


class ConfigMismatch(Exception):
    """Scenario and workload settings contradict each other or the machine."""


@dataclass(frozen=True)
class WorkloadSpec:
    """A synthetic access stream plus its thread placement."""

    pattern: str
    footprint_bytes: int
    accesses: int
    write_ratio: float = 0.5
    threads: tuple[tuple[int, int], ...] = ((0, 0),)
    init_socket: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if not self.threads:
            raise ValueError("need at least one thread")
        if not 0.0 <= self.write_ratio <= 1.0:
            raise ValueError("write_ratio must be in [0, 1]")
        if self.footprint_bytes <= 0 or self.footprint_bytes % PAGE_SIZE:
            raise ValueError("footprint must be a positive multiple of 4KB")


@dataclass(frozen=True)
class ScenarioConfig:
    """Placement, replication, and disturbance knobs for one run.

    mitosis is "off", "migrate" (page-tables follow a migration event), or
    "replicate:<sockets>" (replicas created up front on those sockets).
    """

    name: str
    page_size: str = "4k"
    mitosis: str = "off"
    data_policy: str = "first-touch"
    pt_policy: str = "first-touch"
    interference_sockets: tuple[int, ...] = ()
    migration_event: tuple[int, int, int] | None = None  # (time, from, to)
    frag_fail_prob: float = 0.0
    compute_cost: int = 50
    interference_factor: float = 1.5
    tlb: TLBConfig = field(default_factory=TLBConfig)

    def mitosis_kind(self) -> str:
        if self.mitosis in ("off", "migrate"):
            return self.mitosis
        if self.mitosis.startswith("replicate:"):
            return "replicate"
        raise ValueError(f"bad mitosis setting {self.mitosis!r}")

    def replicate_mask(self) -> frozenset[int]:
        spec = self.mitosis.split(":", 1)[1].replace(",", "+")
        return frozenset(int(s) for s in spec.split("+") if s != "")


@dataclass(frozen=True)
class RunStats:
    """Aggregate outcome of one scenario run."""

    total_cycles: int
    init_cycles: int
    walk_cycles: int
    walk_fraction: float
    remote_leaf_pct: tuple[float, ...]
    pt_frames: int
    data_frames: int
    tlb_hits: int
    tlb_misses: int
    local_walk_accesses: int
    remote_walk_accesses: int


def access_pattern(pattern: str, pages: int, rng: Random):
    """Infinite page-index stream for one thread."""
    if pattern == "uniform-random":
        while True:
            yield rng.randrange(pages)
    elif pattern == "sequential-stream":
        i = 0
        while True:
            yield i % pages
            i += 1
    elif pattern == "hash-probe":
        # random bucket, short linear probe run with some locality
        while True:
            b = rng.randrange(pages)
            yield b
            if rng.random() < 0.3:
                yield (b + 1) % pages
    elif pattern == "pointer-chase":
        # hot root page, warm internal region, cold random leaves
        internal_hi = min(pages, max(2, pages // 512))
        while True:
            yield 0
            if internal_hi > 1:
                yield rng.randrange(1, internal_hi)
            yield rng.randrange(pages)
    else:
        raise ValueError(f"unknown pattern {pattern!r}")


class _Thread:
    __slots__ = ("tid", "socket", "engine", "pages", "writes", "cycles")

    def __init__(self, tid: int, socket: int) -> None:
        self.tid = tid
        self.socket = socket
        self.engine: TranslationEngine | None = None
        self.pages = None
        self.writes: Random | None = None
        self.cycles = 0


def build_space(machine: Machine, scenario: ScenarioConfig,
                workload: WorkloadSpec, policy_engine=None) -> AddressSpace:
    """Create the address space a scenario runs in."""
    pt_policy = AllocPolicy.parse(scenario.pt_policy)
    data_policy = AllocPolicy.parse(scenario.data_policy)
    if scenario.mitosis_kind() == "replicate":
        mask = scenario.replicate_mask()
        strict = True
    else:
        if pt_policy.fixed_socket is not None:
            mask = {pt_policy.fixed_socket}
        else:
            mask = {workload.init_socket}
        strict = False
    return AddressSpace.create(
        machine, pt_policy, data_policy, mask,
        page_size_mode=scenario.page_size, strict=strict,
        policy_engine=policy_engine,
    )


def map_footprint(machine: Machine, space: AddressSpace,
                  workload: WorkloadSpec, scenario: ScenarioConfig,
                  base: int = DEFAULT_BASE) -> None:
    """Map the whole footprint, 2MB chunk by chunk.

    In 2m mode each chunk independently fails with frag_fail_prob and is
    retried as 512 4KB pages, modeling large-page allocation under
    fragmentation. A failure probability of 1.0 therefore produces the exact
    4KB layout.
    """
    size = workload.footprint_bytes
    touching = workload.init_socket
    if scenario.page_size == "4k":
        if scenario.frag_fail_prob:
            raise ConfigMismatch("frag_fail_prob needs 2m page size")
        span = min(size, HUGE_PAGE_SIZE)
        for va in range(base, base + size, span):
            space.map(va, min(span, base + size - va), writable=True,
                      touching_socket=touching, page_size="4k")
        return
    if size % HUGE_PAGE_SIZE:
        raise ConfigMismatch("2m mode needs a 2MB-aligned footprint")
    rng = Random(f"{workload.seed}:frag")
    p = scenario.frag_fail_prob
    for va in range(base, base + size, HUGE_PAGE_SIZE):
        fell_back = p > 0.0 and rng.random() < p
        if fell_back:
            space.map(va, HUGE_PAGE_SIZE, writable=True,
                      touching_socket=touching, page_size="4k")
        else:
            space.map(va, HUGE_PAGE_SIZE, writable=True,
                      touching_socket=touching, page_size="2m")


def move_data_frames(machine: Machine, space: AddressSpace,
                     from_socket: int, to_socket: int) -> int:
    """Instantly migrate every data frame on `from_socket` to `to_socket`.

    Rewrites the affected leaf entries in every table copy and flushes the
    attached TLBs. Returns the number of leaf entries moved.
    """
    moved = 0
    fixed_to = AllocPolicy.fixed(to_socket)
    for va, node, idx, value in list(space.iter_leaf_entries()):
        frame = pte_frame(value)
        if machine.socket_of(frame) != from_socket:
            continue
        if value & H_BIT:
            new_frames = machine.allocate_region(
                512, FrameKind.DATA, fixed_to, to_socket)
            new_base = new_frames[0].frame_number
            space.write_pte(node, idx,
                            (value & ((1 << FRAME_SHIFT) - 1)) | (new_base << FRAME_SHIFT))
            for f in range(frame, frame + 512):
                machine.free_frame(f)
        else:
            new = machine.allocate_on(FrameKind.DATA, to_socket)
            space.write_pte(node, idx,
                            (value & ((1 << FRAME_SHIFT) - 1)) | (new.frame_number << FRAME_SHIFT))
            machine.free_frame(frame)
        moved += 1
    space.flush_engines()
    return moved


def run_scenario(machine: Machine, scenario: ScenarioConfig,
                 workload: WorkloadSpec, policy_engine: PolicyEngine | None = None,
                 base: int = DEFAULT_BASE) -> RunStats:
    """Execute init phase, optional migration event, and access phase."""
    stats, _space = run_scenario_full(machine, scenario, workload,
                                      policy_engine, base)
    return stats


def run_scenario_full(machine: Machine, scenario: ScenarioConfig,
                      workload: WorkloadSpec,
                      policy_engine: PolicyEngine | None = None,
                      base: int = DEFAULT_BASE) -> tuple[RunStats, AddressSpace]:
    """run_scenario, but also hands back the address space for inspection."""
    _validate(machine, scenario, workload)
    pengine = policy_engine or PolicyEngine()
    space = build_space(machine, scenario, workload, policy_engine=policy_engine)

    pte_caches: dict[int, PTECachelineCache] = {}

    def cache_for(socket: int):
        if scenario.tlb.pte_cacheline_cache <= 0:
            return None
        if socket not in pte_caches:
            pte_caches[socket] = PTECachelineCache(
                scenario.tlb.pte_cacheline_cache, scenario.tlb.pte_cacheline_latency)
        return pte_caches[socket]

    threads = [_Thread(tid, sock) for tid, sock in workload.threads]
    pages = workload.footprint_bytes // PAGE_SIZE
    for th in threads:
        th.engine = TranslationEngine(machine, space, th.socket, scenario.tlb,
                                      pte_cache=cache_for(th.socket))
        th.pages = access_pattern(workload.pattern, pages,
                                  Random(f"{workload.seed}:t{th.tid}"))
        th.writes = Random(f"{workload.seed}:w{th.tid}")

    # -- init phase: map + first-touch from the init socket
    map_footprint(machine, space, workload, scenario, base)
    init_thread = next((t for t in threads if t.socket == workload.init_socket), None)
    if init_thread is not None:
        init_engine = init_thread.engine
    else:
        init_engine = TranslationEngine(machine, space, workload.init_socket,
                                        scenario.tlb,
                                        pte_cache=cache_for(workload.init_socket))
    compute = scenario.compute_cost
    init_cycles = 0
    for page in range(pages):
        res = init_engine.translate(base + page * PAGE_SIZE, is_write=True)
        init_cycles += compute + res.walk_cycles + machine.access_cost(
            workload.init_socket, res.data_frame)

    # steady-state leaf locality is measured over the access phase only
    leaf_baseline = {
        id(t.engine): (t.engine.stats["leaf_local"], t.engine.stats["leaf_remote"])
        for t in threads
    }

    # -- access phase
    ev = scenario.migration_event
    mig_time = ev[0] if ev else None
    for s in scenario.interference_sockets:
        machine.set_latency_multiplier(s, scenario.interference_factor)
    try:
        n_threads = len(threads)
        for i in range(workload.accesses):
            if mig_time is not None and i == mig_time:
                _migration_event(machine, space, threads, ev, scenario, pengine)
                mig_time = None
            th = threads[i % n_threads]
            vaddr = base + next(th.pages) * PAGE_SIZE
            is_write = th.writes.random() < workload.write_ratio
            res = th.engine.translate(vaddr, is_write)
            th.cycles += compute + res.walk_cycles + machine.access_cost(
                th.socket, res.data_frame)
        if mig_time is not None and workload.accesses == mig_time:
            _migration_event(machine, space, threads, ev, scenario, pengine)
    finally:
        machine.clear_latency_multipliers()

    engines = [t.engine for t in threads]
    if init_thread is None:
        engines.append(init_engine)
    return _collect_stats(machine, space, engines, threads, init_cycles,
                          leaf_baseline), space


def _migration_event(machine, space, threads, ev, scenario, pengine) -> None:
    _, frm, to = ev
    move_data_frames(machine, space, frm, to)
    pengine.on_process_migration(space, frm, to,
                                 mitosis_enabled=scenario.mitosis_kind() == "migrate")
    for th in threads:
        if th.socket == frm:
            th.socket = to
            pengine.on_context_switch(space, to, th.engine)


def _validate(machine: Machine, scenario: ScenarioConfig,
              workload: WorkloadSpec) -> None:
    if scenario.page_size not in ("4k", "2m"):
        raise ConfigMismatch(f"bad page size {scenario.page_size!r}")
    capacity = machine.config.frames_per_socket * machine.socket_count * PAGE_SIZE
    if workload.footprint_bytes > capacity:
        raise ConfigMismatch("footprint exceeds machine capacity")
    for s in scenario.interference_sockets:
        if not 0 <= s < machine.socket_count:
            raise ConfigMismatch(f"interference socket {s} outside machine")
    if scenario.migration_event is not None:
        t, frm, to = scenario.migration_event
        if t < 0 or not (0 <= frm < machine.socket_count) \
                or not (0 <= to < machine.socket_count):
            raise ConfigMismatch("bad migration event")
    for _, s in workload.threads:
        if not 0 <= s < machine.socket_count:
            raise ConfigMismatch(f"thread socket {s} outside machine")
    if not 0 <= workload.init_socket < machine.socket_count:
        raise ConfigMismatch("init socket outside machine")
    if not 0.0 <= scenario.frag_fail_prob <= 1.0:
        raise ConfigMismatch("frag_fail_prob must be in [0, 1]")
    scenario.mitosis_kind()  # raises on nonsense


def _collect_stats(machine, space, engines, threads, init_cycles,
                   leaf_baseline=None) -> RunStats:
    leaf_baseline = leaf_baseline or {}
    walk_cycles = sum(e.stats["walk_cycles"] for e in engines)
    tlb_hits = sum(e.stats["tlb_hits"] for e in engines)
    tlb_misses = sum(e.stats["tlb_misses"] for e in engines)
    local = sum(e.stats["local_accesses"] for e in engines)
    remote = sum(e.stats["remote_accesses"] for e in engines)
    total = init_cycles + sum(t.cycles for t in threads)
    per_socket = []
    for s in range(machine.socket_count):
        ll = lr = 0
        for e in engines:
            if e.core_socket != s:
                continue
            base_ll, base_lr = leaf_baseline.get(id(e), (0, 0))
            ll += e.stats["leaf_local"] - base_ll
            lr += e.stats["leaf_remote"] - base_lr
        per_socket.append(100.0 * lr / (ll + lr) if ll + lr else 0.0)
    return RunStats(
        total_cycles=total,
        init_cycles=init_cycles,
        walk_cycles=walk_cycles,
        walk_fraction=walk_cycles / total if total else 0.0,
        remote_leaf_pct=tuple(per_socket),
        pt_frames=machine.frames_with_kind(FrameKind.PAGETABLE),
        data_frames=machine.frames_with_kind(FrameKind.DATA),
        tlb_hits=tlb_hits,
        tlb_misses=tlb_misses,
        local_walk_accesses=local,
        remote_walk_accesses=remote,
    )


def run_multisocket(machine: Machine, data_policy: str, pt_policy: str,
                    mitosis_mask, workload: WorkloadSpec,
                    page_size: str = "4k", tlb: TLBConfig | None = None,
                    policy_engine: PolicyEngine | None = None) -> RunStats:
    """Multi-socket run: threads span sockets, no migration event.

    With a full mitosis_mask every page walk is local on every socket.
    """
    if mitosis_mask:
        mitosis = "replicate:" + "+".join(str(s) for s in sorted(mitosis_mask))
    else:
        mitosis = "off"
    scenario = ScenarioConfig(
        name="multisocket",
        page_size=page_size,
        mitosis=mitosis,
        data_policy=data_policy,
        pt_policy=pt_policy,
        tlb=tlb or TLBConfig(),
    )
    return run_scenario(machine, scenario, workload, policy_engine=policy_engine)


def apply_fragmentation(scenario: ScenarioConfig, frag_fail_prob: float) -> ScenarioConfig:
    """Return the scenario with 2MB allocations failing at the given rate."""
    if scenario.page_size != "2m":
        raise ConfigMismatch("fragmentation applies to 2m mode only")
    if not 0.0 <= frag_fail_prob <= 1.0:
        raise ValueError("frag_fail_prob must be in [0, 1]")
    return dataclasses.replace(scenario, frag_fail_prob=frag_fail_prob)
