"""Per-core translation hardware: two-level TLB, paging-structure caches, and
the hardware page walker with cycle and locality accounting.

One engine models one core. A TLB hit translates for free; a miss walks the
radix table belonging to the core's socket (the socket-local replica root when
one exists), consulting the paging-structure caches top-down so the walk can
start below the deepest cached level. Every touched page-table node is charged
the machine's access cost and the walker sets the accessed bit (plus dirty on
writes, leaf only) on the copy it walked, and only on that copy.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

from .machine import Machine
from .pagetable import (
    A_BIT, D_BIT, ENTRIES, H_BIT, P_BIT, PAGE_SHIFT,
    AddressSpace, PageFault, pte_frame,
)


@dataclass(frozen=True)
class TLBConfig:
    """Translation hardware sizing. Both TLB levels are fully associative LRU;
    the L2 acts as a victim cache for L1 evictions."""

    l1_entries: int = 64
    l2_entries: int = 1024
    psc_entries_per_level: int = 32
    pte_cacheline_cache: int = 0      # per-socket leaf-line cache; 0 disables
    pte_cacheline_latency: int = 100

    def __post_init__(self) -> None:
        if self.l1_entries <= 0 or self.l2_entries <= 0:
            raise ValueError("TLB levels need at least one entry")
        if self.l1_entries > self.l2_entries:
            raise ValueError("L1 must not exceed L2")


@dataclass
class WalkResult:
    """One hardware walk: per-level accesses as (level, node socket, local)."""

    cycles: int
    accesses: list[tuple[int, int, bool]]
    leaf_socket: int
    hit_level: int | None


@dataclass
class TranslateResult:
    data_frame: int
    tlb_hit: bool
    walk: WalkResult | None

    @property
    def walk_cycles(self) -> int:
        return self.walk.cycles if self.walk is not None else 0


class PTECachelineCache:
    """Optional model of leaf PTE lines surviving in a socket's last-level
    cache. When a leaf line is present, the walker pays a fixed reduced cost
    instead of a memory access. Shared by all engines on one socket."""

    def __init__(self, capacity: int, latency: int) -> None:
        self.capacity = capacity
        self.latency = latency
        self._lines: OrderedDict[int, None] = OrderedDict()

    def lookup(self, line: int) -> bool:
        if line in self._lines:
            self._lines.move_to_end(line)
            return True
        self._lines[line] = None
        if len(self._lines) > self.capacity:
            self._lines.popitem(last=False)
        return False

    def flush(self) -> None:
        self._lines.clear()


class TranslationEngine:
    """Translation state and statistics for one simulated core."""

    def __init__(
        self,
        machine: Machine,
        space: AddressSpace,
        core_socket: int,
        config: TLBConfig | None = None,
        pte_cache: PTECachelineCache | None = None,
    ) -> None:
        self.machine = machine
        self.space = space
        self.core_socket = core_socket
        self.config = config or TLBConfig()
        self.pte_cache = pte_cache
        # key: (vpn << 1) for 4KB pages, (vpn2m << 1) | 1 for 2MB pages
        self._l1: OrderedDict[int, tuple] = OrderedDict()
        self._l2: OrderedDict[int, tuple] = OrderedDict()
        self._psc = {2: OrderedDict(), 3: OrderedDict(), 4: OrderedDict()}
        self.stats = {
            "walks": 0,
            "walk_cycles": 0,
            "local_accesses": 0,
            "remote_accesses": 0,
            "tlb_hits": 0,
            "tlb_misses": 0,
            "leaf_local": 0,
            "leaf_remote": 0,
        }
        space.attach_engine(self)

    # -- TLB / PSC plumbing -------------------------------------------------

    def flush(self) -> None:
        """Drop all cached translations and paging-structure entries."""
        self._l1.clear()
        self._l2.clear()
        for od in self._psc.values():
            od.clear()

    def set_socket(self, socket: int) -> None:
        """Move this core's context to another socket (flushes everything)."""
        self.core_socket = socket
        self.flush()

    def _tlb_lookup(self, vaddr: int):
        key = (vaddr >> PAGE_SHIFT) << 1
        hkey = ((vaddr >> 21) << 1) | 1
        for k in (key, hkey):
            entry = self._l1.get(k)
            if entry is not None:
                self._l1.move_to_end(k)
                return k, entry
            entry = self._l2.get(k)
            if entry is not None:
                del self._l2[k]
                self._tlb_insert(k, entry)
                return k, entry
        return None, None

    def _tlb_insert(self, key: int, entry: tuple) -> None:
        self._l1[key] = entry
        self._l1.move_to_end(key)
        if len(self._l1) > self.config.l1_entries:
            vk, ve = self._l1.popitem(last=False)
            self._l2[vk] = ve
            if len(self._l2) > self.config.l2_entries:
                self._l2.popitem(last=False)

    def _psc_insert(self, level: int, prefix: int, frame: int) -> None:
        od = self._psc[level]
        od[prefix] = frame
        od.move_to_end(prefix)
        if len(od) > self.config.psc_entries_per_level:
            od.popitem(last=False)

    # -- translation ----------------------------------------------------------

    def translate(self, vaddr: int, is_write: bool = False) -> TranslateResult:
        """Translate one access, charging walk cycles on a TLB miss.

        Raises PageFault if the address is unmapped. A write that hits a
        not-yet-dirty TLB entry sets the dirty bit on the leaf copy the entry
        was walked from, mirroring the hardware dirty-update on real MMUs.
        """
        key, entry = self._tlb_lookup(vaddr)
        if entry is not None:
            self.stats["tlb_hits"] += 1
            data_frame, leaf_frame, leaf_idx, huge, dirty_known = entry
            if is_write and not dirty_known:
                node = self.space.nodes[leaf_frame]
                node.entries[leaf_idx] |= A_BIT | D_BIT
                self._l1[key] = (data_frame, leaf_frame, leaf_idx, huge, True)
            if huge:
                data_frame += (vaddr >> PAGE_SHIFT) & (ENTRIES - 1)
            return TranslateResult(data_frame, True, None)

        self.stats["tlb_misses"] += 1
        walk, data_frame, leaf_frame, leaf_idx, huge = self._walk(vaddr, is_write)
        tkey = (((vaddr >> 21) << 1) | 1) if huge else ((vaddr >> PAGE_SHIFT) << 1)
        self._tlb_insert(tkey, (data_frame, leaf_frame, leaf_idx, huge, is_write))
        out_frame = data_frame
        if huge:
            out_frame += (vaddr >> PAGE_SHIFT) & (ENTRIES - 1)
        return TranslateResult(out_frame, False, walk)

    def _walk(self, vaddr: int, is_write: bool):
        space = self.space
        core = self.core_socket
        # deepest PSC hit first: a level-2 hit leaves only the leaf access
        hit_level = None
        node_frame = None
        for lvl in (2, 3, 4):
            cached = self._psc[lvl].get(vaddr >> (PAGE_SHIFT + 9 * (lvl - 1)))
            if cached is not None:
                self._psc[lvl].move_to_end(vaddr >> (PAGE_SHIFT + 9 * (lvl - 1)))
                hit_level = lvl
                node_frame = cached
                break
        if node_frame is None:
            level = 4
            node_frame = space.roots[core]
        else:
            level = hit_level - 1

        accesses = []
        cycles = 0
        stats = self.stats
        nodes = space.nodes
        machine = self.machine
        while True:
            node = nodes[node_frame]
            idx = (vaddr >> (PAGE_SHIFT + 9 * (level - 1))) & (ENTRIES - 1)
            value = int(node.entries[idx])
            local = node.socket == core
            is_leaf = value & P_BIT and (level == 1 or value & H_BIT)
            if is_leaf and self.pte_cache is not None and self.pte_cache.lookup(
                (node_frame << 6) | (idx >> 3)
            ):
                cost = self.pte_cache.latency
            else:
                cost = machine.access_cost(core, node_frame)
            cycles += cost
            accesses.append((level, node.socket, local))
            if local:
                stats["local_accesses"] += 1
            else:
                stats["remote_accesses"] += 1
            if not value & P_BIT:
                stats["walks"] += 1
                stats["walk_cycles"] += cycles
                raise PageFault(level)
            if is_leaf:
                if local:
                    stats["leaf_local"] += 1
                else:
                    stats["leaf_remote"] += 1
                bits = A_BIT | D_BIT if is_write else A_BIT
                if (value & bits) != bits:
                    node.entries[idx] = value | bits
                stats["walks"] += 1
                stats["walk_cycles"] += cycles
                walk = WalkResult(cycles, accesses, node.socket, hit_level)
                return walk, pte_frame(value), node_frame, idx, bool(value & H_BIT)
            if not value & A_BIT:
                node.entries[idx] = value | A_BIT
            child = pte_frame(value)
            self._psc_insert(level, vaddr >> (PAGE_SHIFT + 9 * (level - 1)), child)
            node_frame = child
            level -= 1

    # -- statistics -------------------------------------------------------------

    def walk_stats(self) -> dict:
        """Cumulative counters plus the derived remote fraction."""
        s = dict(self.stats)
        total = s["local_accesses"] + s["remote_accesses"]
        s["remote_fraction"] = s["remote_accesses"] / total if total else 0.0
        leaf = s["leaf_local"] + s["leaf_remote"]
        s["leaf_remote_fraction"] = s["leaf_remote"] / leaf if leaf else 0.0
        return s


def flush_tlb(target) -> None:
    """Flush one engine, or every engine attached to an address space."""
    if isinstance(target, TranslationEngine):
        target.flush()
    else:
        target.flush_engines()
