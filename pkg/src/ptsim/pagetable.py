"""Replicated four-level radix page-table.

Every logical page-table page may exist as several physical copies, one per
socket in the address space's replication mask. The copies of one logical page
are linked in a circular ring (``ring_next``), which lets a write to one entry
reach every copy in R pointer chases plus R writes instead of R full table
walks. Upper-level entries differ between copies: each copy points at the
child copy living on its own socket, while leaf entries (which name data
frames) are identical everywhere. Accessed/dirty bits are set by the simulated
page walker on whichever copy it walked and are read back as the OR across the
ring.

Address spaces come in two placement modes:

* native (single-socket mask, not strict): page-table pages are placed by the
  space's pt_policy, exactly like a stock kernel with first-touch or
  interleaved allocation. This is the baseline whose placement skew the
  analyzer measures.
* strict/replicated: each logical page has one copy per mask socket, each copy
  allocated strictly on its socket (drawing from that socket's page-cache
  first).

Mutations to one address space are serialized (one lock, mirroring a kernel
page-table lock); reads like software_walk and snapshot_dump may run
concurrently with each other but not with mutations. The simulated hardware
walker bypasses the lock when setting accessed/dirty bits, as real hardware
does.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .machine import AllocPolicy, FrameKind, Machine, OutOfMemory

PAGE_SHIFT = 12
PAGE_SIZE = 1 << PAGE_SHIFT
ENTRIES = 512
HUGE_PAGE_SIZE = PAGE_SIZE * ENTRIES  # 2MB, one level-2 leaf
TOP_LEVEL = 4

# packed PTE bit layout
P_BIT = 1        # present
W_BIT = 2        # writable
H_BIT = 4        # huge leaf (level 2 only)
A_BIT = 8        # accessed
D_BIT = 16       # dirty
FRAME_SHIFT = 5


def level_index(level: int, vaddr: int) -> int:
    """Index into the 512-entry node at `level` for `vaddr`."""
    return (vaddr >> (PAGE_SHIFT + 9 * (level - 1))) & (ENTRIES - 1)


def entry_span(level: int) -> int:
    """Bytes covered by one entry at `level` (4KB at L1, 2MB at L2, ...)."""
    return 1 << (PAGE_SHIFT + 9 * (level - 1))


def pte_frame(value: int) -> int:
    return value >> FRAME_SHIFT


class PageFault(Exception):
    """A walk hit a non-present entry; `level` is where it faulted."""

    def __init__(self, level: int) -> None:
        super().__init__(f"page fault at level {level}")
        self.level = level


class AlreadyMapped(Exception):
    pass


class NotMapped(Exception):
    pass


@dataclass
class PTE:
    """Unpacked page-table entry. present=0 means every other field is ignored."""

    present: bool = False
    frame: int = 0
    writable: bool = False
    huge: bool = False
    accessed: bool = False
    dirty: bool = False

    def __post_init__(self) -> None:
        if self.dirty and not self.accessed:
            raise ValueError("hardware sets accessed before dirty")

    def to_int(self) -> int:
        if not self.present:
            return 0
        v = P_BIT | (self.frame << FRAME_SHIFT)
        if self.writable:
            v |= W_BIT
        if self.huge:
            v |= H_BIT
        if self.accessed:
            v |= A_BIT
        if self.dirty:
            v |= D_BIT
        return v

    @classmethod
    def from_int(cls, value: int) -> "PTE":
        if not value & P_BIT:
            return cls()
        return cls(
            present=True,
            frame=value >> FRAME_SHIFT,
            writable=bool(value & W_BIT),
            huge=bool(value & H_BIT),
            accessed=bool(value & A_BIT),
            dirty=bool(value & D_BIT),
        )


@dataclass
class WriteLog:
    """Memory-reference accounting for page-table update operations.

    pte_writes counts entry stores (one per ring copy), ring_reads counts
    ring-pointer chases, walk_reads counts the read half of read-modify-write
    updates.
    """

    pte_writes: int = 0
    ring_reads: int = 0
    walk_reads: int = 0

    def merge(self, other: "WriteLog") -> "WriteLog":
        self.pte_writes += other.pte_writes
        self.ring_reads += other.ring_reads
        self.walk_reads += other.walk_reads
        return self

    @property
    def total_references(self) -> int:
        return self.pte_writes + self.ring_reads + self.walk_reads


class PageTableNode:
    """One physical page-table page: 512 packed entries plus ring metadata.

    home_socket tags which replica tree the node belongs to; for native tables
    it is the primary socket regardless of where the frame physically lives.
    """

    __slots__ = ("level", "frame", "socket", "home_socket", "ring_next",
                 "entries", "present_count")

    def __init__(self, level: int, frame: int, socket: int, home_socket: int) -> None:
        self.level = level
        self.frame = frame
        self.socket = socket
        self.home_socket = home_socket
        self.ring_next = frame  # self-ring until linked
        self.entries = np.zeros(ENTRIES, dtype=np.int64)
        self.present_count = 0

    def write_entry(self, index: int, value: int) -> None:
        old = int(self.entries[index])
        self.entries[index] = value
        self.present_count += (value & P_BIT) - (old & P_BIT)


@dataclass
class WalkTrace:
    """Result of a software page-table walk from one socket's root."""

    accesses: list[tuple[int, int, int]]  # (level, node frame, node socket)
    leaf_frame: int
    leaf_level: int
    writable: bool
    huge: bool


class AddressSpace:
    """A process address space backed by a (possibly replicated) radix table."""

    def __init__(
        self,
        machine: Machine,
        pt_policy: AllocPolicy,
        data_policy: AllocPolicy,
        replication_mask: frozenset[int],
        page_size_mode: str = "4k",
        strict: bool | None = None,
        policy_engine=None,
    ) -> None:
        if not replication_mask:
            raise ValueError("replication mask must not be empty")
        if any(not 0 <= s < machine.socket_count for s in replication_mask):
            raise ValueError("replication mask names a socket outside the machine")
        if page_size_mode not in ("4k", "2m"):
            raise ValueError("page_size_mode must be '4k' or '2m'")
        self.machine = machine
        self.pt_policy = pt_policy
        self.data_policy = data_policy
        self.page_size_mode = page_size_mode
        self.policy_engine = policy_engine
        if policy_engine is not None:
            replication_mask = policy_engine.effective_mask(
                replication_mask, min(replication_mask), machine.socket_count
            )
        self.replication_mask = frozenset(replication_mask)
        self.primary = min(self.replication_mask)
        # strict placement: one copy per mask socket, each on its own socket
        self.strict = len(self.replication_mask) > 1 if strict is None else strict
        self.nodes: dict[int, PageTableNode] = {}
        self._engines: list = []
        self._lock = threading.Lock()

        roots_by_socket = {}
        ring = []
        for s in sorted(self.replication_mask):
            node = self._alloc_node(TOP_LEVEL, home_socket=s, strict_socket=s)
            roots_by_socket[s] = node
            ring.append(node)
        self._link_ring(ring)
        self.roots: list[int] = [
            roots_by_socket.get(s, roots_by_socket[self.primary]).frame
            for s in range(machine.socket_count)
        ]

    # convenience mirroring the operation-style API
    @classmethod
    def create(
        cls,
        machine: Machine,
        pt_policy: AllocPolicy,
        data_policy: AllocPolicy,
        replication_mask,
        page_size_mode: str = "4k",
        strict: bool | None = None,
        policy_engine=None,
    ) -> "AddressSpace":
        return cls(
            machine, pt_policy, data_policy, frozenset(replication_mask),
            page_size_mode, strict, policy_engine,
        )

    # -- TLB coordination ---------------------------------------------------

    def attach_engine(self, engine) -> None:
        """Register a translation engine whose TLB must see table changes."""
        self._engines.append(engine)

    def flush_engines(self) -> None:
        for e in self._engines:
            e.flush()

    # -- node plumbing ------------------------------------------------------

    def _alloc_node(
        self, level: int, home_socket: int,
        strict_socket: int | None = None, touching: int | None = None,
    ) -> PageTableNode:
        override = None
        if self.policy_engine is not None:
            override = self.policy_engine.pt_socket_override()
        if override is not None:
            frame = self.machine.allocate_on(FrameKind.PAGETABLE, override)
        elif strict_socket is not None:
            frame = self.machine.allocate_on(FrameKind.PAGETABLE, strict_socket)
        else:
            frame = self.machine.allocate_frame(
                FrameKind.PAGETABLE, self.pt_policy,
                touching if touching is not None else home_socket,
            )
        node = PageTableNode(level, frame.frame_number, frame.socket, home_socket)
        self.nodes[node.frame] = node
        return node

    @staticmethod
    def _link_ring(members: list[PageTableNode]) -> None:
        members = sorted(members, key=lambda n: n.home_socket)
        for i, node in enumerate(members):
            node.ring_next = members[(i + 1) % len(members)].frame

    def _ring_members(self, node: PageTableNode) -> list[PageTableNode]:
        """Follow ring_next all the way around. Cost: one read per member."""
        members = [node]
        f = node.ring_next
        while f != node.frame:
            nxt = self.nodes[f]
            members.append(nxt)
            f = nxt.ring_next
        return members

    def _alloc_node_ring(self, level: int, touching: int) -> PageTableNode:
        """Allocate one logical node: a full ring when strict, else one page."""
        if not self.strict:
            return self._alloc_node(level, self.primary, touching=touching)
        ring = [
            self._alloc_node(level, home_socket=s, strict_socket=s)
            for s in sorted(self.replication_mask)
        ]
        self._link_ring(ring)
        return next(n for n in ring if n.home_socket == self.primary)

    def _member_for(self, node: PageTableNode, home: int) -> PageTableNode:
        for m in self._ring_members(node):
            if m.home_socket == home:
                return m
        raise KeyError(f"ring of frame {node.frame} has no copy for socket {home}")

    # -- core write path ----------------------------------------------------

    def write_pte(self, node: PageTableNode | int, index: int, pte: PTE | int) -> WriteLog:
        """Write one entry through the interception layer: all copies updated.

        For non-leaf entries the frame field is rewritten per copy so each copy
        points at its own socket's child; leaf frames are copied verbatim.
        Finding the matching child copy uses frame-metadata arithmetic, not
        table walks, so the accounting is exactly R writes + R ring reads.
        """
        if isinstance(node, int):
            node = self.nodes[node]
        if not 0 <= index < ENTRIES:
            raise ValueError("entry index out of range")
        value = pte.to_int() if isinstance(pte, PTE) else int(pte)
        log = WriteLog()
        members = self._ring_members(node)
        log.ring_reads += len(members)
        child_by_home = None
        if value & P_BIT and node.level > 1 and not value & H_BIT:
            child = self.nodes[pte_frame(value)]
            child_by_home = {m.home_socket: m for m in self._ring_members(child)}
        flags = value & ((1 << FRAME_SHIFT) - 1)
        for m in members:
            if child_by_home is not None:
                v = flags | (child_by_home[m.home_socket].frame << FRAME_SHIFT)
            else:
                v = value
            m.write_entry(index, v)
            log.pte_writes += 1
        return log

    # -- range helpers ------------------------------------------------------

    def _check_range(self, vaddr: int, size: int, unit: int) -> None:
        if size <= 0:
            raise ValueError("size must be positive")
        if vaddr % unit or size % unit:
            raise ValueError(f"range not aligned to {unit:#x}")

    def _leaf_lookup(self, vaddr: int):
        """Walk the primary tree; returns (node, index, value) at the leaf."""
        node = self.nodes[self.roots[self.primary]]
        level = TOP_LEVEL
        while True:
            idx = level_index(level, vaddr)
            value = int(node.entries[idx])
            if not value & P_BIT:
                raise PageFault(level)
            if level == 1 or (level == 2 and value & H_BIT):
                return node, idx, value
            node = self.nodes[pte_frame(value)]
            level -= 1

    def _range_mapping_state(self, vaddr: int, size: int) -> str:
        """Classify [vaddr, vaddr+size) as 'empty', 'full', or 'partial'."""
        end = vaddr + size
        seen_mapped = seen_unmapped = False
        va = vaddr
        while va < end and not (seen_mapped and seen_unmapped):
            node = self.nodes[self.roots[self.primary]]
            level = TOP_LEVEL
            while True:
                idx = level_index(level, va)
                value = int(node.entries[idx])
                if not value & P_BIT:
                    seen_unmapped = True
                    va += entry_span(level) - (va % entry_span(level))
                    break
                if level == 1 or (level == 2 and value & H_BIT):
                    seen_mapped = True
                    va += entry_span(level) - (va % entry_span(level))
                    break
                node = self.nodes[pte_frame(value)]
                level -= 1
        if seen_mapped and seen_unmapped:
            return "partial"
        return "full" if seen_mapped else "empty"

    # -- map / unmap / protect ----------------------------------------------

    def map(
        self,
        vaddr: int,
        size: int,
        writable: bool = True,
        touching_socket: int = 0,
        page_size: str | None = None,
    ) -> WriteLog:
        """Map [vaddr, vaddr+size) with freshly allocated data frames.

        Page-table pages appear on demand; data frames are allocated once via
        data_policy (they are shared by all table copies). On OutOfMemory the
        already-mapped prefix stays mapped, like a partially failed mmap.
        """
        mode = page_size or self.page_size_mode
        huge = mode == "2m"
        unit = HUGE_PAGE_SIZE if huge else PAGE_SIZE
        self._check_range(vaddr, size, unit)
        if self._range_mapping_state(vaddr, size) != "empty":
            raise AlreadyMapped(f"range {vaddr:#x}+{size:#x} overlaps a mapping")
        leaf_level = 2 if huge else 1
        log = WriteLog()
        with self._lock:
            path: dict[int, PageTableNode] = {TOP_LEVEL: self.nodes[self.roots[self.primary]]}
            prefix: dict[int, int] = {}
            for va in range(vaddr, vaddr + size, unit):
                level = TOP_LEVEL
                while level > leaf_level:
                    pfx = va >> (PAGE_SHIFT + 9 * (level - 1))
                    if prefix.get(level) != pfx:
                        parent = path[level]
                        idx = level_index(level, va)
                        value = int(parent.entries[idx])
                        if value & P_BIT:
                            child = self.nodes[pte_frame(value)]
                        else:
                            child = self._alloc_node_ring(level - 1, touching_socket)
                            log.merge(self.write_pte(
                                parent, idx,
                                P_BIT | W_BIT | (child.frame << FRAME_SHIFT),
                            ))
                        path[level - 1] = child
                        prefix[level] = pfx
                        # deeper cached prefixes are stale now
                        for lower in range(level - 1, leaf_level, -1):
                            prefix.pop(lower, None)
                    level -= 1
                leaf = path[leaf_level]
                idx = level_index(leaf_level, va)
                if huge:
                    frames = self.machine.allocate_region(
                        ENTRIES, FrameKind.DATA, self.data_policy, touching_socket
                    )
                    data_frame = frames[0].frame_number
                else:
                    data_frame = self.machine.allocate_frame(
                        FrameKind.DATA, self.data_policy, touching_socket
                    ).frame_number
                v = P_BIT | (data_frame << FRAME_SHIFT)
                if writable:
                    v |= W_BIT
                if huge:
                    v |= H_BIT
                log.merge(self.write_pte(leaf, idx, v))
        return log

    def unmap(self, vaddr: int, size: int) -> WriteLog:
        """Clear the range in every copy, free data frames and emptied nodes."""
        self._check_range(vaddr, size, PAGE_SIZE)
        if self._range_mapping_state(vaddr, size) != "full":
            raise NotMapped(f"range {vaddr:#x}+{size:#x} is not fully mapped")
        log = WriteLog()
        end = vaddr + size
        with self._lock:
            va = vaddr
            while va < end:
                node, idx, value = self._leaf_lookup(va)
                span = entry_span(node.level)
                if va % span or end - va < span:
                    raise ValueError("unmap range splits a 2MB mapping")
                data_frame = pte_frame(value)
                log.merge(self.write_pte(node, idx, 0))
                if value & H_BIT:
                    for f in range(data_frame, data_frame + ENTRIES):
                        self.machine.free_frame(f)
                else:
                    self.machine.free_frame(data_frame)
                if node.present_count == 0:
                    log.merge(self._reap_empty(node, va))
                va += span
        self.flush_engines()
        return log

    def _reap_empty(self, node: PageTableNode, vaddr: int) -> WriteLog:
        """Free a now-empty logical node (whole ring) and unhook its parent
        entry, cascading upward. Roots are never reaped."""
        log = WriteLog()
        while node.level < TOP_LEVEL and node.present_count == 0:
            parent = self._parent_of(node, vaddr)
            idx = level_index(node.level + 1, vaddr)
            for m in self._ring_members(node):
                del self.nodes[m.frame]
                self.machine.free_frame(m.frame)
            log.merge(self.write_pte(parent, idx, 0))
            node = parent
        return log

    def _parent_of(self, node: PageTableNode, vaddr: int) -> PageTableNode:
        cur = self.nodes[self.roots[self.primary]]
        level = TOP_LEVEL
        while level > node.level + 1:
            cur = self.nodes[pte_frame(int(cur.entries[level_index(level, vaddr)]))]
            level -= 1
        return cur

    def protect(self, vaddr: int, size: int, writable: bool) -> WriteLog:
        """Read-modify-write the permission bits over a mapped range.

        Accessed/dirty bits are OR-merged across copies during the read so the
        rewrite cannot lose a bit another copy's walker set.
        """
        self._check_range(vaddr, size, PAGE_SIZE)
        if self._range_mapping_state(vaddr, size) != "full":
            raise NotMapped(f"range {vaddr:#x}+{size:#x} is not fully mapped")
        log = WriteLog()
        end = vaddr + size
        with self._lock:
            va = vaddr
            while va < end:
                node, idx, value = self._leaf_lookup(va)
                span = entry_span(node.level)
                log.walk_reads += 1
                merged = value
                for m in self._ring_members(node):
                    merged |= int(m.entries[idx]) & (A_BIT | D_BIT)
                new = (merged | W_BIT) if writable else (merged & ~W_BIT)
                log.merge(self.write_pte(node, idx, new))
                va += span
        self.flush_engines()
        return log

    # -- accessed / dirty ----------------------------------------------------

    def read_ad_bits(self, vaddr: int) -> tuple[int, int]:
        """OR of the leaf's accessed/dirty bits across all copies."""
        try:
            node, idx, _ = self._leaf_lookup(vaddr)
        except PageFault as exc:
            raise NotMapped(f"{vaddr:#x} is not mapped") from exc
        a = d = 0
        for m in self._ring_members(node):
            v = int(m.entries[idx])
            a |= (v & A_BIT) >> 3
            d |= (v & D_BIT) >> 4
        return a, d

    def accessed_at_level(self, vaddr: int, level: int) -> int:
        """OR of the accessed bit across copies of the entry at `level`."""
        node = self.nodes[self.roots[self.primary]]
        cur = TOP_LEVEL
        while cur > level:
            value = int(node.entries[level_index(cur, vaddr)])
            if not value & P_BIT:
                raise NotMapped(f"{vaddr:#x} has no level-{level} entry")
            node = self.nodes[pte_frame(value)]
            cur -= 1
        idx = level_index(level, vaddr)
        a = 0
        for m in self._ring_members(node):
            a |= (int(m.entries[idx]) & A_BIT) >> 3
        return a

    def clear_ad_bits(self, vaddr: int) -> None:
        """Reset accessed and dirty to zero in every copy of the leaf entry."""
        try:
            node, idx, _ = self._leaf_lookup(vaddr)
        except PageFault as exc:
            raise NotMapped(f"{vaddr:#x} is not mapped") from exc
        with self._lock:
            for m in self._ring_members(node):
                m.write_entry(idx, int(m.entries[idx]) & ~(A_BIT | D_BIT))
        self.flush_engines()

    # -- replication control --------------------------------------------------

    def set_replication_mask(self, new_mask) -> None:
        """Re-shape the replica set to `new_mask`.

        Newly masked sockets get a full strict copy of the table; copies on
        unmasked sockets are freed and rings are relinked. A single-socket
        mask restores native behavior. On OutOfMemory mid-build everything
        allocated so far is released and the table is left exactly as before.
        """
        new = frozenset(new_mask)
        if not new:
            raise ValueError("replication mask must not be empty")
        if any(not 0 <= s < self.machine.socket_count for s in new):
            raise ValueError("mask names a socket outside the machine")
        if self.policy_engine is not None:
            new = self.policy_engine.effective_mask(
                new, self.primary, self.machine.socket_count
            )
        if new == self.replication_mask:
            return
        with self._lock:
            self._reshape_mask(new)
        self.flush_engines()

    def _reshape_mask(self, new: frozenset[int]) -> None:
        old = self.replication_mask
        added = sorted(new - old)
        removed = sorted(old - new)
        primary_root = self.nodes[self.roots[self.primary]]

        # A native table scattered by pt_policy cannot serve as any socket's
        # local copy; rebuild it strictly so locality holds for every mask
        # socket after this call.
        rebuild = [
            s for s in sorted(new & old)
            if any(n.socket != s
                   for n in self._tree_nodes(self._member_for(primary_root, s)))
        ]

        clones: dict[int, dict[int, PageTableNode]] = {}
        allocated: list[PageTableNode] = []
        try:
            for s in added + rebuild:
                clones[s] = self._clone_tree(primary_root, s, allocated)
        except OutOfMemory:
            for node in allocated:
                del self.nodes[node.frame]
                self.machine.free_frame(node.frame)
            raise

        # Capture ring membership before any relinking; ring walks on a
        # half-rebuilt structure would not terminate.
        logical = self._logical_rings(primary_root)
        roots_by_socket = {}
        for s in sorted(new):
            if s in clones:
                roots_by_socket[s] = clones[s][primary_root.frame]
            else:
                roots_by_socket[s] = next(
                    m for m in logical[primary_root.frame] if m.home_socket == s
                )

        retire: list[PageTableNode] = []
        for logical_frame, ring in logical.items():
            members = []
            for m in ring:
                if m.home_socket in removed or m.home_socket in clones:
                    retire.append(m)
                else:
                    members.append(m)
            for tree in clones.values():
                members.append(tree[logical_frame])
            self._link_ring(members)

        for m in retire:
            del self.nodes[m.frame]
            self.machine.free_frame(m.frame)

        self.replication_mask = new
        self.primary = min(new)
        self.roots = [
            roots_by_socket.get(s, roots_by_socket[self.primary]).frame
            for s in range(self.machine.socket_count)
        ]
        self.strict = True

    def _tree_nodes(self, root: PageTableNode):
        stack = [root]
        while stack:
            node = stack.pop()
            yield node
            if node.level > 1:
                for idx in np.flatnonzero(node.entries & P_BIT):
                    v = int(node.entries[int(idx)])
                    if not v & H_BIT:
                        stack.append(self.nodes[pte_frame(v)])

    def _logical_rings(self, root: PageTableNode) -> dict[int, list[PageTableNode]]:
        """Map each logical node (keyed by its primary-tree frame) to its ring."""
        out = {}
        for node in self._tree_nodes(root):
            out[node.frame] = self._ring_members(node)
        return out

    def _clone_tree(
        self, node: PageTableNode, socket: int, allocated: list[PageTableNode]
    ) -> dict[int, PageTableNode]:
        """Deep-copy `node`'s tree strictly onto `socket`.

        Returns {source frame -> clone node}. Non-leaf entries in clones point
        at the clone of the child; leaf entries are copied verbatim. Rings are
        not touched here, so a failure can be rolled back trivially.
        """
        clones: dict[int, PageTableNode] = {}

        def clone(src: PageTableNode) -> PageTableNode:
            copy = self._alloc_node(src.level, home_socket=socket, strict_socket=socket)
            allocated.append(copy)
            clones[src.frame] = copy
            copy.entries[:] = src.entries
            copy.present_count = src.present_count
            if src.level > 1:
                for idx in np.flatnonzero(src.entries & P_BIT):
                    idx = int(idx)
                    v = int(src.entries[idx])
                    if not v & H_BIT:
                        child = clone(self.nodes[pte_frame(v)])
                        copy.entries[idx] = (v & ((1 << FRAME_SHIFT) - 1)) | (
                            child.frame << FRAME_SHIFT
                        )
            return copy

        clone(node)
        return clones

    def migrate_pagetable(self, from_socket: int, to_socket: int,
                          eager_free: bool = True) -> None:
        """Move the table from one socket to another via replicate-then-free.

        With eager_free the source copy is dropped immediately; otherwise both
        copies stay consistent in case the process migrates back.
        """
        if from_socket == to_socket:
            return
        if from_socket not in self.replication_mask:
            raise ValueError(f"socket {from_socket} holds no replica")
        if not 0 <= to_socket < self.machine.socket_count:
            raise ValueError("target socket outside machine")
        self.set_replication_mask(self.replication_mask | {to_socket})
        if eager_free:
            self.set_replication_mask(self.replication_mask - {from_socket})

    # -- reads ----------------------------------------------------------------

    def root_for_socket(self, socket: int) -> int:
        """Root frame a core on `socket` loads at context switch. O(1)."""
        return self.roots[socket]

    def software_walk(self, observer_socket: int, vaddr: int) -> WalkTrace:
        """Deterministic walk from `observer_socket`'s root.

        Used as the verification oracle and by the snapshot analyzer; performs
        no hardware side effects (no accessed/dirty updates, no caching).
        """
        if not 0 <= observer_socket < self.machine.socket_count:
            raise ValueError("observer socket outside machine")
        node = self.nodes[self.roots[observer_socket]]
        accesses = []
        level = TOP_LEVEL
        while True:
            accesses.append((level, node.frame, node.socket))
            value = int(node.entries[level_index(level, vaddr)])
            if not value & P_BIT:
                raise PageFault(level)
            if level == 1 or (level == 2 and value & H_BIT):
                base = pte_frame(value)
                if value & H_BIT:
                    base += (vaddr >> PAGE_SHIFT) & (ENTRIES - 1)
                return WalkTrace(
                    accesses=accesses,
                    leaf_frame=base,
                    leaf_level=level,
                    writable=bool(value & W_BIT),
                    huge=bool(value & H_BIT),
                )
            node = self.nodes[pte_frame(value)]
            level -= 1

    def iter_leaf_entries(self):
        """Yield (vaddr, node, index, value) for every mapped leaf entry of the
        primary tree, in ascending virtual-address order."""

        def rec(node: PageTableNode, va_base: int):
            span = entry_span(node.level)
            for idx in np.flatnonzero(node.entries & P_BIT):
                idx = int(idx)
                v = int(node.entries[idx])
                va = va_base + idx * span
                if node.level == 1 or v & H_BIT:
                    yield va, node, idx, v
                else:
                    yield from rec(self.nodes[pte_frame(v)], va)

        yield from rec(self.nodes[self.roots[self.primary]], 0)

    def pt_frame_count(self) -> int:
        return len(self.nodes)

    # -- snapshot ---------------------------------------------------------------

    def snapshot_dump(self):
        """Serialize every node of every replica tree plus the roots array."""
        from .snapshot import EntryRecord, NodeRecord, SnapshotDump

        records = []

        def rec(node: PageTableNode, replica: int):
            entries = []
            for idx in np.flatnonzero(node.entries & P_BIT):
                idx = int(idx)
                v = int(node.entries[idx])
                target = pte_frame(v)
                entries.append(EntryRecord(
                    i=idx,
                    frame=target,
                    socket=self.machine.socket_of(target),
                    p=1,
                    w=(v & W_BIT) >> 1,
                    h=(v & H_BIT) >> 2,
                    a=(v & A_BIT) >> 3,
                    d=(v & D_BIT) >> 4,
                ))
            records.append(NodeRecord(
                replica_socket=replica,
                level=node.level,
                frame=node.frame,
                socket=node.socket,
                entries=tuple(entries),
            ))
            if node.level > 1:
                for idx in np.flatnonzero(node.entries & P_BIT):
                    v = int(node.entries[int(idx)])
                    if not v & H_BIT:
                        rec(self.nodes[pte_frame(v)], replica)

        for s in sorted(self.replication_mask):
            rec(self.nodes[self.roots[s]], s)
        return SnapshotDump(roots=tuple(self.roots), nodes=tuple(records))


def create_address_space(
    machine: Machine,
    pt_policy: AllocPolicy,
    data_policy: AllocPolicy,
    replication_mask,
    page_size_mode: str = "4k",
    strict: bool | None = None,
    policy_engine=None,
) -> AddressSpace:
    """Operation-style constructor; see AddressSpace."""
    return AddressSpace.create(
        machine, pt_policy, data_policy, replication_mask,
        page_size_mode, strict, policy_engine,
    )
