"""Multi-socket NUMA machine model.

Physical frames live in per-socket pools with a contiguous frame-number range
per socket. Each socket additionally reserves a slice of frames (its
page-cache) for page-table allocations, so strict page-table placement cannot
fail while ordinary data memory is under pressure. Memory access cost is a
two-latency local/remote model with an optional per-socket contention
multiplier used to model interfering workloads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class FrameKind(Enum):
    FREE = "free"
    DATA = "data"
    PAGETABLE = "pagetable"


class OutOfMemory(Exception):
    """A strict allocation found no usable frame on its target socket."""

    def __init__(self, socket: int) -> None:
        super().__init__(f"socket {socket} cannot satisfy this allocation")
        self.socket = socket


class DoubleFree(Exception):
    """The frame being freed is already free."""


class PolicyKind(Enum):
    FIRST_TOUCH = "first-touch"
    INTERLEAVE = "interleave"
    FIXED = "fixed"


@dataclass
class AllocPolicy:
    """Frame placement policy.

    The interleave cursor lives on the policy instance, so every address space
    (or experiment) that owns its own policy object allocates reproducibly no
    matter what else runs on the machine.
    """

    kind: PolicyKind
    fixed_socket: int | None = None
    next_interleave_socket: int = 0

    def __post_init__(self) -> None:
        if self.kind is PolicyKind.FIXED and self.fixed_socket is None:
            raise ValueError("fixed policy needs a socket")

    @classmethod
    def first_touch(cls) -> "AllocPolicy":
        return cls(PolicyKind.FIRST_TOUCH)

    @classmethod
    def interleave(cls, start_socket: int = 0) -> "AllocPolicy":
        return cls(PolicyKind.INTERLEAVE, next_interleave_socket=start_socket)

    @classmethod
    def fixed(cls, socket: int) -> "AllocPolicy":
        return cls(PolicyKind.FIXED, fixed_socket=socket)

    @classmethod
    def parse(cls, text: str) -> "AllocPolicy":
        """Parse "first-touch", "interleave", or "fixed:N"."""
        if text == "first-touch":
            return cls.first_touch()
        if text == "interleave":
            return cls.interleave()
        if text.startswith("fixed:"):
            return cls.fixed(int(text.split(":", 1)[1]))
        raise ValueError(f"unknown allocation policy {text!r}")

    def target_socket(self, touching_socket: int, socket_count: int) -> int:
        """Pick the target socket for one allocation, advancing any cursor."""
        if self.kind is PolicyKind.FIRST_TOUCH:
            return touching_socket
        if self.kind is PolicyKind.FIXED:
            if self.fixed_socket >= socket_count:
                raise ValueError("fixed socket outside machine")
            return self.fixed_socket
        target = self.next_interleave_socket % socket_count
        self.next_interleave_socket = (target + 1) % socket_count
        return target


@dataclass(frozen=True)
class MachineConfig:
    """Machine shape and latency parameters.

    Defaults follow a four-socket server with ~280 cycle local and ~580 cycle
    remote memory latency. Bandwidth figures are informational only; contention
    is modeled as a latency multiplier, not a bandwidth model.
    """

    socket_count: int = 4
    frames_per_socket: int = 65536
    local_latency: int = 280
    remote_latency: int = 580
    local_bw: float = 28.0
    remote_bw: float = 11.0
    pagecache_reserve: int = 1024

    def __post_init__(self) -> None:
        if self.socket_count < 1:
            raise ValueError("need at least one socket")
        if not (self.frames_per_socket >= self.pagecache_reserve >= 0):
            raise ValueError("pagecache_reserve must fit in frames_per_socket")
        if not (self.remote_latency >= self.local_latency > 0):
            raise ValueError("latencies must satisfy remote >= local > 0")


@dataclass
class Frame:
    """View of one allocated physical frame."""

    frame_number: int
    socket: int
    kind: FrameKind


class _SocketPool:
    """Free-frame bookkeeping for one socket.

    Frames [base, base+reserve) seed the page-cache; the rest seed the general
    pool. Both sides use a high-water mark plus a freed stack so huge pools
    cost nothing until used. Page-table frees refill the page-cache first,
    until it is back at its reserve size.
    """

    __slots__ = (
        "base", "reserve", "total",
        "cache_next", "cache_freed", "pool_next", "pool_freed",
    )

    def __init__(self, base: int, total: int, reserve: int) -> None:
        self.base = base
        self.reserve = reserve
        self.total = total
        self.cache_next = base
        self.cache_freed: list[int] = []
        self.pool_next = base + reserve
        self.pool_freed: list[int] = []

    def cache_free_count(self) -> int:
        return (self.base + self.reserve - self.cache_next) + len(self.cache_freed)

    def pool_free_count(self) -> int:
        return (self.base + self.total - self.pool_next) + len(self.pool_freed)

    def take_cache(self) -> int | None:
        if self.cache_freed:
            return self.cache_freed.pop()
        if self.cache_next < self.base + self.reserve:
            n = self.cache_next
            self.cache_next += 1
            return n
        return None

    def take_pool(self) -> int | None:
        if self.pool_freed:
            return self.pool_freed.pop()
        if self.pool_next < self.base + self.total:
            n = self.pool_next
            self.pool_next += 1
            return n
        return None

    def take_contiguous(self, count: int) -> list[int] | None:
        # Contiguous runs come from the untouched high-water region only.
        if self.pool_next + count <= self.base + self.total:
            run = list(range(self.pool_next, self.pool_next + count))
            self.pool_next += count
            return run
        return None


class Machine:
    """The NUMA machine: frame pools, placement, and the access-cost function."""

    def __init__(self, config: MachineConfig | None = None) -> None:
        self.config = config or MachineConfig()
        c = self.config
        self._pools = [
            _SocketPool(s * c.frames_per_socket, c.frames_per_socket, c.pagecache_reserve)
            for s in range(c.socket_count)
        ]
        # kind of every allocated frame; free frames are simply absent
        self._kinds: dict[int, FrameKind] = {}
        self._latency_multiplier = [1.0] * c.socket_count

    # -- geometry ---------------------------------------------------------

    @property
    def socket_count(self) -> int:
        return self.config.socket_count

    def socket_of(self, frame_number: int) -> int:
        """Frame-number-to-socket mapping: contiguous ranges, fixed for life."""
        s = frame_number // self.config.frames_per_socket
        if not 0 <= s < self.config.socket_count:
            raise ValueError(f"frame {frame_number} outside machine")
        return s

    def kind_of(self, frame_number: int) -> FrameKind:
        return self._kinds.get(frame_number, FrameKind.FREE)

    # -- allocation -------------------------------------------------------

    def allocate_frame(
        self, kind: FrameKind, policy: AllocPolicy, touching_socket: int
    ) -> Frame:
        """Allocate one frame on the socket the policy selects.

        Allocation is strict: if the chosen socket has no usable frame the
        call raises OutOfMemory and the caller decides what to do; there is no
        transparent fallback to another socket. Page-table allocations draw
        from the socket's reserved page-cache before its general pool.
        """
        if not 0 <= touching_socket < self.socket_count:
            raise ValueError("touching socket outside machine")
        socket = policy.target_socket(touching_socket, self.socket_count)
        return self.allocate_on(kind, socket)

    def allocate_on(self, kind: FrameKind, socket: int) -> Frame:
        """Strictly allocate one frame of `kind` on `socket`."""
        if kind is FrameKind.FREE:
            raise ValueError("allocate data or pagetable frames, not free ones")
        pool = self._pools[socket]
        number = None
        if kind is FrameKind.PAGETABLE:
            number = pool.take_cache()
        if number is None:
            number = pool.take_pool()
        if number is None:
            raise OutOfMemory(socket)
        self._kinds[number] = kind
        return Frame(number, socket, kind)

    def allocate_region(
        self, count: int, kind: FrameKind, policy: AllocPolicy, touching_socket: int
    ) -> list[Frame]:
        """Allocate `count` physically contiguous frames on one socket.

        Used for 2MB mappings. Contiguity requires an untouched run at the
        pool's high-water mark; a fragmented pool raises OutOfMemory even if
        enough scattered frames remain, which is exactly how large-page
        allocation fails on aged systems.
        """
        socket = policy.target_socket(touching_socket, self.socket_count)
        run = self._pools[socket].take_contiguous(count)
        if run is None:
            raise OutOfMemory(socket)
        for n in run:
            self._kinds[n] = kind
        return [Frame(n, socket, kind) for n in run]

    def free_frame(self, frame: Frame | int) -> None:
        """Return a frame to its socket's pool.

        Page-table frames refill the page-cache first until the reserve is
        whole again; everything else goes back to the general pool.
        """
        number = frame.frame_number if isinstance(frame, Frame) else frame
        kind = self._kinds.pop(number, None)
        if kind is None:
            raise DoubleFree(f"frame {number} is already free")
        pool = self._pools[self.socket_of(number)]
        if kind is FrameKind.PAGETABLE and pool.cache_free_count() < pool.reserve:
            pool.cache_freed.append(number)
        else:
            pool.pool_freed.append(number)
        if isinstance(frame, Frame):
            frame.kind = FrameKind.FREE

    # -- cost model -------------------------------------------------------

    def access_cost(self, from_socket: int, target: Frame | int) -> int:
        """Cycles to access `target` from a core on `from_socket`."""
        number = target.frame_number if isinstance(target, Frame) else target
        socket = number // self.config.frames_per_socket
        base = (
            self.config.local_latency
            if socket == from_socket
            else self.config.remote_latency
        )
        mult = self._latency_multiplier[socket]
        return base if mult == 1.0 else int(base * mult)

    def set_latency_multiplier(self, socket: int, factor: float) -> None:
        """Scale all access latencies to `socket`'s memory (interference model)."""
        if factor < 1.0:
            raise ValueError("multiplier below 1.0 makes no sense")
        self._latency_multiplier[socket] = factor

    def clear_latency_multipliers(self) -> None:
        self._latency_multiplier = [1.0] * self.socket_count

    # -- accounting -------------------------------------------------------

    def free_frames(self, socket: int) -> int:
        pool = self._pools[socket]
        return pool.cache_free_count() + pool.pool_free_count()

    def pagecache_free(self, socket: int) -> int:
        return self._pools[socket].cache_free_count()

    def frames_with_kind(self, kind: FrameKind, socket: int | None = None) -> int:
        if socket is None:
            return sum(1 for k in self._kinds.values() if k is kind)
        lo = socket * self.config.frames_per_socket
        hi = lo + self.config.frames_per_socket
        return sum(1 for n, k in self._kinds.items() if k is kind and lo <= n < hi)
