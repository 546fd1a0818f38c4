"""
The NUMA machine: frame pools, placement policies, access costs
===============================================================

Build a four-socket machine, allocate frames under the three placement
policies, and watch what strict allocation and the per-socket page-cache do.
"""

from ptsim import AllocPolicy, FrameKind, Machine, MachineConfig, OutOfMemory

machine = Machine(MachineConfig(socket_count=4, frames_per_socket=256,
                                pagecache_reserve=16))

# First-touch puts the frame where the toucher runs; interleave round-robins;
# fixed pins the socket outright.
ft = machine.allocate_frame(FrameKind.DATA, AllocPolicy.first_touch(), 2)
print("first-touch from socket 2 ->", ft.socket)

rr = AllocPolicy.interleave()
print("interleave order:", [machine.allocate_frame(FrameKind.DATA, rr, 0).socket
                            for _ in range(8)])

print("fixed:3 ->", machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(3), 0).socket)

# Local vs remote access latency (cycles per memory reference).
print("access from socket 2 to its own frame:", machine.access_cost(2, ft), "cycles")
print("access from socket 0 to that frame:   ", machine.access_cost(0, ft), "cycles")

# Strictness: a data request for an exhausted socket fails rather than
# silently landing elsewhere. The page-cache keeps page-table allocations
# alive through that pressure.
hold = []
try:
    while True:
        hold.append(machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(1), 0))
except OutOfMemory as exc:
    print(f"data allocation on socket {exc.socket} failed after",
          len(hold), "frames")

pt = machine.allocate_frame(FrameKind.PAGETABLE, AllocPolicy.fixed(1), 0)
print("page-table allocation still fine on socket 1 (page-cache):", pt.socket,
      "| reserve left:", machine.pagecache_free(1))
