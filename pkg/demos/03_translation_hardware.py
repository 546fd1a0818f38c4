"""
Translation hardware: TLB, paging-structure caches, walk costs
==============================================================

Cold walks take four memory accesses for 4KB pages and three for 2MB pages;
paging-structure caches shorten re-walks; the TLB makes repeats free. Remote
page-tables make every one of those accesses a remote access.
"""

from ptsim import (
    AddressSpace, AllocPolicy, Machine, MachineConfig, TranslationEngine,
)

MB = 1024 ** 2
BASE = 1 << 39

machine = Machine(MachineConfig(frames_per_socket=131072))

local = AddressSpace.create(machine, AllocPolicy.fixed(0), AllocPolicy.fixed(0), {0})
local.map(BASE, 16 * MB, touching_socket=0)
eng = TranslationEngine(machine, local, core_socket=0)

r = eng.translate(BASE)
print("cold 4KB walk:", len(r.walk.accesses), "accesses,", r.walk_cycles, "cycles")
r = eng.translate(BASE)
print("same address again: TLB hit,", r.walk_cycles, "cycles")
r = eng.translate(BASE + 4096)
print("neighbor page: paging-structure cache cut the walk to",
      len(r.walk.accesses), "access(es),", r.walk_cycles, "cycles")

# The same table observed from another socket: all four accesses remote.
far = TranslationEngine(machine, local, core_socket=3)
r = far.translate(BASE + 8192)
print("cold walk from socket 3:", r.walk_cycles, "cycles "
      f"({r.walk_cycles / (4 * 280):.2f}x the local walk)")

# 2MB pages drop a level.
huge = AddressSpace.create(machine, AllocPolicy.fixed(1), AllocPolicy.fixed(1),
                           {1}, page_size_mode="2m")
huge.map(BASE, 16 * MB, touching_socket=1)
heng = TranslationEngine(machine, huge, core_socket=1)
r = heng.translate(BASE)
print("cold 2MB walk:", len(r.walk.accesses), "accesses,", r.walk_cycles, "cycles")

print("engine counters:", heng.walk_stats())
