"""
Self-replicating page-tables: rings, masks, migration
=====================================================

Map memory through a four-level radix table, replicate it per socket, watch
the write-amplification accounting, and migrate the whole table to another
socket via replicate-then-free.
"""

from ptsim import AddressSpace, AllocPolicy, Machine, MachineConfig

MB = 1024 ** 2
BASE = 1 << 39

machine = Machine(MachineConfig())
space = AddressSpace.create(machine, AllocPolicy.fixed(0), AllocPolicy.fixed(0),
                            replication_mask={0})

log = space.map(BASE, 4 * MB, touching_socket=0)
print("mapped 4MB with 4KB pages:", space.pt_frame_count(), "page-table pages,",
      log.pte_writes, "entry writes")

# Replicate on all four sockets: every logical table page now has one copy
# per socket, linked in a ring. Walks from any socket stay local.
space.set_replication_mask({0, 1, 2, 3})
print("after 4-way replication:", space.pt_frame_count(), "page-table pages")
for s in range(4):
    trace = space.software_walk(s, BASE)
    sockets = sorted({sock for _, _, sock in trace.accesses})
    print(f"  walk from socket {s}: leaf frame {trace.leaf_frame}, "
          f"touches sockets {sockets}")

# One entry write through the interception layer costs R stores plus R ring
# pointer reads: 2N memory references, never a table walk per replica.
node, idx, value = space._leaf_lookup(BASE)
wlog = space.write_pte(node, idx, value)
print("write_pte on 4-way ring:", wlog.pte_writes, "writes +",
      wlog.ring_reads, "ring reads")

# Accessed/dirty bits OR across the ring: touch one replica, read the union.
members = space._ring_members(node)
from ptsim.pagetable import A_BIT, D_BIT
members[2].write_entry(idx, int(members[2].entries[idx]) | A_BIT | D_BIT)
print("A/D bits after dirtying one replica:", space.read_ad_bits(BASE))
space.clear_ad_bits(BASE)
print("after clearing in all replicas:    ", space.read_ad_bits(BASE))

# Migration = replicate on the target, then drop the source.
space.set_replication_mask({0})
space.migrate_pagetable(0, 3, eager_free=True)
homes = {n.socket for n in space.nodes.values()}
print("after migrating 0 -> 3: page-table pages live on sockets", homes)
