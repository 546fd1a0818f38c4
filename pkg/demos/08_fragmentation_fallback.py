"""
Large pages under fragmentation
===============================

2MB pages shorten walks and widen TLB coverage, but a fragmented machine
makes 2MB allocations fail and fall back to 4KB pages. Sweeping the failure
probability walks the overhead right back up to the 4KB level.
"""

from ptsim import (
    Machine, MachineConfig, ScenarioConfig, TLBConfig, WorkloadSpec,
    apply_fragmentation, run_scenario,
)

MB = 1024 ** 2
tlb = TLBConfig(l1_entries=16, l2_entries=64)
wl = WorkloadSpec("uniform-random", 32 * MB, 200_000, 0.5, ((0, 0),), 0, seed=3)
base = ScenarioConfig("huge", page_size="2m", tlb=tlb)

print(f"{'2MB failure rate':>16s} {'walk fraction':>14s}")
for p in (0.0, 0.5, 0.9, 1.0):
    stats = run_scenario(Machine(MachineConfig()), apply_fragmentation(base, p), wl)
    print(f"{p:>16.2f} {stats.walk_fraction:>14.3f}")

plain = run_scenario(Machine(MachineConfig()),
                     ScenarioConfig("small", page_size="4k", tlb=tlb), wl)
print(f"{'4KB mode':>16s} {plain.walk_fraction:>14.3f}   (= failure rate 1.0)")
