"""
Workload migration scenario: what stale page-tables cost
========================================================

A process starts on socket 1, the OS migrates it (threads and data) to
socket 0, and the page-table either stays behind or follows. The seven
placement configurations bracket the design space; page-table migration
restores baseline performance.
"""

from ptsim import Machine, MachineConfig, run_scenario
from ptsim.config import preset

cfg = preset("migration-4k", seed=42)
print(f"{'config':10s} {'total cycles':>14s} {'walk %':>7s} {'vs LP-LD':>9s}")
baseline = None
for block in cfg.scenarios:
    name = block.scenario.name
    if name.endswith("+M") and name != "RPI-LD+M":
        continue  # show the headline mitigation only
    stats = run_scenario(Machine(cfg.machine), block.scenario,
                         cfg.workloads[block.workload_name])
    if name == "LP-LD":
        baseline = stats.total_cycles
    print(f"{name:10s} {stats.total_cycles:>14,} "
          f"{100 * stats.walk_fraction:>6.1f}% "
          f"{stats.total_cycles / baseline:>8.2f}x")

print("\nRPI-LD+M lands on top of LP-LD: migrating the page-table with the")
print("process removes every remote walk the RPI-LD configuration suffers.")
