import pytest

from ptsim.machine import FrameKind, Machine, MachineConfig
from ptsim.pagetable import PAGE_SIZE
from ptsim.translation import TLBConfig
from ptsim.workload import (
    ConfigMismatch, ScenarioConfig, WorkloadSpec, access_pattern,
    apply_fragmentation, move_data_frames, run_multisocket, run_scenario,
    run_scenario_full,
)

MB = 1024 ** 2
SMALL_TLB = TLBConfig(l1_entries=16, l2_entries=64)


def machine():
    return Machine(MachineConfig())


def wl(pattern="uniform-random", footprint=8 * MB, accesses=20000,
       threads=((0, 0),), init=0, seed=1, write_ratio=0.5):
    return WorkloadSpec(pattern, footprint, accesses, write_ratio,
                        tuple(threads), init, seed)


def sc(name="LP-LD", **kw):
    kw.setdefault("tlb", SMALL_TLB)
    return ScenarioConfig(name, **kw)


# -- patterns ------------------------------------------------------------------

@pytest.mark.parametrize("pattern", ["uniform-random", "sequential-stream",
                                     "hash-probe", "pointer-chase"])
def test_patterns_stay_in_footprint(pattern):
    import random
    gen = access_pattern(pattern, 64, random.Random(0))
    for _ in range(2000):
        assert 0 <= next(gen) < 64


def test_sequential_wraps():
    import random
    gen = access_pattern("sequential-stream", 4, random.Random(0))
    assert [next(gen) for _ in range(6)] == [0, 1, 2, 3, 0, 1]


def test_unknown_pattern_rejected():
    with pytest.raises(ValueError):
        WorkloadSpec("zigzag", MB, 10)


# -- determinism -----------------------------------------------------------------

def test_identical_config_and_seed_identical_stats():
    a = run_scenario(machine(), sc(), wl())
    b = run_scenario(machine(), sc(), wl())
    assert a == b


def test_different_seed_differs():
    a = run_scenario(machine(), sc(), wl(seed=1))
    b = run_scenario(machine(), sc(), wl(seed=2))
    assert a != b


def test_zero_accesses_total_is_init_only():
    stats = run_scenario(machine(), sc(), wl(accesses=0))
    assert stats.total_cycles == stats.init_cycles > 0


# -- placement configs --------------------------------------------------------------

def test_remote_pt_slower_and_walk_heavier():
    lp = run_scenario(machine(), sc("LP-LD"), wl())
    rp = run_scenario(machine(), sc("RP-LD", pt_policy="fixed:1"), wl())
    assert rp.total_cycles > lp.total_cycles
    assert rp.walk_fraction > lp.walk_fraction


def test_interference_slows_its_socket():
    base = run_scenario(machine(), sc("RP-LD", pt_policy="fixed:1"), wl())
    noisy = run_scenario(
        machine(), sc("RPI-LD", pt_policy="fixed:1", interference_sockets=(1,)),
        wl())
    assert noisy.total_cycles > base.total_cycles


def test_replication_mask_scenario_no_remote_walks():
    stats = run_scenario(machine(), sc("LP-LD+M", mitosis="replicate:0+1+2+3"),
                         wl())
    assert stats.remote_walk_accesses == 0
    assert stats.remote_leaf_pct == (0.0, 0.0, 0.0, 0.0)


# -- migration event ------------------------------------------------------------------

def test_migration_event_moves_threads_and_data():
    m = machine()
    stats, space = run_scenario_full(
        m, sc("RP-LD", migration_event=(0, 1, 0)),
        wl(threads=((0, 1),), init=1))
    # all data now on socket 0, page-tables still on 1
    assert m.frames_with_kind(FrameKind.DATA, 0) == 8 * MB // PAGE_SIZE
    assert m.frames_with_kind(FrameKind.DATA, 1) == 0
    assert all(n.socket == 1 for n in space.nodes.values())
    assert stats.remote_leaf_pct[0] == 100.0


def test_migration_event_with_pt_migration():
    m = machine()
    stats, space = run_scenario_full(
        m, sc("RP-LD+M", migration_event=(0, 1, 0), mitosis="migrate"),
        wl(threads=((0, 1),), init=1))
    assert all(n.socket == 0 for n in space.nodes.values())
    assert stats.remote_leaf_pct[0] == 0.0


def test_migration_event_mid_run():
    stats = run_scenario(
        machine(), sc("RP-LD", migration_event=(5000, 1, 0)),
        wl(threads=((0, 1),), init=1, accesses=10000))
    assert 0.0 < stats.remote_leaf_pct[0] < 100.0


def test_move_data_frames_rewrites_leaves():
    from ptsim.machine import AllocPolicy
    from ptsim.pagetable import AddressSpace
    m = machine()
    sp = AddressSpace.create(m, AllocPolicy.fixed(0), AllocPolicy.fixed(0),
                             {0, 1})
    base = 1 << 39
    sp.map(base, 16 * PAGE_SIZE, touching_socket=0)
    moved = move_data_frames(m, sp, 0, 2)
    assert moved == 16
    for s in (0, 1):
        t = sp.software_walk(s, base)
        assert m.socket_of(t.leaf_frame) == 2


# -- fragmentation ---------------------------------------------------------------------

def test_frag_prob_zero_all_huge():
    m = machine()
    stats, space = run_scenario_full(
        m, sc(page_size="2m"), wl(footprint=16 * MB))
    leaves = list(space.iter_leaf_entries())
    assert len(leaves) == 8
    assert all(v & 4 for _, _, _, v in leaves)  # all huge


def test_frag_prob_one_identical_to_4k():
    frag = run_scenario(machine(), sc(page_size="2m", frag_fail_prob=1.0),
                        wl(footprint=16 * MB))
    plain = run_scenario(machine(), sc(page_size="4k"), wl(footprint=16 * MB))
    assert frag == plain


def test_frag_monotone_walk_fraction():
    fracs = []
    base = sc(page_size="2m")
    for p in (0.0, 0.5, 0.9, 1.0):
        stats = run_scenario(machine(), apply_fragmentation(base, p),
                             wl(footprint=16 * MB))
        fracs.append(stats.walk_fraction)
    assert fracs == sorted(fracs)


def test_frag_requires_2m():
    with pytest.raises(ConfigMismatch):
        apply_fragmentation(sc(page_size="4k"), 0.5)
    with pytest.raises(ConfigMismatch):
        run_scenario(machine(), sc(page_size="4k", frag_fail_prob=0.5), wl())


# -- multisocket -----------------------------------------------------------------------

def test_multisocket_full_mask_all_local():
    stats = run_multisocket(
        machine(), "first-touch", "first-touch", {0, 1, 2, 3},
        wl(footprint=16 * MB, threads=[(t, t) for t in range(4)]),
        tlb=SMALL_TLB)
    assert stats.remote_walk_accesses == 0


def test_multisocket_first_touch_skews_pt():
    m = machine()
    run_multisocket(m, "first-touch", "first-touch", None,
                    wl(footprint=16 * MB, threads=[(t, t) for t in range(4)],
                       init=1),
                    tlb=SMALL_TLB)
    assert m.frames_with_kind(FrameKind.PAGETABLE, 1) > 0
    for s in (0, 2, 3):
        assert m.frames_with_kind(FrameKind.PAGETABLE, s) == 0


def test_multisocket_interleave_spreads_pt():
    m = machine()
    run_multisocket(m, "interleave", "interleave", None,
                    wl(footprint=16 * MB, threads=[(t, t) for t in range(4)]),
                    tlb=SMALL_TLB)
    counts = [m.frames_with_kind(FrameKind.PAGETABLE, s) for s in range(4)]
    assert min(counts) > 0


# -- validation ---------------------------------------------------------------------------

def test_footprint_capacity_checked():
    small = Machine(MachineConfig(socket_count=2, frames_per_socket=64,
                                  pagecache_reserve=8))
    with pytest.raises(ConfigMismatch):
        run_scenario(small, sc(), wl(footprint=64 * MB))


def test_bad_interference_socket():
    with pytest.raises(ConfigMismatch):
        run_scenario(machine(), sc(interference_sockets=(9,)), wl())


def test_bad_migration_event():
    with pytest.raises(ConfigMismatch):
        run_scenario(machine(), sc(migration_event=(0, 0, 11)), wl())


def test_bad_mitosis_string():
    with pytest.raises(ValueError):
        run_scenario(machine(), sc(mitosis="sideways"), wl())
