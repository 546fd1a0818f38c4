import pytest
from hypothesis import given, settings, strategies as st

from ptsim.machine import (
    AllocPolicy, DoubleFree, Frame, FrameKind, Machine, MachineConfig,
    OutOfMemory,
)


@pytest.fixture
def machine():
    return Machine(MachineConfig(socket_count=4, frames_per_socket=256,
                                 pagecache_reserve=16))


def test_config_invariants():
    with pytest.raises(ValueError):
        MachineConfig(socket_count=0)
    with pytest.raises(ValueError):
        MachineConfig(frames_per_socket=8, pagecache_reserve=9)
    with pytest.raises(ValueError):
        MachineConfig(local_latency=600, remote_latency=500)


def test_fixed_policy_forces_socket(machine):
    f = machine.allocate_frame(FrameKind.PAGETABLE, AllocPolicy.fixed(2), 0)
    assert f.socket == 2
    assert machine.socket_of(f.frame_number) == 2


def test_interleave_round_robin(machine):
    policy = AllocPolicy.interleave()
    sockets = [
        machine.allocate_frame(FrameKind.DATA, policy, 0).socket
        for _ in range(8)
    ]
    assert sockets == [0, 1, 2, 3, 0, 1, 2, 3]


def test_first_touch_exhaustion_is_strict(machine):
    policy = AllocPolicy.first_touch()
    for _ in range(256 - 16):  # the 16-frame page-cache is off limits to data
        machine.allocate_frame(FrameKind.DATA, policy, 1)
    # socket 1 is now full for data; other sockets untouched but unusable
    with pytest.raises(OutOfMemory) as exc:
        machine.allocate_frame(FrameKind.DATA, policy, 1)
    assert exc.value.socket == 1
    assert machine.free_frames(0) > 0


def test_data_never_draws_from_pagecache(machine):
    policy = AllocPolicy.fixed(0)
    # drain the general pool on socket 0
    for _ in range(256 - 16):
        machine.allocate_frame(FrameKind.DATA, policy, 0)
    assert machine.pagecache_free(0) == 16
    with pytest.raises(OutOfMemory):
        machine.allocate_frame(FrameKind.DATA, policy, 0)
    # page-table allocation still succeeds from the reserve
    f = machine.allocate_frame(FrameKind.PAGETABLE, policy, 0)
    assert f.socket == 0
    assert machine.pagecache_free(0) == 15


def test_pagecache_priority(machine):
    # while the page-cache has frames, PT allocations never touch the pool
    policy = AllocPolicy.fixed(3)
    pool_before = machine.free_frames(3) - machine.pagecache_free(3)
    for _ in range(16):
        machine.allocate_frame(FrameKind.PAGETABLE, policy, 3)
    assert machine.pagecache_free(3) == 0
    assert machine.free_frames(3) - machine.pagecache_free(3) == pool_before


def test_free_refills_pagecache_first(machine):
    policy = AllocPolicy.fixed(0)
    frames = [machine.allocate_frame(FrameKind.PAGETABLE, policy, 0)
              for _ in range(20)]  # 16 from cache, 4 from pool
    assert machine.pagecache_free(0) == 0
    machine.free_frame(frames[0])
    assert machine.pagecache_free(0) == 1


def test_alloc_free_restores_counts(machine):
    before = machine.free_frames(2)
    f = machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(2), 0)
    assert machine.free_frames(2) == before - 1
    machine.free_frame(f)
    assert machine.free_frames(2) == before


def test_double_free(machine):
    f = machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(0), 0)
    machine.free_frame(f)
    with pytest.raises(DoubleFree):
        machine.free_frame(f.frame_number)


def test_access_cost_local_remote(machine):
    f0 = machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(0), 0)
    f3 = machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(3), 0)
    assert machine.access_cost(0, f0) == 280
    assert machine.access_cost(0, f3) == 580
    assert machine.access_cost(3, f3) == 280


def test_access_cost_uma_degenerate():
    m = Machine(MachineConfig(socket_count=2, frames_per_socket=64,
                              local_latency=300, remote_latency=300,
                              pagecache_reserve=0))
    a = m.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(0), 0)
    b = m.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(1), 0)
    assert m.access_cost(0, a) == m.access_cost(0, b) == 300


def test_latency_multiplier(machine):
    f1 = machine.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(1), 0)
    machine.set_latency_multiplier(1, 1.5)
    assert machine.access_cost(0, f1) == int(580 * 1.5)
    assert machine.access_cost(1, f1) == int(280 * 1.5)
    machine.clear_latency_multipliers()
    assert machine.access_cost(0, f1) == 580


def test_region_allocation_contiguous_single_socket(machine):
    frames = machine.allocate_region(32, FrameKind.DATA, AllocPolicy.fixed(2), 0)
    numbers = [f.frame_number for f in frames]
    assert numbers == list(range(numbers[0], numbers[0] + 32))
    assert all(f.socket == 2 for f in frames)


def test_region_allocation_fails_on_fragmented_pool():
    m = Machine(MachineConfig(socket_count=1, frames_per_socket=64,
                              pagecache_reserve=0))
    held = [m.allocate_frame(FrameKind.DATA, AllocPolicy.fixed(0), 0)
            for _ in range(60)]
    for f in held[::2]:
        m.free_frame(f)  # plenty free, none contiguous at the high-water mark
    with pytest.raises(OutOfMemory):
        m.allocate_region(16, FrameKind.DATA, AllocPolicy.fixed(0), 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["alloc-data", "alloc-pt", "free"]),
                          st.integers(0, 3)), max_size=120))
def test_conservation_under_random_ops(ops):
    m = Machine(MachineConfig(socket_count=4, frames_per_socket=32,
                              pagecache_reserve=4))
    live = []
    for op, socket in ops:
        try:
            if op == "alloc-data":
                live.append(m.allocate_frame(FrameKind.DATA,
                                             AllocPolicy.fixed(socket), 0))
            elif op == "alloc-pt":
                live.append(m.allocate_frame(FrameKind.PAGETABLE,
                                             AllocPolicy.fixed(socket), 0))
            elif live:
                m.free_frame(live.pop(socket % len(live)))
        except OutOfMemory:
            pass
        for s in range(4):
            used = m.frames_with_kind(FrameKind.DATA, s) \
                + m.frames_with_kind(FrameKind.PAGETABLE, s)
            assert used + m.free_frames(s) == 32


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 10))
def test_interleave_fairness(socket_count, rounds):
    m = Machine(MachineConfig(socket_count=socket_count, frames_per_socket=64,
                              pagecache_reserve=0))
    policy = AllocPolicy.interleave()
    per_socket = [0] * socket_count
    for _ in range(rounds * socket_count):
        per_socket[m.allocate_frame(FrameKind.DATA, policy, 0).socket] += 1
    assert per_socket == [rounds] * socket_count
