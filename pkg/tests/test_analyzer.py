import json

import pytest

from ptsim.analyzer import (
    ParseError, distribution_csv, level_distribution, parse_dump,
    remote_leaf_view, render_matrix,
)
from ptsim.machine import AllocPolicy, Machine, MachineConfig
from ptsim.pagetable import PAGE_SIZE, AddressSpace
from ptsim.snapshot import EntryRecord, NodeRecord, SnapshotDump

BASE = 1 << 39
MB = 1024 ** 2


def space_dump(mask={0}, pt="fixed:0", size=8 * MB):
    m = Machine(MachineConfig())
    sp = AddressSpace.create(m, AllocPolicy.parse(pt), AllocPolicy.fixed(0), mask)
    sp.map(BASE, size, touching_socket=0)
    return sp.snapshot_dump()


def entry(i, frame, socket, **kw):
    d = dict(i=i, frame=frame, socket=socket, p=1, w=1, h=0, a=0, d=0)
    d.update(kw)
    return EntryRecord(**d)


# A hand-built dump on a 4-socket box: one root on socket 1 whose 12 valid
# entries point 8 to socket 0, 3 locally, 1 to socket 3.
def reference_dump():
    targets = [0] * 8 + [1] * 3 + [3]
    entries = tuple(
        entry(i, frame=70000 * (t + 1) + i, socket=t)
        for i, t in enumerate(targets)
    )
    root = NodeRecord(replica_socket=1, level=4, frame=65537, socket=1,
                      entries=entries)
    return SnapshotDump(roots=(65537, 65537, 65537, 65537), nodes=(root,))


# -- parsing ------------------------------------------------------------------

def test_parse_minimal():
    dump = parse_dump('{"kind":"roots","roots":[5,5]}\n')
    assert dump.roots == (5, 5)
    assert dump.nodes == ()


def test_parse_roots_plus_node():
    text = ('{"kind":"roots","roots":[7]}\n'
            '{"kind":"node","replica_socket":0,"level":4,"frame":7,"socket":0,'
            '"entries":[{"i":3,"frame":9,"socket":0,"p":1,"w":1,"h":0,"a":0,"d":0}]}\n')
    dump = parse_dump(text)
    assert len(dump.nodes) == 1
    assert dump.nodes[0].entries[0].i == 3


def test_parse_missing_roots_is_line_one():
    with pytest.raises(ParseError) as exc:
        parse_dump('{"kind":"node","replica_socket":0,"level":4,"frame":7,'
                   '"socket":0,"entries":[]}\n')
    assert exc.value.line == 1


def test_parse_unknown_kind_rejected():
    with pytest.raises(ParseError) as exc:
        parse_dump('{"kind":"roots","roots":[1]}\n{"kind":"blob"}\n')
    assert exc.value.line == 2


def test_parse_bad_json_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_dump('{"kind":"roots","roots":[1]}\n{nope}\n')
    assert exc.value.line == 2


def test_round_trip_byte_identical():
    dump = space_dump(mask={0, 2})
    text = dump.to_jsonl()
    assert parse_dump(text).to_jsonl() == text


def test_round_trip_distributions_identical():
    dump = space_dump(pt="interleave")
    again = parse_dump(dump.to_jsonl())
    assert level_distribution(dump) == level_distribution(again)


# -- distributions ---------------------------------------------------------------

def test_all_local_zero_remote():
    dump = space_dump(mask={0}, pt="fixed:0")
    dist = level_distribution(dump)
    assert all(v == 0.0 for v in dist.remote_pct.values())


def test_reference_matrix_row():
    dist = level_distribution(reference_dump())
    count, targets, pct = dist.row(4, 1)
    assert count == 1
    assert targets == [8, 3, 0, 1]
    assert pct == pytest.approx(9 / 12)


def test_interleaved_leaves_fraction():
    dump = space_dump(pt="interleave", size=16 * MB)
    dist = level_distribution(dump)
    # all leaf pointers land on socket 0 (data fixed:0); L1 node spread is
    # what remote_leaf_view reads, checked separately
    for s in range(4):
        n, targets, _ = dist.row(1, s)
        assert n == 2  # 8 L1 nodes interleaved over 4 sockets


def test_node_count_sums_match_dump():
    dump = space_dump(pt="interleave", size=16 * MB)
    dist = level_distribution(dump)
    for level in (4, 3, 2, 1):
        total = sum(dist.node_count.get((level, s), 0) for s in range(4))
        assert total == sum(1 for n in dump.nodes if n.level == level)


# -- remote leaf view ---------------------------------------------------------------

def test_remote_leaf_fully_replicated_zero():
    dump = space_dump(mask={0, 1, 2, 3})
    for s in range(4):
        assert remote_leaf_view(dump, s) == 0.0


def test_remote_leaf_single_table():
    dump = space_dump(mask={0})
    assert remote_leaf_view(dump, 0) == 0.0
    for s in (1, 2, 3):
        assert remote_leaf_view(dump, s) == 1.0


def test_remote_leaf_split_construction():
    # leaf nodes split 50/50 between sockets 0 and 1
    l1a = NodeRecord(replica_socket=0, level=1, frame=10, socket=0,
                     entries=tuple(entry(i, 1000 + i, 0) for i in range(4)))
    l1b = NodeRecord(replica_socket=0, level=1, frame=65600, socket=1,
                     entries=tuple(entry(i, 2000 + i, 0) for i in range(4)))
    root = NodeRecord(replica_socket=0, level=4, frame=11, socket=0, entries=())
    dump = SnapshotDump(roots=(11, 11, 11, 11), nodes=(root, l1a, l1b))
    assert remote_leaf_view(dump, 0) == 0.5
    assert remote_leaf_view(dump, 1) == 0.5
    assert remote_leaf_view(dump, 2) == 1.0
    assert remote_leaf_view(dump, 3) == 1.0


def test_remote_leaf_uses_observer_replica():
    dump = space_dump(mask={0, 3})
    # observer 3 walks its own tree: all local; observer 1 walks primary's
    assert remote_leaf_view(dump, 3) == 0.0
    assert remote_leaf_view(dump, 1) == 1.0


def test_huge_leaves_counted():
    m = Machine(MachineConfig())
    sp = AddressSpace.create(m, AllocPolicy.fixed(0), AllocPolicy.fixed(0),
                             {0}, page_size_mode="2m")
    sp.map(BASE, 8 * MB, touching_socket=0)
    dump = sp.snapshot_dump()
    assert remote_leaf_view(dump, 2) == 1.0
    assert len(dump.leaf_entries()) == 4


# -- rendering ------------------------------------------------------------------------

GOLDEN = (
    ' Level |             Socket 0             |             Socket 1             |             Socket 2             |             Socket 3             \n'
    '    L4 |   0 [   0    0    0    0] (  0%)|   1 [   8    3    0    1] ( 75%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)\n'
    '    L3 |   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)\n'
    '    L2 |   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)\n'
    '    L1 |   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)|   0 [   0    0    0    0] (  0%)\n'
)


def test_render_matrix_golden():
    text = render_matrix(level_distribution(reference_dump()))
    assert text == GOLDEN


def test_render_stable_across_runs():
    d = reference_dump()
    assert render_matrix(level_distribution(d)) == render_matrix(level_distribution(d))


def test_render_humanizes_large_counts():
    entries = tuple(entry(i, 1000 + i, 1) for i in range(512))
    nodes = [NodeRecord(replica_socket=0, level=1, frame=100 + k, socket=0,
                        entries=entries) for k in range(30)]
    root = NodeRecord(replica_socket=0, level=4, frame=5, socket=0, entries=())
    dump = SnapshotDump(roots=(5, 5, 5, 5), nodes=(root, *nodes))
    text = render_matrix(level_distribution(dump))
    assert "15k" in text  # 30 nodes x 512 entries on socket 1 targets


def test_distribution_csv_schema():
    text = distribution_csv(level_distribution(reference_dump()))
    lines = text.splitlines()
    assert lines[0] == "level,socket,node_count,t0,t1,t2,t3,remote_pct"
    assert len(lines) == 1 + 16  # 4 levels x 4 sockets
    row = dict(zip(lines[0].split(","), lines[2].split(",")))
    assert row["level"] == "4" and row["socket"] == "1"
    assert row["t0"] == "8" and row["remote_pct"].startswith("0.75")


def test_interleaved_leaf_targets_constructed():
    # one L1 node on socket 0 whose 8 entries target sockets 0,1,2,3 evenly
    entries = tuple(entry(i, 70000 * ((i % 4) + 1), i % 4) for i in range(8))
    l1 = NodeRecord(replica_socket=0, level=1, frame=20, socket=0,
                    entries=entries)
    root = NodeRecord(replica_socket=0, level=4, frame=21, socket=0, entries=())
    dump = SnapshotDump(roots=(21, 21, 21, 21), nodes=(root, l1))
    dist = level_distribution(dump)
    _, targets, pct = dist.row(1, 0)
    assert targets == [2, 2, 2, 2]
    assert pct == pytest.approx(0.75)
