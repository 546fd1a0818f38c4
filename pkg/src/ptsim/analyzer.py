"""Distribution analysis of page-table snapshots.

Parses the JSON-lines dump format and computes, per page-table level and per
socket: how many table pages live there, where their valid entries point, and
what fraction of those pointers are remote. Also answers the walk-oriented
question "what fraction of final-translation entries would a core on socket S
have to fetch from a remote socket", using S's own replica tree when the dump
contains one.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

from .snapshot import EntryRecord, NodeRecord, SnapshotDump

LEVELS = (4, 3, 2, 1)

_ROOTS_KEYS = {"kind", "roots"}
_NODE_KEYS = {"kind", "replica_socket", "level", "frame", "socket", "entries"}
_ENTRY_KEYS = {"i", "frame", "socket", "p", "w", "h", "a", "d"}


class ParseError(Exception):
    """Malformed dump input; `line` is the 1-based offending line number."""

    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


def parse_dump(source) -> SnapshotDump:
    """Parse a dump from a string, file object, or iterable of lines."""
    if isinstance(source, str):
        lines = io.StringIO(source)
    else:
        lines = source
    roots = None
    nodes = []
    lineno = 0
    for raw in lines:
        lineno += 1
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"bad JSON: {exc.msg}") from exc
        kind = obj.get("kind") if isinstance(obj, dict) else None
        if roots is None:
            if kind != "roots":
                raise ParseError(lineno, "dump must start with a roots line")
            if set(obj) != _ROOTS_KEYS or not isinstance(obj["roots"], list):
                raise ParseError(lineno, "malformed roots line")
            roots = tuple(int(r) for r in obj["roots"])
            continue
        if kind != "node":
            raise ParseError(lineno, f"unknown line kind {kind!r}")
        if set(obj) != _NODE_KEYS:
            raise ParseError(lineno, "malformed node line")
        entries = []
        for e in obj["entries"]:
            if not isinstance(e, dict) or set(e) != _ENTRY_KEYS:
                raise ParseError(lineno, "malformed entry")
            entries.append(EntryRecord(**e))
        nodes.append(NodeRecord(
            replica_socket=obj["replica_socket"],
            level=obj["level"],
            frame=obj["frame"],
            socket=obj["socket"],
            entries=tuple(entries),
        ))
    if roots is None:
        raise ParseError(1, "empty input, expected a roots line")
    return SnapshotDump(roots=roots, nodes=tuple(nodes))


@dataclass
class LevelDistribution:
    """Per-(level, socket) node counts and pointer-target matrices."""

    socket_count: int
    node_count: dict = field(default_factory=dict)      # (level, socket) -> n
    pointer_matrix: dict = field(default_factory=dict)  # (level, socket) -> [per-target]
    remote_pct: dict = field(default_factory=dict)      # (level, socket) -> fraction

    def row(self, level: int, socket: int):
        n = self.node_count.get((level, socket), 0)
        targets = self.pointer_matrix.get((level, socket), [0] * self.socket_count)
        pct = self.remote_pct.get((level, socket), 0.0)
        return n, targets, pct


def level_distribution(dump: SnapshotDump, replica_socket: int | None = None
                       ) -> LevelDistribution:
    """Summarize one replica's tree, or the merged view of every node.

    With replica_socket=None all nodes in the dump are counted, which for an
    unreplicated dump is exactly the primary tree.
    """
    dist = LevelDistribution(socket_count=dump.socket_count)
    for node in dump.nodes:
        if replica_socket is not None and node.replica_socket != replica_socket:
            continue
        key = (node.level, node.socket)
        dist.node_count[key] = dist.node_count.get(key, 0) + 1
        matrix = dist.pointer_matrix.setdefault(key, [0] * dump.socket_count)
        for e in node.entries:
            matrix[e.socket] += 1
    for key, matrix in dist.pointer_matrix.items():
        total = sum(matrix)
        local = matrix[key[1]]
        dist.remote_pct[key] = (total - local) / total if total else 0.0
    return dist


def remote_leaf_view(dump: SnapshotDump, observer_socket: int) -> float:
    """Fraction of final-translation entries on nodes remote to the observer.

    A walk's leaf-level fetch lands on the node holding the entry, so
    remoteness is judged by the node's socket, not the data frame's. The
    observer's own replica tree is used when one exists.
    """
    if not 0 <= observer_socket < dump.socket_count:
        raise ValueError("observer outside machine")
    root_frame = dump.roots[observer_socket]
    tree = None
    for node in dump.nodes:
        if node.level == 4 and node.frame == root_frame:
            tree = node.replica_socket
            break
    remote = total = 0
    for node, _entry in dump.leaf_entries():
        if tree is not None and node.replica_socket != tree:
            continue
        total += 1
        if node.socket != observer_socket:
            remote += 1
    return remote / total if total else 0.0


def _human(n: int) -> str:
    if n < 10000:
        return str(n)
    if n < 10 ** 6:
        return f"{round(n / 1000)}k"
    return f"{round(n / 10 ** 6)}M"


def render_matrix(dist: LevelDistribution) -> str:
    """Fixed-width text matrix, one row per level, one block per socket.

    Each cell reads "count [t0 t1 ... tN-1] (remote%)": table pages at that
    level on that socket, their valid-entry targets by socket, and the remote
    share of those targets.
    """
    n = dist.socket_count
    cell_w = 4 + 2 + (5 * n - 1) + 2 + 7  # count [targets] (pct%)
    header = " Level |" + "|".join(f"{f'Socket {s}':^{cell_w}}" for s in range(n))
    lines = [header]
    for level in LEVELS:
        cells = []
        for s in range(n):
            count, targets, pct = dist.row(level, s)
            tgt = " ".join(f"{_human(t):>4}" for t in targets)
            cells.append(f"{_human(count):>4} [{tgt}] ({round(pct * 100):>3}%)")
        lines.append(f"    L{level} |" + "|".join(cells))
    return "\n".join(lines) + "\n"


def distribution_csv(dist: LevelDistribution) -> str:
    """CSV rows: level,socket,node_count,t0..tN-1,remote_pct."""
    n = dist.socket_count
    header = "level,socket,node_count," + ",".join(f"t{s}" for s in range(n)) + ",remote_pct"
    lines = [header]
    for level in LEVELS:
        for s in range(n):
            count, targets, pct = dist.row(level, s)
            lines.append(
                f"{level},{s},{count},"
                + ",".join(str(t) for t in targets)
                + f",{pct:.6f}"
            )
    return "\n".join(lines) + "\n"
