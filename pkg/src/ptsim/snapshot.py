"""Page-table snapshot records and their JSON-lines wire format.

A dump is one `roots` line followed by one `node` line per page-table page of
every replica. Key order and separators are fixed so that emit/parse
round-trips are byte-identical:

    {"kind":"roots","roots":[f0,f1,...]}
    {"kind":"node","replica_socket":s,"level":L,"frame":f,"socket":o,
     "entries":[{"i":idx,"frame":f2,"socket":o2,"p":1,"w":1,"h":0,"a":0,"d":0},...]}

Only present entries appear in `entries`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class EntryRecord:
    i: int
    frame: int
    socket: int
    p: int
    w: int
    h: int
    a: int
    d: int

    def to_obj(self) -> dict:
        return {
            "i": self.i, "frame": self.frame, "socket": self.socket,
            "p": self.p, "w": self.w, "h": self.h, "a": self.a, "d": self.d,
        }


@dataclass(frozen=True)
class NodeRecord:
    replica_socket: int
    level: int
    frame: int
    socket: int
    entries: tuple[EntryRecord, ...]

    def to_obj(self) -> dict:
        return {
            "kind": "node",
            "replica_socket": self.replica_socket,
            "level": self.level,
            "frame": self.frame,
            "socket": self.socket,
            "entries": [e.to_obj() for e in self.entries],
        }


@dataclass(frozen=True)
class SnapshotDump:
    roots: tuple[int, ...]
    nodes: tuple[NodeRecord, ...]

    @property
    def socket_count(self) -> int:
        return len(self.roots)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "roots", "roots": list(self.roots)},
                            separators=(",", ":"))]
        for node in self.nodes:
            lines.append(json.dumps(node.to_obj(), separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def leaf_entries(self) -> list[tuple[NodeRecord, EntryRecord]]:
        """All final-translation entries: level-1 entries plus level-2 huge ones."""
        out = []
        for node in self.nodes:
            if node.level == 1:
                out.extend((node, e) for e in node.entries)
            elif node.level == 2:
                out.extend((node, e) for e in node.entries if e.h)
        return out
