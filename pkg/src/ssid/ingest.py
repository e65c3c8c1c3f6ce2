"""Packet-header stream loading.

Streams are flat CSV files with the columns ``timestamp,src,dst,length``.
Any further columns (``seq``, ground truth, ...) are ignored here; the
evaluation code reads them through its own loader.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

REQUIRED_COLUMNS = ("timestamp", "src", "dst", "length")


class StreamFormatError(ValueError):
    """Raised for malformed or non time-ordered packet files."""


@dataclass(frozen=True, slots=True)
class PacketRecord:
    seq_no: int
    timestamp: float
    src_id: str
    dst_id: str
    length_bytes: int


def _parse_row(row: dict, rowno: int) -> tuple[float, str, str, int]:
    try:
        t = float(row["timestamp"])
        length = int(float(row["length"]))
        src, dst = row["src"], row["dst"]
    except (TypeError, ValueError, KeyError) as exc:
        raise StreamFormatError(f"malformed row {rowno}: {exc}") from exc
    if src is None or dst is None or not math.isfinite(t):
        raise StreamFormatError(f"malformed row {rowno}: missing field")
    if length < 0:
        raise StreamFormatError(f"malformed row {rowno}: negative length")
    return t, src, dst, length


def load_stream(path: str | Path, format: str = "csv") -> list[PacketRecord]:
    """Read a packet CSV into records rebased so the first packet is at t=0.

    Rows are numbered from 1 (the header is row 0) in error messages.
    """
    if format != "csv":
        raise ValueError(f"unsupported stream format {format!r}")
    records: list[PacketRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise StreamFormatError(f"missing columns: {', '.join(missing)}")
        origin = None
        prev = -math.inf
        for rowno, row in enumerate(reader, start=1):
            t, src, dst, length = _parse_row(row, rowno)
            if t < prev:
                raise StreamFormatError(f"non-monotone timestamp at row {rowno}")
            prev = t
            if origin is None:
                origin = t
            records.append(PacketRecord(rowno - 1, t - origin, src, dst, length))
    return records


def write_stream(records: Iterable[PacketRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REQUIRED_COLUMNS)
        for r in records:
            w.writerow([repr(r.timestamp), r.src_id, r.dst_id, r.length_bytes])


def inter_transmission_time(stream: Sequence[PacketRecord], i: int) -> float:
    """Seconds since the previous packet; 0 for the first one."""
    if i < 0 or i >= len(stream):
        raise IndexError(i)
    if i == 0:
        return 0.0
    return stream[i].timestamp - stream[i - 1].timestamp
