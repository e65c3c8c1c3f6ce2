"""Traffic metrics fed to the detector.

Two metric sets are supported:

* ``traffic`` (3 metrics per packet): total length and mean inter-transmission
  time over the last ``span_packets`` packets, and the packet count over the
  last ``span_seconds`` seconds.
* ``device`` (6 metrics per endpoint and time window): for packets received by
  the endpoint, grouped by sender, the mean and max over senders of the
  per-sender mean packet size and of the per-sender packet count; then the
  total bytes and packets sent by the endpoint.

Raw values are mapped into [0, 1] by a causal running-max normaliser.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence

import numpy as np

from .ingest import PacketRecord

TRAFFIC_M = 3
DEVICE_M = 6
SPAN_PACKETS = 500
SPAN_SECONDS = 100.0
WINDOW_SECONDS = 10.0
EPS = 1e-12


@dataclass
class NormalizerState:
    runmax: np.ndarray
    eps: float = EPS

    @classmethod
    def empty(cls, m: int) -> "NormalizerState":
        return cls(np.zeros(m))


@dataclass
class MetricVector:
    values: np.ndarray
    ref: Hashable = None
    empty: bool = False


def normalize(raw, state: NormalizerState) -> np.ndarray:
    """Scale ``raw`` by the running max seen *before* it, clamped to 1.

    The running max is updated after the output is computed, so a new maximum
    maps to exactly 1.
    """
    raw = np.asarray(raw, dtype=float)
    if np.any(raw < 0):
        raise ValueError("raw metrics must be non-negative")
    out = np.minimum(raw / np.maximum(state.runmax, state.eps), 1.0)
    state.runmax = np.maximum(state.runmax, raw)
    return out


def denormalize(values, runmax, eps: float = EPS) -> np.ndarray:
    return np.asarray(values) * np.maximum(runmax, eps)


# --- malicious traffic detection (M = 3) ------------------------------------


def traffic_metrics_raw(
    stream: Sequence[PacketRecord],
    i: int,
    span_packets: int = SPAN_PACKETS,
    span_seconds: float = SPAN_SECONDS,
) -> np.ndarray:
    """Direct (rescan) computation of the three raw metrics for packet ``i``.

    The mean inter-transmission time averages the gaps of the packets in the
    span that have a predecessor, so a single packet gives 0.
    """
    lo = max(0, i - span_packets + 1)
    total = float(sum(p.length_bytes for p in stream[lo : i + 1]))
    gaps = [stream[j].timestamp - stream[j - 1].timestamp for j in range(max(lo, 1), i + 1)]
    mean_tt = float(np.mean(gaps)) if gaps else 0.0
    t = stream[i].timestamp
    count = sum(1 for p in stream[: i + 1] if p.timestamp > t - span_seconds)
    return np.array([total, mean_tt, float(count)])


class TrafficMetricExtractor:
    """Rolling version of :func:`traffic_metrics_raw`, O(1) amortised per packet."""

    def __init__(self, span_packets: int = SPAN_PACKETS, span_seconds: float = SPAN_SECONDS):
        self.span_packets = span_packets
        self.span_seconds = span_seconds
        self._lengths: deque[int] = deque()
        self._gaps: deque[float] = deque()
        self._has_gap: deque[bool] = deque()
        self._times: deque[float] = deque()
        self._len_sum = 0
        self._gap_sum = 0.0
        self._gap_n = 0
        self._prev_t: float | None = None

    def push(self, rec: PacketRecord) -> np.ndarray:
        has_gap = self._prev_t is not None
        gap = rec.timestamp - self._prev_t if has_gap else 0.0
        self._prev_t = rec.timestamp

        self._lengths.append(rec.length_bytes)
        self._gaps.append(gap)
        self._has_gap.append(has_gap)
        self._len_sum += rec.length_bytes
        self._gap_sum += gap
        self._gap_n += has_gap
        if len(self._lengths) > self.span_packets:
            self._len_sum -= self._lengths.popleft()
            self._gap_sum -= self._gaps.popleft()
            self._gap_n -= self._has_gap.popleft()

        self._times.append(rec.timestamp)
        while self._times[0] <= rec.timestamp - self.span_seconds:
            self._times.popleft()

        mean_tt = self._gap_sum / self._gap_n if self._gap_n else 0.0
        return np.array([float(self._len_sum), mean_tt, float(len(self._times))])


# --- compromised device identification (M = 6) ------------------------------


def _device_raw(pkts: Sequence[PacketRecord], endpoint: str) -> np.ndarray:
    per_sender: dict[str, list[int]] = {}
    sent_bytes = sent_n = 0
    for p in pkts:
        if p.dst_id == endpoint:
            per_sender.setdefault(p.src_id, []).append(p.length_bytes)
        if p.src_id == endpoint:
            sent_bytes += p.length_bytes
            sent_n += 1
    if per_sender:
        sizes = np.array([np.mean(v) for v in per_sender.values()])
        counts = np.array([len(v) for v in per_sender.values()], dtype=float)
        recv = [sizes.mean(), counts.mean(), sizes.max(), counts.max()]
    else:
        recv = [0.0, 0.0, 0.0, 0.0]
    return np.array(recv + [float(sent_bytes), float(sent_n)])


def device_window_metrics_raw(
    stream: Sequence[PacketRecord],
    src: str,
    window_end: float,
    window_seconds: float = WINDOW_SECONDS,
) -> np.ndarray:
    """Raw device metrics of ``src`` over ``[window_end - window_seconds, window_end)``."""
    lo = window_end - window_seconds
    pkts = [p for p in stream if lo <= p.timestamp < window_end]
    return _device_raw(pkts, src)


@dataclass
class DeviceWindow:
    window: int
    endpoint: str
    raw: np.ndarray
    empty: bool
    tt_sum: float = 0.0
    pl_sum: float = 0.0
    n_packets: int = 0


def iter_device_windows(
    stream: Sequence[PacketRecord], window_seconds: float = WINDOW_SECONDS
) -> Iterator[DeviceWindow]:
    """Yield one :class:`DeviceWindow` per (window, endpoint), window-major.

    Windows are ``[k*w, (k+1)*w)`` from the stream origin. Every endpoint seen
    up to the end of a window gets an entry for it; endpoints without traffic
    in that window come out empty (all-zero metrics). TT/PL totals cover the
    packets involving the endpoint, with gaps measured between that
    endpoint's own packets.
    """
    if not stream:
        return
    known: list[str] = []
    known_set: set[str] = set()
    last_seen: dict[str, float] = {}
    n_windows = int(stream[-1].timestamp // window_seconds) + 1
    idx = 0
    for w in range(n_windows):
        end = (w + 1) * window_seconds
        pkts = []
        while idx < len(stream) and stream[idx].timestamp < end:
            pkts.append(stream[idx])
            idx += 1
        involved: dict[str, list[PacketRecord]] = {}
        for p in pkts:
            for ep in (p.src_id, p.dst_id) if p.src_id != p.dst_id else (p.src_id,):
                if ep not in known_set:
                    known_set.add(ep)
                    known.append(ep)
                involved.setdefault(ep, []).append(p)
        for ep in sorted(known):
            mine = involved.get(ep)
            if not mine:
                yield DeviceWindow(w, ep, np.zeros(DEVICE_M), True)
                continue
            gaps = []
            for p in mine:
                prev = last_seen.get(ep)
                gaps.append(p.timestamp - prev if prev is not None else 0.0)
                last_seen[ep] = p.timestamp
            yield DeviceWindow(
                w,
                ep,
                _device_raw(mine, ep),
                False,
                tt_sum=float(sum(gaps)),
                pl_sum=float(sum(p.length_bytes for p in mine)),
                n_packets=len(mine),
            )
