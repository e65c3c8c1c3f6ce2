"""Synthetic packet streams for desk-scale experiments.

Benign traffic is a Poisson process between random pairs of hosts with
exponential packet lengths. Attack segments add a high-rate flood from one
source to one target. Every row carries a 0/1 ground-truth column for the
evaluation code.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class AttackSpec:
    start: float
    duration: float
    rate: float = 200.0
    mean_length: float = 60.0
    src: str = "bot"
    dst: str = "victim"


@dataclass
class SynthSpec:
    rate: float = 10.0
    duration: float = 60.0
    mean_length: float = 200.0
    hosts: tuple = ("h0", "h1", "h2", "h3")
    attacks: list = field(default_factory=list)
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        d["attacks"] = [a if isinstance(a, AttackSpec) else AttackSpec(**a) for a in d.get("attacks", [])]
        if "hosts" in d:
            d["hosts"] = tuple(d["hosts"])
        return cls(**d)


def _poisson_times(rng, rate, start, stop):
    if rate <= 0 or stop <= start:
        return np.empty(0)
    n_guess = int(rate * (stop - start) * 1.5) + 20
    t = start + np.cumsum(rng.exponential(1.0 / rate, n_guess))
    while t[-1] < stop:
        more = t[-1] + np.cumsum(rng.exponential(1.0 / rate, n_guess))
        t = np.concatenate([t, more])
    return t[t < stop]


def _lengths(rng, mean, n):
    return np.maximum(1, np.rint(rng.exponential(mean, n))).astype(int)


def generate(spec: SynthSpec) -> list[tuple]:
    """Rows ``(timestamp, src, dst, length, label)`` sorted by time."""
    rng = np.random.default_rng(spec.seed)
    hosts = list(spec.hosts)
    if len(hosts) < 2:
        raise ValueError("need at least two hosts")
    rows = []
    t = _poisson_times(rng, spec.rate, 0.0, spec.duration)
    pairs = rng.integers(0, len(hosts), size=(len(t), 2))
    clash = pairs[:, 0] == pairs[:, 1]
    pairs[clash, 1] = (pairs[clash, 1] + 1) % len(hosts)
    for ti, (a, b), ln in zip(t, pairs, _lengths(rng, spec.mean_length, len(t))):
        rows.append((float(ti), hosts[a], hosts[b], int(ln), 0))
    for atk in spec.attacks:
        ta = _poisson_times(rng, atk.rate, atk.start, min(atk.start + atk.duration, spec.duration))
        for ti, ln in zip(ta, _lengths(rng, atk.mean_length, len(ta))):
            rows.append((float(ti), atk.src, atk.dst, int(ln), 1))
    rows.sort(key=lambda r: r[0])
    return rows


def write_csv(rows, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "src", "dst", "length", "label"])
        for t, s, d, ln, lab in rows:
            w.writerow([repr(t), s, d, ln, lab])


def desk_scenario(seed: int = 0) -> SynthSpec:
    """60 s of benign traffic at 10 pkt/s, then a 30 s flood at 200 pkt/s."""
    return SynthSpec(
        rate=10.0,
        duration=90.0,
        mean_length=200.0,
        attacks=[AttackSpec(start=60.0, duration=30.0, rate=200.0, mean_length=60.0, src="h3", dst="h0")],
        seed=seed,
    )
