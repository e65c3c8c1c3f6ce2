"""Self-supervised online learning loop.

The engine consumes one metric sample at a time. For every sample it scores
the detector, updates the decision window and traffic statistics, draws a
self-supervised class (benign, malicious or rejected) with probabilities set
by the trust coefficient, and applies the phase rules:

* phase 0 refits the detector on the growing benign batch and ends as soon as
  trust reaches ``theta``;
* later phases collect benign samples and run one incremental update when
  trust has dropped below ``theta``, at least ``k_min`` samples are waiting
  and no attack is currently detected. A detected attack empties the batch.

Ground truth never enters this module.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from . import aadrnn, metrics
from .detector import SCORERS, AadrnnDetector, DecisionWindow, MlpDetector
from .ingest import PacketRecord
from .trust import TrustState

BENIGN = "benign"
MALICIOUS = "malicious"
REJECTED = "rejected"


class ConfigError(ValueError):
    pass


@dataclass
class SsidConfig:
    theta: float = 0.95
    k_min: int = 100
    window_i: int = 10
    gamma: float = 0.25
    seed: int = 0
    detector: str = "aadrnn"
    task: str = "traffic"
    fista_iters: int = 50
    retrain_every: int = 1
    p: float = 0.1
    r: float = 0.1
    lam_plus: float = 0.01
    lam_minus: float = 0.01
    mlp_epochs: int = 20
    mlp_lr: float = 1e-3
    span_packets: int = metrics.SPAN_PACKETS
    span_seconds: float = metrics.SPAN_SECONDS
    window_seconds: float = metrics.WINDOW_SECONDS

    def __post_init__(self):
        if not 0 < self.theta < 1 or not 0 < self.gamma < 1:
            raise ConfigError("theta and gamma must lie in (0, 1)")
        if self.k_min < 1 or self.window_i < 1 or self.retrain_every < 1:
            raise ConfigError("k_min, window_i and retrain_every must be >= 1")
        if self.fista_iters < 1 or self.mlp_epochs < 1:
            raise ConfigError("iteration counts must be >= 1")
        if self.detector not in ("aadrnn", "mlp"):
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.task not in ("traffic", "device"):
            raise ConfigError(f"unknown task {self.task!r}")
        try:
            self.activation_params
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def activation_params(self) -> aadrnn.ActivationParams:
        return aadrnn.ActivationParams(self.p, self.r, self.lam_plus, self.lam_minus)

    @property
    def m(self) -> int:
        return metrics.TRAFFIC_M if self.task == "traffic" else metrics.DEVICE_M

    @classmethod
    def from_dict(cls, d: dict) -> "SsidConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "SsidConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Sample:
    """One detector input with the traffic it summarises."""

    x: np.ndarray
    ref: Hashable
    time: float
    tt_sum: float
    pl_sum: float
    n_packets: int = 1
    key: Hashable = None
    empty: bool = False


def selection_probabilities(y: float, gamma: float) -> tuple[float, float, float]:
    """``(benign, malicious, rejected)`` probabilities; the last is the complement."""
    p_benign = gamma * (1.0 - y)
    p_malicious = gamma * y
    return p_benign, p_malicious, 1.0 - (p_benign + p_malicious)


def select_packet(y: float, gamma: float, rng: np.random.Generator, first: bool = False) -> str:
    """Draw benign with prob. ``gamma*(1-y)``, malicious with ``gamma*y``, else reject."""
    if first:
        return BENIGN
    p_benign, p_malicious, _ = selection_probabilities(y, gamma)
    u = rng.random()
    if u < p_benign:
        return BENIGN
    if u < p_benign + p_malicious:
        return MALICIOUS
    return REJECTED


def traffic_samples(records: Sequence[PacketRecord], config: SsidConfig) -> Iterator[Sample]:
    ext = metrics.TrafficMetricExtractor(config.span_packets, config.span_seconds)
    norm = metrics.NormalizerState.empty(metrics.TRAFFIC_M)
    prev_t = None
    for rec in records:
        tt = 0.0 if prev_t is None else rec.timestamp - prev_t
        prev_t = rec.timestamp
        x = metrics.normalize(ext.push(rec), norm)
        yield Sample(x, rec.seq_no, rec.timestamp, tt, float(rec.length_bytes))


def device_samples(records: Sequence[PacketRecord], config: SsidConfig) -> Iterator[Sample]:
    norm = metrics.NormalizerState.empty(metrics.DEVICE_M)
    for win in metrics.iter_device_windows(records, config.window_seconds):
        x = np.zeros(metrics.DEVICE_M) if win.empty else metrics.normalize(win.raw, norm)
        yield Sample(
            x,
            (win.endpoint, win.window),
            (win.window + 1) * config.window_seconds,
            win.tt_sum,
            win.pl_sum,
            win.n_packets,
            key=win.endpoint,
            empty=win.empty,
        )


def build_samples(records, config: SsidConfig) -> Iterator[Sample]:
    return (traffic_samples if config.task == "traffic" else device_samples)(records, config)


def make_detector(config: SsidConfig, rng: np.random.Generator):
    if config.detector == "aadrnn":
        return AadrnnDetector(config.m, config.activation_params, config.fista_iters, rng)
    return MlpDetector(config.m, config.mlp_epochs, config.mlp_lr, rng)


@dataclass
class StepRecord:
    ref: Hashable
    key: Hashable
    time: float
    y: float
    window_mean: float
    is_attack: bool
    selection: str
    phase: int
    gamma: float
    c_rep: float
    c_gen: float
    delta: float
    kappa: float


class SsidEngine:
    """Sequential SSID state machine over a stream of :class:`Sample`."""

    def __init__(self, config: SsidConfig, detector=None):
        self.config = config
        select_seq, train_seq = np.random.SeedSequence(config.seed).spawn(2)
        self.rng = np.random.default_rng(select_seq)
        self.detector = detector or make_detector(config, np.random.default_rng(train_seq))
        self.score = SCORERS[config.task]
        self.trust = TrustState(self.detector.n_params)
        self.windows = DecisionWindow(config.window_i, config.gamma)
        self.phase = 0
        self.batch: list[Sample] = []
        self._fitted = 0
        self._pending = 0
        self._seen = 0
        self.n_updates = 0
        self.malicious_selected: list = []
        self.events: list[dict] = []

    def _event(self, kind: str, sample: Sample, **extra) -> None:
        self.events.append({"event": kind, "ref": _jsonable(sample.ref), "time": sample.time, **extra})

    def _batch_error(self) -> float:
        x = np.array([s.x for s in self.batch])
        x_hat = np.atleast_2d(self.detector.reconstruct(x))
        return aadrnn.learning_error([self.score(a, b) for a, b in zip(x, x_hat)])

    def _initial_fit(self, sample: Sample) -> None:
        x = np.array([s.x for s in self.batch])
        self.detector.initial_fit(x)
        for s in self.batch[self._fitted :]:
            self.trust.stats.learn(s.tt_sum, s.pl_sum, s.n_packets)
        self._fitted = len(self.batch)
        self.trust.total_learned = len(self.batch)
        err = self._batch_error()
        self.trust.refresh_generalization(err)
        self._event("fit", sample, phase=0, batch=len(self.batch), error=err)

    def _online_update(self, sample: Sample) -> None:
        x = np.array([s.x for s in self.batch])
        self.detector.incremental_fit(x)
        for s in self.batch:
            self.trust.stats.learn(s.tt_sum, s.pl_sum, s.n_packets)
        self.trust.total_learned += len(self.batch)
        err = self._batch_error()
        self.trust.refresh_generalization(err)
        self.trust.commit_phase()
        self.n_updates += 1
        self._event("update", sample, phase=self.phase, batch=len(self.batch), error=err)
        self.phase += 1
        self.batch = []

    def step(self, sample: Sample) -> StepRecord:
        cfg = self.config
        x_hat = self.detector.reconstruct(sample.x)
        y = self.score(sample.x, x_hat)
        dec = self.windows.push(y, sample.key)
        # Until the first phase ends the decision maker is untrained, so all
        # traffic counts as observed normal traffic.
        if (self.phase == 0 or not dec.is_attack) and not sample.empty:
            self.trust.stats.observe(sample.tt_sum, sample.pl_sum, sample.n_packets)
        gamma = self.trust.refresh()

        if sample.empty:
            choice = REJECTED
        else:
            choice = select_packet(y, gamma, self.rng, first=self._seen == 0)
            self._seen += 1
        if choice != REJECTED:
            self._event("select", sample, selection=choice, y=y)
        if choice == MALICIOUS:
            self.malicious_selected.append((_jsonable(sample.ref), sample.time))
        elif choice == BENIGN:
            self.batch.append(sample)

        if self.phase == 0:
            if choice == BENIGN:
                self._pending += 1
                if self._pending >= cfg.retrain_every or self._fitted == 0:
                    self._pending = 0
                    self._initial_fit(sample)
            gamma = self.trust.refresh()
            if gamma >= cfg.theta:
                self.trust.commit_phase()
                self._event("phase_complete", sample, phase=0, batch=len(self.batch), gamma=gamma)
                self.phase = 1
                self.batch = []
        elif dec.window_mean > cfg.gamma:
            if self.batch:
                self._event("clear", sample, phase=self.phase, batch=len(self.batch))
            self.batch = []
        elif gamma < cfg.theta and len(self.batch) >= cfg.k_min:
            self._online_update(sample)
            gamma = self.trust.refresh()

        t = self.trust
        return StepRecord(
            sample.ref, sample.key, sample.time, y, dec.window_mean, dec.is_attack,
            choice, self.phase, gamma, t.c_rep, t.c_gen, t.delta, t.kappa,
        )


def _jsonable(ref):
    return list(ref) if isinstance(ref, tuple) else ref


@dataclass
class ReplayResult:
    config: SsidConfig
    steps: list[StepRecord]
    events: list[dict]
    model: dict
    malicious_selected: list = field(default_factory=list)

    @property
    def completion_index(self) -> int | None:
        for i, s in enumerate(self.steps):
            if s.phase >= 1:
                return i
        return None

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "config.json", "w", encoding="utf-8") as fh:
            json.dump(self.config.to_dict(), fh, indent=2, sort_keys=True)
        with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
            for e in self.events:
                fh.write(json.dumps(e, sort_keys=True) + "\n")
        with open(out / "scores.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["ref", "key", "time", "y", "window_mean", "is_attack", "selection", "phase"])
            for s in self.steps:
                ref = s.ref if not isinstance(s.ref, tuple) else s.ref[1]
                w.writerow([ref, "" if s.key is None else s.key, repr(s.time), repr(s.y),
                            repr(s.window_mean), int(s.is_attack), s.selection, s.phase])
        with open(out / "trust.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "gamma", "c_rep", "c_gen", "delta", "kappa"])
            for s in self.steps:
                w.writerow([repr(v) for v in (s.time, s.gamma, s.c_rep, s.c_gen, s.delta, s.kappa)])
        with open(out / "model.json", "w", encoding="utf-8") as fh:
            json.dump(self.model, fh, sort_keys=True)


def replay(records: Sequence[PacketRecord], config: SsidConfig, engine: SsidEngine | None = None) -> ReplayResult:
    engine = engine or SsidEngine(config)
    steps = [engine.step(s) for s in build_samples(records, config)]
    return ReplayResult(config, steps, engine.events, engine.detector.to_dict(), engine.malicious_selected)


def run_samples(samples: Iterable[Sample], config: SsidConfig) -> tuple[SsidEngine, list[StepRecord]]:
    engine = SsidEngine(config)
    return engine, [engine.step(s) for s in samples]
