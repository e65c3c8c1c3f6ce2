"""Label-aware evaluation of recorded decisions.

This is the one module that reads ground truth. It turns replay logs (or
in-memory step lists) plus per-packet labels into confusion metrics, ROC
sweeps, per-endpoint balanced accuracy and the two label-assisted baselines.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .core import SsidConfig, build_samples, make_detector
from .detector import SCORERS, DecisionWindow
from .ingest import PacketRecord

LABEL_COLUMN = "label"
OFFLINE_TRAIN_PACKETS = 83_000
INCREMENTAL_PERIOD = 750


class UndefinedRateWarning(RuntimeWarning):
    pass


def load_labels(path) -> np.ndarray:
    """0/1 ground truth per row of a packet CSV, in file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if LABEL_COLUMN not in (reader.fieldnames or []):
            raise ValueError(f"{path}: no {LABEL_COLUMN!r} column")
        labels = [int(float(row[LABEL_COLUMN])) for row in reader]
    out = np.array(labels, dtype=int)
    if not np.isin(out, (0, 1)).all():
        raise ValueError(f"{path}: labels must be 0 or 1")
    return out


def _rate(num: int, den: int, what: str) -> float:
    if den == 0:
        warnings.warn(f"{what} undefined: no samples in its class", UndefinedRateWarning, stacklevel=3)
        return math.nan
    return num / den


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else math.nan

    @property
    def tpr(self) -> float:
        return _rate(self.tp, self.tp + self.fn, "TPR")

    @property
    def tnr(self) -> float:
        return _rate(self.tn, self.tn + self.fp, "TNR")

    @property
    def fpr(self) -> float:
        return _rate(self.fp, self.tn + self.fp, "FPR")

    @property
    def balanced_accuracy(self) -> float:
        return 0.5 * (self.tpr + self.tnr)

    def to_dict(self) -> dict:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UndefinedRateWarning)
            return {
                **asdict(self),
                "accuracy": self.accuracy,
                "tpr": self.tpr,
                "tnr": self.tnr,
                "fpr": self.fpr,
                "balanced_accuracy": self.balanced_accuracy,
            }


def confusion(decisions, labels) -> Confusion:
    d = np.asarray(decisions, dtype=bool)
    y = np.asarray(labels, dtype=bool)
    if d.shape != y.shape:
        raise ValueError(f"decisions and labels differ in length ({d.size} vs {y.size})")
    return Confusion(
        tp=int(np.sum(d & y)),
        fp=int(np.sum(d & ~y)),
        tn=int(np.sum(~d & ~y)),
        fn=int(np.sum(~d & y)),
    )


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def auc(self) -> float:
        if np.isnan(self.tpr).any() or np.isnan(self.fpr).any():
            return math.nan
        order = np.lexsort((self.tpr, self.fpr))
        return float(np.trapezoid(self.tpr[order], self.fpr[order]))

    def rows(self):
        return zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist())


def roc_sweep(scores, labels, thresholds=None) -> RocCurve:
    """Flag ``score > t`` for every threshold ``t``.

    By default the thresholds are every distinct score plus ``-inf`` (all
    flagged, the (1, 1) corner) and ``+inf`` (nothing flagged, (0, 0)), in
    decreasing order, so FPR and TPR are non-decreasing along the curve.
    TPR (FPR) is NaN, with a warning, when there are no positives (negatives).
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if thresholds is None:
        thresholds = np.concatenate([[np.inf], np.unique(s)[::-1], [-np.inf]])
    else:
        thresholds = np.sort(np.asarray(thresholds, dtype=float))[::-1]
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    # counts of flagged positives / negatives via sorted scores
    pos = np.sort(s[y])
    neg = np.sort(s[~y])
    tp = n_pos - np.searchsorted(pos, thresholds, side="right")
    fp = n_neg - np.searchsorted(neg, thresholds, side="right")
    if n_pos == 0:
        warnings.warn("TPR undefined: no positive labels", UndefinedRateWarning, stacklevel=2)
    if n_neg == 0:
        warnings.warn("FPR undefined: no negative labels", UndefinedRateWarning, stacklevel=2)
    tpr = tp / n_pos if n_pos else np.full(thresholds.shape, np.nan)
    fpr = fp / n_neg if n_neg else np.full(thresholds.shape, np.nan)
    return RocCurve(thresholds, fpr.astype(float), tpr.astype(float))


def balanced_accuracy(decisions, labels) -> float:
    return confusion(decisions, labels).balanced_accuracy


# --- per-endpoint evaluation ---------------------------------------------------


def device_truth(
    records: Sequence[PacketRecord], labels, window_seconds: float = metrics.WINDOW_SECONDS
) -> set[tuple[str, int]]:
    """(endpoint, window) pairs with at least one malicious packet involving the endpoint."""
    labels = np.asarray(labels)
    if len(labels) != len(records):
        raise ValueError("one label per packet required")
    hot = set()
    for rec, lab in zip(records, labels):
        if lab:
            w = int(rec.timestamp // window_seconds)
            hot.add((rec.src_id, w))
            hot.add((rec.dst_id, w))
    return hot


def device_eval(decisions: dict, truth: set) -> dict[str, Confusion]:
    """Confusion per endpoint from ``{(endpoint, window): flagged}``."""
    per: dict[str, list] = {}
    for (ep, w), flagged in decisions.items():
        per.setdefault(ep, []).append((bool(flagged), (ep, w) in truth))
    out = {}
    for ep, pairs in sorted(per.items()):
        d, y = zip(*pairs)
        out[ep] = confusion(d, y)
    return out


def endpoint_balanced_accuracy(conf: Confusion) -> float:
    """Balanced accuracy that falls back to the defined rate for one-class endpoints."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedRateWarning)
        tpr, tnr = conf.tpr, conf.tnr
    if math.isnan(tpr):
        return tnr
    if math.isnan(tnr):
        return tpr
    return 0.5 * (tpr + tnr)


# --- reports -------------------------------------------------------------------


@dataclass
class EvalReport:
    confusion: Confusion
    roc_y: RocCurve | None = None
    roc_window: RocCurve | None = None
    endpoints: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {"overall": self.confusion.to_dict(), "meta": self.meta}
        if self.roc_y is not None:
            out["auc_y"] = self.roc_y.auc
        if self.roc_window is not None:
            out["auc_window"] = self.roc_window.auc
        if self.endpoints:
            out["endpoints"] = {
                ep: {**c.to_dict(), "balanced_accuracy": endpoint_balanced_accuracy(c)}
                for ep, c in self.endpoints.items()
            }
        return out

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(json_safe(self.summary()), fh, indent=2, sort_keys=True)
        for name, curve in (("roc_y", self.roc_y), ("roc_window", self.roc_window)):
            if curve is None:
                continue
            with open(out / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["threshold", "fpr", "tpr"])
                w.writerows(curve.rows())
        if self.endpoints:
            with open(out / "endpoints.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["endpoint", "tp", "fp", "tn", "fn", "balanced_accuracy"])
                for ep, c in self.endpoints.items():
                    w.writerow([ep, c.tp, c.fp, c.tn, c.fn, endpoint_balanced_accuracy(c)])


def json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    return obj


def evaluate_traffic(y, window_mean, is_attack, labels, meta=None) -> EvalReport:
    """Per-packet report; all arrays are aligned with the labels."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedRateWarning)
        roc_y = roc_sweep(y, labels)
        roc_w = roc_sweep(window_mean, labels)
    return EvalReport(confusion(is_attack, labels), roc_y, roc_w, meta=meta or {})


def evaluate_device(steps, records, labels, window_seconds=metrics.WINDOW_SECONDS, meta=None) -> EvalReport:
    """Per-window report. ``steps`` carry ``ref = (endpoint, window)`` and ``is_attack``."""
    truth = device_truth(records, labels, window_seconds)
    decisions = {tuple(s.ref): s.is_attack for s in steps}
    keys = list(decisions)
    y_true = [k in truth for k in keys]
    overall = confusion([decisions[k] for k in keys], y_true)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedRateWarning)
        roc_y = roc_sweep([s.y for s in steps], [tuple(s.ref) in truth for s in steps])
        roc_w = roc_sweep([s.window_mean for s in steps], [tuple(s.ref) in truth for s in steps])
    return EvalReport(overall, roc_y, roc_w, device_eval(decisions, truth), meta or {})


def evaluate_steps(steps, records, labels, config: SsidConfig, meta=None) -> EvalReport:
    if config.task == "device":
        return evaluate_device(steps, records, labels, config.window_seconds, meta)
    return evaluate_traffic(
        [s.y for s in steps], [s.window_mean for s in steps], [s.is_attack for s in steps], labels, meta
    )


@dataclass
class LoggedStep:
    """A decision read back from a replay's ``scores.csv``."""

    ref: object
    y: float
    window_mean: float
    is_attack: bool


def load_scores(path) -> list[LoggedStep]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ref = (row["key"], int(row["ref"])) if row["key"] else int(row["ref"])
            out.append(LoggedStep(ref, float(row["y"]), float(row["window_mean"]), row["is_attack"] == "1"))
    return out


# --- label-assisted baselines ------------------------------------------------


@dataclass
class _Scored:
    ref: object
    y: float
    window_mean: float
    is_attack: bool


def _score_stream(detector, samples, config: SsidConfig) -> list[_Scored]:
    score = SCORERS[config.task]
    win = DecisionWindow(config.window_i, config.gamma)
    out = []
    for s in samples:
        y = score(s.x, detector.reconstruct(s.x))
        d = win.push(y, s.key)
        out.append(_Scored(s.ref, y, d.window_mean, d.is_attack))
    return out


def _traffic_only(config: SsidConfig) -> None:
    if config.task != "traffic":
        raise ValueError("baselines are defined for the per-packet traffic task")


def baseline_offline(
    records: Sequence[PacketRecord],
    labels,
    config: SsidConfig,
    train_packets: int = OFFLINE_TRAIN_PACKETS,
) -> EvalReport:
    """Fit once on the first ``train_packets`` labelled-benign packets, score the rest.

    The training prefix ends at the last packet used for training; when the
    stream holds fewer benign packets than requested, all of them up to the
    first attack are used.
    """
    _traffic_only(config)
    labels = np.asarray(labels)
    if len(labels) != len(records):
        raise ValueError("one label per packet required")
    samples = list(build_samples(records, config))
    benign = np.flatnonzero(labels == 0)
    if benign.size == 0:
        raise ValueError("no benign packets to train on")
    first_attack = np.flatnonzero(labels == 1)
    if train_packets > benign.size and first_attack.size:
        benign = benign[benign < first_attack[0]]
    chosen = benign[:train_packets]
    end = int(chosen[-1]) + 1
    if end >= len(samples):
        raise ValueError("training prefix covers the whole stream; nothing left to score")
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    detector = make_detector(config, rng)
    detector.initial_fit(np.array([samples[i].x for i in chosen]))
    scored = _score_stream(detector, samples[end:], config)
    meta = {"baseline": "offline", "train_packets": int(chosen.size), "scored_from": end}
    return evaluate_traffic(
        [s.y for s in scored], [s.window_mean for s in scored], [s.is_attack for s in scored], labels[end:], meta
    )


def baseline_incremental(
    records: Sequence[PacketRecord],
    labels,
    config: SsidConfig,
    period: int = INCREMENTAL_PERIOD,
) -> EvalReport:
    """Retrain every ``period`` packets on the packets the model itself called normal.

    The first ``period`` packets are assumed normal and give the cold-start
    fit; they are not scored. Labels are used only for the final report.
    """
    _traffic_only(config)
    if period < 1:
        raise ValueError("period must be >= 1")
    labels = np.asarray(labels)
    if len(labels) != len(records):
        raise ValueError("one label per packet required")
    samples = list(build_samples(records, config))
    if len(samples) <= period:
        raise ValueError("stream shorter than one training period")
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    detector = make_detector(config, rng)
    detector.initial_fit(np.array([s.x for s in samples[:period]]))
    score = SCORERS[config.task]
    win = DecisionWindow(config.window_i, config.gamma)
    scored, normal, n_retrain = [], [], 0
    for i, s in enumerate(samples[period:], start=1):
        y = score(s.x, detector.reconstruct(s.x))
        d = win.push(y, s.key)
        scored.append(_Scored(s.ref, y, d.window_mean, d.is_attack))
        if not d.is_attack:
            normal.append(s.x)
        if i % period == 0:
            if normal:
                detector.initial_fit(np.array(normal))
                n_retrain += 1
            normal = []
    meta = {"baseline": "incremental", "period": period, "retrains": n_retrain, "scored_from": period}
    return evaluate_traffic(
        [s.y for s in scored], [s.window_mean for s in scored], [s.is_attack for s in scored], labels[period:], meta
    )
