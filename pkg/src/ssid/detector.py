"""Intrusion scores, windowed decisions and the two reconstruction models.

Both models reconstruct the metric vector; the score is the mean (traffic
task) or max (device task) absolute reconstruction error. Decisions average
the last ``I`` scores and compare with ``gamma``.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import aadrnn

logger = logging.getLogger(__name__)

GAMMA = 0.25
WINDOW_I = 10


def score_traffic(x, x_hat) -> float:
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(x_hat, dtype=float))
    return float(np.clip(d.mean(), 0.0, 1.0))


def score_device(x, x_hat) -> float:
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(x_hat, dtype=float))
    return float(np.clip(d.max(), 0.0, 1.0))


SCORERS = {"traffic": score_traffic, "device": score_device}


@dataclass(frozen=True)
class Decision:
    y: float
    window_mean: float
    is_attack: bool


def decide(scores, gamma: float = GAMMA) -> Decision:
    """Decision for the newest of ``scores`` (the last ``I`` of them)."""
    scores = list(scores)
    if not scores:
        raise ValueError("need at least one score")
    mean = float(np.mean(scores))
    return Decision(scores[-1], mean, mean > gamma)


class DecisionWindow:
    """Per-key sliding window of the last ``size`` scores."""

    def __init__(self, size: int = WINDOW_I, gamma: float = GAMMA):
        if size < 1:
            raise ValueError("window size must be >= 1")
        self.size = size
        self.gamma = gamma
        self._windows: dict = {}

    def push(self, y: float, key=None) -> Decision:
        win = self._windows.setdefault(key, deque(maxlen=self.size))
        win.append(y)
        return decide(win, self.gamma)


# --- multilayer perceptron ---------------------------------------------------


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class MlpModel:
    """``M`` dense sigmoid layers of ``M`` units, with Adam moment estimates."""

    weights: tuple
    biases: tuple
    m1: tuple = ()
    v1: tuple = ()
    steps: int = 0

    @classmethod
    def init(cls, m: int, rng=None, zero: bool = False) -> "MlpModel":
        rng = np.random.default_rng(rng)
        lim = np.sqrt(6.0 / (2 * m))
        ws = tuple(np.zeros((m, m)) if zero else rng.uniform(-lim, lim, (m, m)) for _ in range(m))
        bs = tuple(np.zeros(m) for _ in range(m))
        return cls(ws, bs)

    @property
    def m(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def activations(self, x) -> list:
        acts = [np.atleast_2d(np.asarray(x, dtype=float))]
        for w, b in zip(self.weights, self.biases):
            acts.append(_sigmoid(acts[-1] @ w + b))
        return acts

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        out = self.activations(x)[-1]
        return out[0] if x.ndim == 1 else out

    def loss(self, x) -> float:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return float(np.mean((self.forward(x) - x) ** 2))

    def to_dict(self) -> dict:
        return {
            "format": "ssid-mlp",
            "version": 1,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }


def _gradients(model: MlpModel, x: np.ndarray):
    acts = model.activations(x)
    # d mean-squared-error / d output
    delta = 2.0 * (acts[-1] - x) / x.size
    gw, gb = [], []
    for layer in range(len(model.weights) - 1, -1, -1):
        out = acts[layer + 1]
        dz = delta * out * (1.0 - out)
        gw.append(acts[layer].T @ dz)
        gb.append(dz.sum(axis=0))
        delta = dz @ model.weights[layer].T
    return gw[::-1], gb[::-1]


def mlp_update(
    model: MlpModel,
    x,
    epochs: int = 20,
    lr: float = 1e-3,
    batch_size: int = 32,
    rng=None,
    betas=(0.9, 0.999),
    eps: float = 1e-8,
) -> MlpModel:
    """Run Adam on the reconstruction loss, starting from the current weights.

    A non-finite loss aborts the update and the incoming model is returned.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty batch")
    rng = np.random.default_rng(rng)
    params = list(model.weights) + list(model.biases)
    m1 = list(model.m1) or [np.zeros_like(p) for p in params]
    v1 = list(model.v1) or [np.zeros_like(p) for p in params]
    params = [p.copy() for p in params]
    n_layers = len(model.weights)
    step = model.steps
    b1, b2 = betas
    for _ in range(epochs):
        order = rng.permutation(x.shape[0])
        for lo in range(0, x.shape[0], batch_size):
            xb = x[order[lo : lo + batch_size]]
            cur = MlpModel(tuple(params[:n_layers]), tuple(params[n_layers:]))
            gw, gb = _gradients(cur, xb)
            step += 1
            for i, g in enumerate(gw + gb):
                m1[i] = b1 * m1[i] + (1 - b1) * g
                v1[i] = b2 * v1[i] + (1 - b2) * g * g
                mhat = m1[i] / (1 - b1**step)
                vhat = v1[i] / (1 - b2**step)
                params[i] = params[i] - lr * mhat / (np.sqrt(vhat) + eps)
    new = MlpModel(tuple(params[:n_layers]), tuple(params[n_layers:]), tuple(m1), tuple(v1), step)
    if not np.isfinite(new.loss(x)):
        logger.warning("non-finite MLP loss, keeping previous weights")
        return model
    return new


# --- learner adapters used by the SSID engine -----------------------------------


@dataclass
class AadrnnDetector:
    """AADRNN behind the learner interface: full refit, then RLS updates."""

    m: int
    params: aadrnn.ActivationParams = field(default_factory=aadrnn.ActivationParams)
    fista_iters: int = 50
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    model: aadrnn.AadrnnModel | None = None

    def __post_init__(self):
        if self.model is None:
            self.model = aadrnn.AadrnnModel.zeros(self.m, self.params)

    @property
    def n_params(self) -> int:
        return self.model.n_params

    def reconstruct(self, x):
        return self.model.forward(x)

    def initial_fit(self, x) -> None:
        self.model = aadrnn.fista_train(self.model, x, self.fista_iters, self.rng)

    def incremental_fit(self, x) -> None:
        self.model = aadrnn.incremental_update(self.model, x)

    def to_dict(self) -> dict:
        return self.model.to_dict()


@dataclass
class MlpDetector:
    """MLP behind the learner interface; every fit continues from current weights."""

    m: int
    epochs: int = 20
    lr: float = 1e-3
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    model: MlpModel | None = None

    def __post_init__(self):
        if self.model is None:
            self.model = MlpModel.init(self.m, self.rng)

    @property
    def n_params(self) -> int:
        return self.model.n_params

    def reconstruct(self, x):
        return self.model.forward(x)

    def initial_fit(self, x) -> None:
        self.model = mlp_update(self.model, x, self.epochs, self.lr, rng=self.rng)

    incremental_fit = initial_fit

    def to_dict(self) -> dict:
        return self.model.to_dict()
