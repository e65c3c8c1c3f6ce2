"""Auto-associative deep random neural network (AADRNN).

The network has ``H = M`` layers of ``M`` clusters. Hidden layers apply the
dense-cluster activation to ``[x, 1] @ W_h``; the output layer is linear.
Hidden layers are fitted once per initial-learning call by a non-negative
lasso (solved with monotone FISTA) that maps a rescaled random projection of
the layer input back onto that input; the solution is used as the layer's
weight matrix. The output layer is an ordinary least-squares fit that is afterwards
kept current with block recursive least squares.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

logger = logging.getLogger(__name__)

RIDGE = 1e-6
COND_LIMIT = 1e12
FORMAT = "ssid-aadrnn"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ActivationParams:
    """Parameters of the dense-cluster activation.

    p : probability that a triggered neuron passes the trigger on
    r : neuron firing rate
    lam_plus, lam_minus : external excitatory / inhibitory spike rates
    """

    p: float = 0.1
    r: float = 0.1
    lam_plus: float = 0.01
    lam_minus: float = 0.01

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if min(self.r, self.lam_plus, self.lam_minus) <= 0:
            raise ValueError("r, lam_plus and lam_minus must be positive")
        # With D = lam_minus + L and a = p (r + lam_plus) the discriminant is
        # non-negative iff D^2 + (2a - 4 lam_plus) D + a^2 >= 0; it can only go
        # negative between two positive roots, which exist iff lam_plus > a.
        a = self.p * (self.r + self.lam_plus)
        if self.lam_plus > a:
            upper = 2 * self.lam_plus - a + 2 * math.sqrt(self.lam_plus * (self.lam_plus - a))
            if self.lam_minus < upper:
                raise ValueError(
                    f"activation discriminant is negative for inputs below "
                    f"{upper - self.lam_minus:.4g}; raise lam_minus or p*(r+lam_plus)"
                )
        if activation(0.0, self) >= 1:
            raise ValueError("activation output at 0 must be below 1")


def activation(lam, params: ActivationParams | None = None):
    """Dense-cluster activation for non-negative input ``lam``.

    Evaluates ``b - sqrt(b^2 - c)`` with ``b = (a + D) / (2D)``,
    ``c = lam_plus / D``, ``D = lam_minus + lam`` and ``a = p (r + lam_plus)``,
    written as ``c / (b + sqrt(b^2 - c))`` to avoid cancellation for large
    inputs.
    """
    params = params or ActivationParams()
    lam = np.asarray(lam, dtype=float)
    d = params.lam_minus + lam
    b = (params.p * (params.r + params.lam_plus) + d) / (2 * d)
    c = params.lam_plus / d
    root = np.sqrt(np.maximum(b * b - c, 0.0))
    out = c / (b + root)
    return out if out.ndim else float(out)


def adj(z):
    """Rescale each column of ``z`` onto [0, 1]; constant columns become 0."""
    z = np.asarray(z, dtype=float)
    lo = z.min(axis=0)
    span = z.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (z - lo) / safe, 0.0)


def _with_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def lasso_objective(a, w, b, l1: float = 1.0) -> float:
    r = a @ w - b
    return float(np.sum(r * r) + l1 * np.abs(w).sum())


def nn_lasso_fista(a, b, l1: float = 1.0, iters: int = 50, history: bool = False):
    """Minimise ``||a w - b||_F^2 + l1 ||w||_1`` over ``w >= 0``.

    Uses the monotone variant of FISTA, so the objective never increases
    between iterations. Returns ``w`` (and the objective trajectory, starting
    from ``w = 0``, if ``history``).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lip = 2.0 * np.linalg.norm(a, 2) ** 2
    x = np.zeros((a.shape[1], b.shape[1]))
    f_x = lasso_objective(a, x, b, l1)
    traj = [f_x]
    if lip == 0:
        return (x, traj) if history else x
    ata, atb = a.T @ a, a.T @ b
    y, x_prev, t = x.copy(), x.copy(), 1.0
    for _ in range(iters):
        grad = 2.0 * (ata @ y - atb)
        z = np.maximum(y - (grad + l1) / lip, 0.0)
        f_z = lasso_objective(a, z, b, l1)
        x_prev = x
        if f_z <= f_x:
            x, f_x = z, f_z
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        traj.append(f_x)
    return (x, traj) if history else x


def _inverse_gram(g: np.ndarray) -> np.ndarray:
    gram = g.T @ g
    if np.linalg.cond(gram) > COND_LIMIT:
        logger.debug("singular Gram matrix, adding ridge %.0e", RIDGE)
        gram = gram + RIDGE * np.eye(gram.shape[0])
    inv = np.linalg.inv(gram)
    return (inv + inv.T) / 2


@dataclass(frozen=True)
class AadrnnModel:
    m: int
    weights: tuple
    params: ActivationParams = field(default_factory=ActivationParams)
    op: np.ndarray | None = None

    @classmethod
    def zeros(cls, m: int, params: ActivationParams | None = None) -> "AadrnnModel":
        w = tuple(np.zeros((m + 1, m)) for _ in range(m))
        return cls(m, w, params or ActivationParams())

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_params(self) -> int:
        return self.n_layers * (self.m + 1) * self.m

    def hidden(self, x) -> np.ndarray:
        """Output of the last hidden layer for a batch ``x`` of shape (k, M)."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        for w in self.weights[:-1]:
            h = activation(_with_bias(h) @ w, self.params)
        return h

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = _with_bias(self.hidden(x)) @ self.weights[-1]
        return out[0] if x.ndim == 1 else out

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "m": self.m,
            "params": asdict(self.params),
            "weights": [w.tolist() for w in self.weights],
            "op_matrix": None if self.op is None else self.op.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AadrnnModel":
        if d.get("format") != FORMAT or d.get("version") != FORMAT_VERSION:
            raise ValueError("not a version-1 AADRNN document")
        op = d.get("op_matrix")
        return cls(
            int(d["m"]),
            tuple(np.array(w, dtype=float) for w in d["weights"]),
            ActivationParams(**d["params"]),
            None if op is None else np.array(op, dtype=float),
        )


def fista_train(model: AadrnnModel, x, iters: int = 50, rng=None, l1: float = 1.0) -> AadrnnModel:
    """Fit every layer on the benign rows ``x`` (k, M); returns a new model."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty batch")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(rng)
    m, params = model.m, model.params
    layers = []
    h = x
    for _ in range(model.n_layers - 1):
        w_r = rng.uniform(size=(m, m))
        a = _with_bias(adj(activation(h @ w_r, params)))
        w = nn_lasso_fista(a, h, l1, iters)
        peak = (_with_bias(h) @ w).max()
        if peak > 0:
            w = 0.1 * w / peak
        layers.append(w)
        h = activation(_with_bias(h) @ w, params)
    layers.append(model.weights[-1])
    return fit_output(replace(model, weights=tuple(layers)), x)


def fit_output(model: AadrnnModel, x) -> AadrnnModel:
    """Least-squares fit of the output layer on ``x``, keeping the hidden layers.

    Also sets the operation matrix to the inverse Gram matrix of the
    last hidden layer's output (with the ridge when it is near singular).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = _with_bias(model.hidden(x))
    op = _inverse_gram(g)
    w_out = op @ g.T @ x
    return replace(model, weights=model.weights[:-1] + (w_out,), op=op)


def incremental_update(model: AadrnnModel, x) -> AadrnnModel:
    """Block recursive least-squares update of the output layer on rows ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.size == 0:
        return model
    if model.op is None:
        raise ValueError("model has no operation matrix; run fista_train first")
    g = _with_bias(model.hidden(x))
    go = g @ model.op
    s = np.eye(g.shape[0]) + go @ g.T
    if np.linalg.cond(s) > COND_LIMIT:
        logger.warning("singular update matrix, adding ridge %.0e", RIDGE)
        s = s + RIDGE * np.eye(s.shape[0])
    op = model.op - go.T @ np.linalg.solve(s, go)
    op = (op + op.T) / 2
    w_out = model.weights[-1]
    w_out = w_out + op @ g.T @ (x - g @ w_out)
    return replace(model, weights=model.weights[:-1] + (w_out,), op=op)


def learning_error(scores) -> float:
    """Mean detector output over a learning batch."""
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("learning error of an empty batch")
    return float(scores.mean())
