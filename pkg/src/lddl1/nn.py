"""Small fully connected network with LDD-L1 regularized hidden layers.

Each layer stores ``W`` as (fan_in x units) so that column ``i`` is the
weight vector of unit ``i``. The regularizer acts on hidden-layer weights
only; biases and the output layer are left alone. Training is plain
(sub)gradient descent, full batch by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite
from .overlap import overlap_score
from .regularizer import l1_subgradient, l1_value, ldd_gradient, ldd_value

ACTIVATIONS = ("tanh", "relu", "sigmoid")
LOSSES = ("squared", "softmax-cross-entropy")


@dataclass
class MlpSpec:
    layer_dims: list
    activation: str = "tanh"
    loss: str = "softmax-cross-entropy"
    lam: float = 0.0
    gamma: float = 1.0
    seed: int = 0
    ridge: float = 1e-8

    def __post_init__(self):
        self.layer_dims = [int(v) for v in self.layer_dims]
        if len(self.layer_dims) < 3:
            raise ValueError("need input, at least one hidden, and output sizes")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lam and gamma must be nonnegative")
        for fan_in, units in zip(self.layer_dims[:-2], self.layer_dims[1:-1]):
            if units > fan_in:
                raise ValueError(f"hidden layer with {units} units exceeds its "
                                 f"fan-in {fan_in}; its Gram would be singular")

    @property
    def n_hidden(self) -> int:
        return len(self.layer_dims) - 2


@dataclass
class MlpParams:
    weights: list
    biases: list

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_params(spec: MlpSpec) -> MlpParams:
    rng = np.random.default_rng(spec.seed)
    ws, bs = [], []
    for fan_in, units in zip(spec.layer_dims[:-1], spec.layer_dims[1:]):
        ws.append(rng.standard_normal((fan_in, units)) / math.sqrt(fan_in))
        bs.append(np.zeros(units))
    return MlpParams(ws, bs)


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return 1.0 / (1.0 + np.exp(-z))


def _act_grad(name, z, h):
    if name == "tanh":
        return 1.0 - h * h
    if name == "relu":
        return (z > 0).astype(float)
    return h * (1.0 - h)


def forward(params: MlpParams, X, activation: str = "tanh"):
    """Forward pass on a batch (features x samples).

    Returns ``(output, cache)`` where ``cache`` is a list of
    ``(pre_activation, activation)`` per layer, starting with the input.
    """
    H = np.asarray(X, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.shape[0] != params.weights[0].shape[0]:
        raise DimensionMismatch(f"input has {H.shape[0]} features, network "
                                f"expects {params.weights[0].shape[0]}")
    cache = [(None, H)]
    last = len(params.weights) - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        Z = W.T @ H + b[:, None]
        H = Z if l == last else _act(activation, Z)
        cache.append((Z, H))
    return H, cache


def _softmax(Z):
    Z = Z - Z.max(axis=0, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=0, keepdims=True)


def _one_hot(y, k):
    y = np.asarray(y, dtype=int)
    Y = np.zeros((k, y.size))
    Y[y, np.arange(y.size)] = 1.0
    return Y


def _targets(spec, Y, k):
    Y = np.asarray(Y)
    if spec.loss == "softmax-cross-entropy" and Y.ndim == 1:
        return _one_hot(Y, k)
    Y = np.asarray(Y, dtype=float)
    return Y[None, :] if Y.ndim == 1 else Y


def data_loss(spec: MlpSpec, params: MlpParams, X, Y) -> float:
    out, _ = forward(params, X, spec.activation)
    T = _targets(spec, Y, out.shape[0])
    n = out.shape[1]
    if spec.loss == "squared":
        return 0.5 * float(np.sum((out - T) ** 2)) / n
    Z = out - out.max(axis=0, keepdims=True)
    logp = Z - np.log(np.exp(Z).sum(axis=0, keepdims=True))
    return -float(np.sum(T * logp)) / n


def regularizer_value(spec: MlpSpec, params: MlpParams) -> float:
    total = 0.0
    for l, W in enumerate(params.weights[:spec.n_hidden]):
        try:
            ldd = ldd_value(W)
        except NotPositiveDefinite:
            try:
                ldd = ldd_value(W, ridge=spec.ridge)
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(f"layer {l}: {exc}") from None
        total += ldd + spec.gamma * l1_value(W)
    return total


def total_objective(spec: MlpSpec, params: MlpParams, X, Y) -> float:
    """Mean data loss plus ``lam`` times the summed hidden-layer regularizer."""
    if np.asarray(X).shape[-1] == 0:
        raise ValueError("empty batch")
    val = data_loss(spec, params, X, Y)
    if spec.lam:
        val += spec.lam * regularizer_value(spec, params)
    return val


def data_gradient(spec: MlpSpec, params: MlpParams, X, Y):
    """Backprop gradient of the mean data loss. Returns ``(dW list, db list)``."""
    out, cache = forward(params, X, spec.activation)
    T = _targets(spec, Y, out.shape[0])
    n = out.shape[1]
    if spec.loss == "squared":
        delta = (out - T) / n
    else:
        delta = (_softmax(out) - T) / n
    dWs, dbs = [], []
    for l in range(len(params.weights) - 1, -1, -1):
        H_prev = cache[l][1]
        dWs.append(H_prev @ delta.T)
        dbs.append(delta.sum(axis=1))
        if l > 0:
            Z, H = cache[l]
            delta = (params.weights[l] @ delta) * _act_grad(spec.activation, Z, H)
    return dWs[::-1], dbs[::-1]


def regularizer_gradient(spec: MlpSpec, W, layer: int = 0):
    try:
        g = ldd_gradient(W)
    except NotPositiveDefinite:
        try:
            g = ldd_gradient(W, ridge=spec.ridge)
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(f"layer {layer}: {exc}") from None
    return g + spec.gamma * l1_subgradient(W)


def objective_gradient(spec: MlpSpec, params: MlpParams, X, Y):
    """(Sub)gradient of :func:`total_objective`; biases see the data loss only."""
    dWs, dbs = data_gradient(spec, params, X, Y)
    if spec.lam:
        for l in range(spec.n_hidden):
            dWs[l] = dWs[l] + spec.lam * regularizer_gradient(spec, params.weights[l], l)
    return dWs, dbs


def subgradient_step(spec: MlpSpec, params: MlpParams, X, Y, step: float) -> MlpParams:
    if not step > 0:
        raise ValueError("step must be positive")
    dWs, dbs = objective_gradient(spec, params, X, Y)
    new = params.copy()
    for l in range(len(new.weights)):
        new.weights[l] -= step * dWs[l]
        new.biases[l] -= step * dbs[l]
    return new


@dataclass
class TrainTrace:
    objective: list = field(default_factory=list)
    data_loss: list = field(default_factory=list)
    overlap: list = field(default_factory=list)      # per epoch, one value per hidden layer
    gram_condition: list = field(default_factory=list)
    step: list = field(default_factory=list)

    def to_tsv(self) -> str:
        nl = len(self.overlap[0]) if self.overlap else 0
        head = ["epoch", "objective", "data_loss", "step"]
        head += [f"overlap_layer{l}" for l in range(nl)]
        lines = ["\t".join(head)]
        for e in range(len(self.objective)):
            row = [str(e), repr(self.objective[e]), repr(self.data_loss[e]), repr(self.step[e])]
            row += [repr(v) for v in self.overlap[e]]
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"


def _hidden_stats(spec, params, tau):
    ov, cond = [], []
    for W in params.weights[:spec.n_hidden]:
        ov.append(overlap_score(W, tau).aggregate if W.shape[1] >= 2 else 0.0)
        cond.append(float(np.linalg.cond(W.T @ W)))
    return ov, cond


def train_mlp(spec: MlpSpec, X, Y, epochs: int = 200, step: float = 0.1,
              schedule: str = "halve", batch_size: int | None = None,
              tau: float = 1e-3, params: MlpParams | None = None):
    """Full-batch subgradient training; returns ``(params, trace)``.

    With ``schedule="halve"`` the step is halved whenever the objective has
    gone up on two consecutive epochs. ``batch_size`` switches to
    minibatches drawn in a seeded order.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y)
    if X.shape[-1] == 0:
        raise ValueError("empty dataset")
    if schedule not in ("constant", "halve"):
        raise ValueError(f"unknown step schedule {schedule!r}")
    params = init_params(spec) if params is None else params.copy()
    rng = np.random.default_rng(spec.seed)
    trace = TrainTrace()
    n = X.shape[1]
    ups = 0
    prev = total_objective(spec, params, X, Y)
    for _ in range(epochs):
        if batch_size is None or batch_size >= n:
            params = subgradient_step(spec, params, X, Y, step)
        else:
            order = rng.permutation(n)
            for s in range(0, n, batch_size):
                idx = order[s:s + batch_size]
                params = subgradient_step(spec, params, X[:, idx], Y[..., idx], step)
        obj = total_objective(spec, params, X, Y)
        if not np.isfinite(obj):
            raise FloatingPointError(f"objective became non-finite at epoch {len(trace.objective)}")
        ov, cond = _hidden_stats(spec, params, tau)
        trace.objective.append(obj)
        trace.data_loss.append(data_loss(spec, params, X, Y))
        trace.overlap.append(ov)
        trace.gram_condition.append(cond)
        trace.step.append(step)
        ups = ups + 1 if obj > prev else 0
        if schedule == "halve" and ups >= 2:
            step *= 0.5
            ups = 0
        prev = obj
    return params, trace


def predict(spec: MlpSpec, params: MlpParams, X) -> np.ndarray:
    out, _ = forward(params, X, spec.activation)
    if spec.loss == "softmax-cross-entropy":
        return np.argmax(out, axis=0)
    return out


def two_class_task(n: int = 200, d: int = 8, seed: int = 0, sep: float = 2.0):
    """Two Gaussian blobs whose means differ along a few input coordinates."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    mu = np.zeros(d)
    mu[: max(1, d // 4)] = sep / 2
    X = rng.standard_normal((d, n)) + np.where(y == 1, 1.0, -1.0)[None, :] * mu[:, None]
    return X, y
