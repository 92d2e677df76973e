"""Shallow networks ``sum_i c_i sigma(f_i(x) - theta_i)`` over an input space.

The hidden-layer functionals are trained directly in their dual
representation: row ``i`` of ``duals`` is the representation of ``f_i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import activations as act
from .errors import DivergenceError, InvalidSpaceError, NonFiniteError, SpaceMismatchError
from .spaces import Element, Functional, SpaceDescriptor, stack

OPTIMIZERS = ("gd", "momentum")
_CHUNK = 1 << 21


@dataclass(frozen=True, eq=False)
class ShallowNetwork:
    space: SpaceDescriptor
    activation: object
    c: np.ndarray
    duals: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        theta = np.array(self.theta, dtype=float).ravel()
        duals = np.array(self.duals, dtype=float).reshape(len(c), self.space.dual_dim)
        if len(c) < 1 or len(theta) != len(c):
            raise InvalidSpaceError("network needs r >= 1 neurons with matching c and theta")
        for arr in (c, theta, duals):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteError("network parameters must be finite")
            arr.flags.writeable = False
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "duals", duals)

    @classmethod
    def from_neurons(cls, space, activation, neurons) -> "ShallowNetwork":
        neurons = list(neurons)
        for _, f, _ in neurons:
            if f.space != space:
                raise SpaceMismatchError("every neuron functional must live on the network's space")
        return cls(space, activation, [n[0] for n in neurons],
                   np.vstack([n[1].rep for n in neurons]), [n[2] for n in neurons])

    @property
    def width(self) -> int:
        return len(self.c)

    @property
    def neurons(self):
        return [(float(c), Functional(self.space, f), float(t))
                for c, f, t in zip(self.c, self.duals, self.theta)]

    def pre_activations(self, X: np.ndarray) -> np.ndarray:
        return X @ self.space.kernel(self.duals).T - self.theta

    def __call__(self, X):
        """Evaluate on a coefficient matrix (one row per input) or a single row."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.space.dim:
            raise SpaceMismatchError(f"inputs have {X.shape[1]} coefficients, space needs {self.space.dim}")
        kernel = self.space.kernel(self.duals).T
        rows = max(1, _CHUNK // self.width)
        out = np.empty(X.shape[0])
        for i in range(0, X.shape[0], rows):
            Z = X[i:i + rows] @ kernel - self.theta
            # numpy reduces a contiguous axis pairwise, in index order
            out[i:i + rows] = np.sum(self.c * self.activation(Z), axis=1)
        return float(out[0]) if single else out

    def with_params(self, c=None, duals=None, theta=None) -> "ShallowNetwork":
        return ShallowNetwork(self.space, self.activation,
                              self.c if c is None else c,
                              self.duals if duals is None else duals,
                              self.theta if theta is None else theta)

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.c, self.theta, self.duals.ravel()])

    def from_vector(self, vec) -> "ShallowNetwork":
        r = self.width
        vec = np.asarray(vec, dtype=float)
        return self.with_params(vec[:r], vec[2 * r:].reshape(r, -1), vec[r:2 * r])

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "activation": self.activation.to_dict(),
            "c": self.c.tolist(),
            "theta": self.theta.tolist(),
            "duals": self.duals.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShallowNetwork":
        space = SpaceDescriptor.from_dict(data["space"])
        c = data["c"]
        return cls(space, act.from_dict(data["activation"]), c,
                   np.reshape(data["duals"], (len(c), space.dual_dim)), data["theta"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "ShallowNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))


def forward(net: ShallowNetwork, x: Element) -> float:
    if x.space != net.space:
        raise SpaceMismatchError("input element is not in the network's space")
    return net(x.coeffs)


def init(space: SpaceDescriptor, activation, r: int, seed: int = 0, scale: float = 1.0) -> ShallowNetwork:
    """Parameters i.i.d. uniform in [-scale, scale]."""
    if r < 1:
        raise InvalidSpaceError("width must be >= 1")
    rng = np.random.default_rng(seed)
    c = rng.uniform(-scale, scale, r)
    theta = rng.uniform(-scale, scale, r)
    duals = rng.uniform(-scale, scale, (r, space.dual_dim))
    return ShallowNetwork(space, activation, c, duals, theta)


def grow(net: ShallowNetwork, r: int, seed: int = 0, scale: float = 1.0) -> ShallowNetwork:
    """Append neurons up to width ``r`` with zero output weight.

    The grown network computes exactly the same function, so training it
    continues from the narrower network's loss (nested widths).
    """
    if r < net.width:
        raise InvalidSpaceError(f"cannot shrink width {net.width} to {r}")
    extra = r - net.width
    if extra == 0:
        return net
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-scale, scale, extra)
    duals = rng.uniform(-scale, scale, (extra, net.space.dual_dim))
    return ShallowNetwork(net.space, net.activation, np.concatenate([net.c, np.zeros(extra)]),
                          np.vstack([net.duals, duals]), np.concatenate([net.theta, theta]))


def _as_batch(net, batch):
    if isinstance(batch, tuple) and len(batch) == 2 and isinstance(batch[0], np.ndarray):
        X, y = batch
    else:
        pairs = list(batch)
        if not pairs:
            raise ValueError("batch must be nonempty")
        for x, _ in pairs:
            if x.space != net.space:
                raise SpaceMismatchError("batch element is not in the network's space")
        X = stack([x for x, _ in pairs])
        y = np.array([t for _, t in pairs], dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0 or X.shape[0] != len(y):
        raise ValueError("batch must be nonempty with one target per input")
    return X, y


def mse(net: ShallowNetwork, X, y) -> float:
    res = net(X) - y
    return float(np.mean(res * res))


def gradients(net: ShallowNetwork, batch, subgradient: bool = False) -> dict:
    """Exact gradients of the mean squared error.

    ``batch`` is a list of ``(Element, target)`` pairs or a tuple
    ``(X, y)`` of a coefficient matrix and targets. Returns arrays keyed
    ``c``, ``theta`` and ``duals`` plus the ``loss``.
    """
    X, y = _as_batch(net, batch)
    sigma = net.activation
    if not getattr(sigma, "smooth", False) and not subgradient:
        sigma.derivative(np.zeros(1))  # raises NonSmoothActivationError
    Z = net.pre_activations(X)
    S = sigma(Z)
    dS = sigma.derivative(Z, subgradient=subgradient)
    res = S @ net.c - y
    m = len(y)
    g_out = 2.0 * res / m
    grad_c = g_out @ S
    G = g_out[:, None] * dS * net.c  # d loss / d pre-activation
    grad_theta = -np.sum(G, axis=0)
    grad_duals = net.space.kernel_adjoint(G.T @ X)
    return {"c": grad_c, "theta": grad_theta, "duals": grad_duals, "loss": float(np.mean(res * res))}


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    iterations: int = 1000
    batch_size: int | None = None
    seed: int = 0
    optimizer: str = "gd"
    momentum: float = 0.9
    subgradient: bool = False
    divergence_threshold: float = 1e12

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0")
        if self.iterations < 1:
            raise ValueError("iteration budget must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


def train(net: ShallowNetwork, data, cfg: TrainConfig):
    """Gradient descent on the MSE; returns ``(trained_net, loss_trace)``.

    The trace holds the loss before each update plus the final loss.
    Minibatches (when ``batch_size`` is set) come from a seeded shuffle.
    """
    X, y = _as_batch(net, data)
    rng = np.random.default_rng(cfg.seed)
    m = len(y)
    bs = m if cfg.batch_size is None else max(1, min(cfg.batch_size, m))
    params = net.param_vector()
    velocity = np.zeros_like(params)
    trace = []
    order = np.arange(m)
    cursor = m
    for _ in range(cfg.iterations):
        if bs < m:
            if cursor + bs > m:
                order = rng.permutation(m)
                cursor = 0
            idx = order[cursor:cursor + bs]
            cursor += bs
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        g = gradients(net, (Xb, yb), subgradient=cfg.subgradient)
        loss = g["loss"]
        trace.append(loss)
        if not math.isfinite(loss) or loss > cfg.divergence_threshold:
            raise DivergenceError(f"training diverged (loss {loss:.3g})", trace=np.array(trace),
                                  iteration=len(trace))
        grad = np.concatenate([g["c"], g["theta"], g["duals"].ravel()])
        if cfg.optimizer == "momentum":
            velocity = cfg.momentum * velocity - cfg.learning_rate * grad
            params = params + velocity
        else:
            params = params - cfg.learning_rate * grad
        if not np.all(np.isfinite(params)):
            raise DivergenceError("parameters became non-finite", trace=np.array(trace),
                                  iteration=len(trace))
        net = net.from_vector(params)
    final = mse(net, X, y)
    trace.append(final)
    if not math.isfinite(final) or final > cfg.divergence_threshold:
        raise DivergenceError(f"training diverged (loss {final:.3g})", trace=np.array(trace))
    return net, np.array(trace)
