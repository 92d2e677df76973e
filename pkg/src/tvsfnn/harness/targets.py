"""Target catalog.

Every target is built from the space's own pairing, so it is continuous on
the space by construction. Composite targets (``sum``, ``product``) combine
catalog entries only.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..network import init
from ..spaces import Functional, SpaceDescriptor

CATALOG = {
    "constant": "g(x) = value",
    "coordinate": "g(x) = x[index] (coefficient index of the discretization)",
    "sin-of-functional": "g(x) = sin(frequency * r(x)), r random with unit dual norm",
    "exp-of-functional": "g(x) = exp(scale * r(x)), r random with unit dual norm",
    "product-of-two-functionals": "g(x) = r1(x) * r2(x), both unit dual norm",
    "network-self-target": "g = a random shallow network of the given width in the run's activation",
    "sum": "weighted sum of catalog targets",
    "product": "product of catalog targets",
}


class Target:
    """Vectorized target ``g(X)`` with a JSON-able description."""

    def __init__(self, fn, spec: dict):
        self._fn = fn
        self.spec = spec

    def __call__(self, X):
        return np.asarray(self._fn(np.atleast_2d(np.asarray(X, dtype=float))), dtype=float)


def unit_functional(space: SpaceDescriptor, seed: int) -> Functional:
    rng = np.random.default_rng(seed)
    rep = rng.standard_normal(space.dual_dim)
    return Functional(space, rep / float(space.dual_norm_of(rep)))


def build_target(spec: dict, space: SpaceDescriptor, activation=None, path: str = "target") -> Target:
    if not isinstance(spec, dict) or "id" not in spec:
        raise ConfigError("target must be an object with an 'id'", field=path)
    tid = spec["id"]
    seed = int(spec.get("seed", 0))
    if tid == "constant":
        value = float(spec.get("value", 1.0))
        return Target(lambda X: np.full(X.shape[0], value), spec)
    if tid == "coordinate":
        index = int(spec.get("index", 0))
        if not 0 <= index < space.dim:
            raise ConfigError(f"coordinate index {index} outside 0..{space.dim - 1}", field=f"{path}.index")
        return Target(lambda X: X[:, index].copy(), spec)
    if tid == "sin-of-functional":
        k = unit_functional(space, seed).kernel
        freq = float(spec.get("frequency", 1.0))
        return Target(lambda X: np.sin(freq * (X @ k)), spec)
    if tid == "exp-of-functional":
        k = unit_functional(space, seed).kernel
        scale = float(spec.get("scale", 1.0))
        return Target(lambda X: np.exp(scale * (X @ k)), spec)
    if tid == "product-of-two-functionals":
        k1 = unit_functional(space, seed).kernel
        k2 = unit_functional(space, seed + 1).kernel
        return Target(lambda X: (X @ k1) * (X @ k2), spec)
    if tid == "network-self-target":
        if activation is None:
            raise ConfigError("network-self-target needs an activation", field=path)
        net = init(space, activation, int(spec.get("width", 3)), seed=seed,
                   scale=float(spec.get("scale", 1.0)))
        return Target(net, spec)
    if tid in ("sum", "product"):
        key = "terms" if tid == "sum" else "factors"
        parts = spec.get(key)
        if not isinstance(parts, list) or not parts:
            raise ConfigError(f"{tid} target needs a nonempty '{key}' list", field=f"{path}.{key}")
        built = [build_target(p, space, activation, f"{path}.{key}[{i}]") for i, p in enumerate(parts)]
        if tid == "sum":
            weights = [float(w) for w in spec.get("weights", [1.0] * len(built))]
            if len(weights) != len(built):
                raise ConfigError("weights must match terms", field=f"{path}.weights")
            return Target(lambda X: sum(w * t(X) for w, t in zip(weights, built)), spec)

        def prod(X):
            out = np.ones(X.shape[0])
            for t in built:
                out = out * t(X)
            return out

        return Target(prod, spec)
    raise ConfigError(f"unknown target id {tid!r}; choose from {sorted(CATALOG)}", field=f"{path}.id")
