"""Input spaces, their elements, and continuous linear functionals.

Every space is stored through a finite discretization: matrices by their
entries (row-major), sequence spaces by a prefix of length ``N``, function
spaces by samples on a composite Gauss-Legendre grid. A functional is kept in
its dual representation and pairs with an element as a finite sum, so
``pair(f, x)`` is always ``coeffs @ kernel(rep)`` for a space-dependent linear
map ``kernel``.

Dual pairings implemented here:

============  ===================  ==========================================
kind          element norm          functional (dual) representation
============  ===================  ==========================================
euclidean     2-norm                weight vector w, pairing w . x
matrix        Frobenius             matrix W, pairing trace(W^T X)
lp_seq        discrete l_p          (a_n) in l_q, pairing sum a_n x_n
c0_seq        sup                   (a_n) in l_1, pairing sum a_n x_n
lp_fun        quadrature L_p        g in L_q on the grid, pairing int f g
c_fun         sup over grid         atoms on grid nodes + density samples
============  ===================  ==========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    DegenerateFunctionalError,
    InvalidSpaceError,
    NonFiniteError,
    SpaceMismatchError,
    UnsupportedCombinationError,
)

KINDS = ("euclidean", "matrix", "lp_seq", "c0_seq", "lp_fun", "c_fun")

DEFAULT_NODES = 64
DEFAULT_ORDER = 8


@dataclass(frozen=True)
class Grid:
    """Composite Gauss-Legendre grid on ``[a, b]``.

    ``nodes`` points split into panels of ``order`` points each; when
    ``nodes`` is not a multiple of ``order`` a single panel is used.
    """

    a: float = 0.0
    b: float = 1.0
    nodes: int = DEFAULT_NODES
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.b > self.a):
            raise InvalidSpaceError(f"grid interval must satisfy a < b, got [{self.a}, {self.b}]")
        if self.nodes < 1 or self.order < 1:
            raise InvalidSpaceError("grid node count and panel order must be >= 1")

    @cached_property
    def _rule(self):
        order = self.order if self.nodes % self.order == 0 else self.nodes
        panels = self.nodes // order
        u, w = leggauss(order)
        edges = np.linspace(self.a, self.b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        t = (mid[:, None] + half[:, None] * u[None, :]).ravel()
        wt = (half[:, None] * w[None, :]).ravel()
        t.flags.writeable = False
        wt.flags.writeable = False
        return t, wt

    @property
    def t(self):
        return self._rule[0]

    @property
    def w(self):
        return self._rule[1]


@dataclass(frozen=True)
class SpaceDescriptor:
    """Kind tag plus the discretization parameters of an input space.

    Build these with the factory functions (:func:`euclidean`,
    :func:`matrix`, :func:`lp_seq`, ...) rather than directly.
    """

    kind: str
    shape: tuple = ()
    p: float = 2.0
    decay: float = 1.0
    grid: Grid | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpaceError(f"unknown space kind {self.kind!r}")
        if not self.p >= 1.0 or math.isinf(self.p):
            raise InvalidSpaceError(f"p must lie in [1, inf), got {self.p}")
        if not self.decay > 0:
            raise InvalidSpaceError(f"decay exponent must be > 0, got {self.decay}")
        if self.kind in ("lp_fun", "c_fun"):
            if self.grid is None:
                raise InvalidSpaceError(f"{self.kind} needs a quadrature grid")
            if np.any(self.grid.w <= 0) or np.any(np.diff(self.grid.t) <= 0):
                raise InvalidSpaceError("quadrature weights must be positive and nodes increasing")
        elif not self.shape or min(self.shape) < 1:
            raise InvalidSpaceError(f"{self.kind} needs positive dimensions, got {self.shape}")

    # -- sizes ---------------------------------------------------------------
    @property
    def dim(self) -> int:
        if self.grid is not None:
            return self.grid.nodes
        return int(np.prod(self.shape))

    @property
    def dual_dim(self) -> int:
        # c_fun duals carry atom masses and density samples on the same grid
        return 2 * self.dim if self.kind == "c_fun" else self.dim

    # -- exponents -----------------------------------------------------------
    @property
    def norm_p(self) -> float:
        if self.kind in ("euclidean", "matrix"):
            return 2.0
        if self.kind in ("c0_seq", "c_fun"):
            return math.inf
        return self.p

    @property
    def q(self) -> float:
        """Exponent of the dual norm (Hölder conjugate of :attr:`norm_p`)."""
        p = self.norm_p
        if math.isinf(p):
            return 1.0
        if p == 1.0:
            return math.inf
        return p / (p - 1.0)

    # -- linear structure ----------------------------------------------------
    def kernel(self, rep):
        """Map dual representations (last axis) to pairing vectors."""
        rep = np.asarray(rep, dtype=float)
        if self.kind == "lp_fun":
            return rep * self.grid.w
        if self.kind == "c_fun":
            n = self.dim
            return rep[..., :n] + rep[..., n:] * self.grid.w
        return rep

    def kernel_adjoint(self, gk):
        """Adjoint of :meth:`kernel`: pulls a gradient back to the dual rep."""
        gk = np.asarray(gk, dtype=float)
        if self.kind == "lp_fun":
            return gk * self.grid.w
        if self.kind == "c_fun":
            return np.concatenate([gk, gk * self.grid.w], axis=-1)
        return gk

    def norm_of(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        p = self.norm_p
        if math.isinf(p):
            return np.max(np.abs(coeffs), axis=-1)
        if self.kind == "lp_fun":
            return np.sum(self.grid.w * np.abs(coeffs) ** p, axis=-1) ** (1.0 / p)
        if p == 2.0:
            return np.sqrt(np.sum(coeffs * coeffs, axis=-1))
        return np.sum(np.abs(coeffs) ** p, axis=-1) ** (1.0 / p)

    def dual_norm_of(self, rep):
        rep = np.asarray(rep, dtype=float)
        q = self.q
        if self.kind == "c_fun":
            # total variation of atoms + density, an upper bound when both share a node
            n = self.dim
            return np.sum(np.abs(rep[..., :n]), axis=-1) + np.sum(
                self.grid.w * np.abs(rep[..., n:]), axis=-1
            )
        if math.isinf(q):
            return np.max(np.abs(rep), axis=-1)
        if self.kind == "lp_fun":
            return np.sum(self.grid.w * np.abs(rep) ** q, axis=-1) ** (1.0 / q)
        if q == 2.0:
            return np.sqrt(np.sum(rep * rep, axis=-1))
        return np.sum(np.abs(rep) ** q, axis=-1) ** (1.0 / q)

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        params: dict = {}
        if self.kind == "euclidean":
            params["d"] = self.shape[0]
        elif self.kind == "matrix":
            params["n"], params["m"] = self.shape
        elif self.kind in ("lp_seq", "c0_seq"):
            if self.kind == "lp_seq":
                params["p"] = self.p
            params["N"] = self.shape[0]
            params["s"] = self.decay
        else:
            if self.kind == "lp_fun":
                params["p"] = self.p
            params.update(a=self.grid.a, b=self.grid.b, nodes=self.grid.nodes, order=self.grid.order)
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, data: dict) -> "SpaceDescriptor":
        kind = data.get("kind")
        params = dict(data.get("params", {}))
        try:
            factory = _FACTORIES[kind]
        except KeyError:
            raise InvalidSpaceError(f"unknown space kind {kind!r}") from None
        try:
            return factory(**params)
        except TypeError as exc:
            raise InvalidSpaceError(f"bad parameters for {kind}: {exc}") from None

    def describe(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.to_dict()["params"].items())
        return f"{self.kind}({params})"


def euclidean(d: int) -> SpaceDescriptor:
    return SpaceDescriptor("euclidean", (int(d),))


def matrix(n: int, m: int) -> SpaceDescriptor:
    return SpaceDescriptor("matrix", (int(n), int(m)))


def lp_seq(p: float, N: int, s: float = 1.0) -> SpaceDescriptor:
    return SpaceDescriptor("lp_seq", (int(N),), p=float(p), decay=float(s))


def c0_seq(N: int, s: float = 1.0) -> SpaceDescriptor:
    return SpaceDescriptor("c0_seq", (int(N),), p=1.0, decay=float(s))


def lp_fun(p: float, a: float = 0.0, b: float = 1.0, nodes: int = DEFAULT_NODES,
           order: int = DEFAULT_ORDER) -> SpaceDescriptor:
    return SpaceDescriptor("lp_fun", p=float(p), grid=Grid(float(a), float(b), int(nodes), int(order)))


def c_fun(a: float = 0.0, b: float = 1.0, nodes: int = DEFAULT_NODES,
          order: int = DEFAULT_ORDER) -> SpaceDescriptor:
    return SpaceDescriptor("c_fun", grid=Grid(float(a), float(b), int(nodes), int(order)))


_FACTORIES = {
    "euclidean": euclidean,
    "matrix": matrix,
    "lp_seq": lp_seq,
    "c0_seq": c0_seq,
    "lp_fun": lp_fun,
    "c_fun": c_fun,
}


def _frozen(values, length, what):
    arr = np.array(values, dtype=float).ravel()
    if arr.shape[0] != length:
        raise InvalidSpaceError(f"{what} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Element:
    """A point of an input space as a flat coefficient vector."""

    space: SpaceDescriptor
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, self.space.dim, "element coeffs"))

    def __add__(self, other: "Element") -> "Element":
        _check_same(self.space, other.space)
        return Element(self.space, self.coeffs + other.coeffs)

    def __mul__(self, scalar: float) -> "Element":
        return Element(self.space, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {**self.space.to_dict(), "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Element":
        return cls(SpaceDescriptor.from_dict(data), data["coeffs"])


@dataclass(frozen=True, eq=False)
class Functional:
    """Continuous linear functional stored in its dual representation."""

    space: SpaceDescriptor
    rep: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rep", _frozen(self.rep, self.space.dual_dim, "functional rep"))

    @classmethod
    def zero(cls, space: SpaceDescriptor) -> "Functional":
        return cls(space, np.zeros(space.dual_dim))

    @classmethod
    def measure(cls, space: SpaceDescriptor, atoms=(), density=None) -> "Functional":
        """Functional on ``c_fun`` from point masses and a density on the grid.

        Atom locations are snapped to the nearest grid node.
        """
        if space.kind != "c_fun":
            raise UnsupportedCombinationError(f"measures are duals of c_fun, not {space.kind}")
        n = space.dim
        t = space.grid.t
        rep = np.zeros(2 * n)
        for loc, mass in atoms:
            rep[int(np.argmin(np.abs(t - float(loc))))] += float(mass)
        if density is not None:
            dens = np.asarray(density(t) if callable(density) else density, dtype=float)
            rep[n:] = np.broadcast_to(dens, (n,))
        return cls(space, rep)

    @property
    def kernel(self) -> np.ndarray:
        return self.space.kernel(self.rep)

    def dual_norm(self) -> float:
        return float(self.space.dual_norm_of(self.rep))

    def __call__(self, x: Element) -> float:
        return pair(self, x)

    def to_dict(self) -> dict:
        return {**self.space.to_dict(), "rep": self.rep.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Functional":
        return cls(SpaceDescriptor.from_dict(data), data["rep"])


def _check_same(s1: SpaceDescriptor, s2: SpaceDescriptor):
    if s1 != s2:
        raise SpaceMismatchError(f"space mismatch: {s1.describe()} vs {s2.describe()}")


def element(space: SpaceDescriptor, values) -> Element:
    return Element(space, values)


def stack(elements) -> np.ndarray:
    """Coefficient matrix of a list of elements, one row per element."""
    elements = list(elements)
    if not elements:
        raise InvalidSpaceError("cannot stack an empty list of elements")
    space = elements[0].space
    for x in elements[1:]:
        _check_same(space, x.space)
    return np.vstack([x.coeffs for x in elements])


def pair(f: Functional, x: Element) -> float:
    """Apply ``f`` to ``x``: trace(W^T X), sum a_n x_n, or the quadrature of the integral."""
    _check_same(f.space, x.space)
    value = float(np.dot(x.coeffs, f.kernel))
    if not math.isfinite(value):
        raise NonFiniteError("pairing produced a non-finite value")
    return value


def pair_many(f: Functional, coeffs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`pair` over the rows of a coefficient matrix."""
    values = np.asarray(coeffs, dtype=float) @ f.kernel
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("pairing produced a non-finite value")
    return values


def norm(x: Element) -> float:
    return float(x.space.norm_of(x.coeffs))


def holder_bound(f: Functional, x: Element) -> tuple[float, float]:
    """Both sides of |f(x)| <= ||f||_q ||x||_p."""
    _check_same(f.space, x.space)
    rhs = f.dual_norm() * norm(x)
    if not math.isfinite(rhs):
        raise UnsupportedCombinationError("dual norm is unbounded for this representation")
    return abs(pair(f, x)), rhs


def combine(f1: Functional, f2: Functional, alpha: float, beta: float) -> Functional:
    _check_same(f1.space, f2.space)
    return Functional(f1.space, alpha * f1.rep + beta * f2.rep)


def normalize_to_sphere(f: Functional, B) -> Functional:
    """Rescale ``f`` so that max over ``B`` of |f(b)| is 1.

    ``B`` is a list of elements or a coefficient matrix. The result never
    exceeds 1 on ``B``, even after rounding.
    """
    coeffs = stack(B) if not isinstance(B, np.ndarray) else B
    if not isinstance(B, np.ndarray):
        _check_same(f.space, B[0].space)
    alpha = float(np.max(np.abs(pair_many(f, coeffs))))
    if alpha == 0.0:
        raise DegenerateFunctionalError(
            "functional vanishes on every sample of B; cannot normalize",
            samples=int(coeffs.shape[0]),
        )
    rep = f.rep / alpha
    # rounding can leave the maximum one ulp above 1
    for _ in range(4):
        peak = float(np.max(np.abs(coeffs @ f.space.kernel(rep))))
        if peak <= 1.0:
            break
        rep = rep / np.nextafter(peak, np.inf)
    return Functional(f.space, rep)


class CompactSampler:
    """Seeded sampler of a compact subset of a (truncated) input space.

    * euclidean / matrix: uniform in the 2-norm / Frobenius ball of radius rho
    * lp_seq / c0_seq: Hilbert-cube box |x_n| <= rho * n**(-s)
    * lp_fun / c_fun: random cosine series with |f(t)| <= rho on the grid,
      coefficient k weighted by (k+1)**(-smoothness)

    The sampler owns its generator; use :meth:`clone` to hand an independent
    copy to another thread.
    """

    def __init__(self, space: SpaceDescriptor, radius: float = 1.0, seed: int = 0,
                 smoothness: float = 2.0, modes: int = 16):
        if not radius > 0:
            raise InvalidSpaceError(f"sampler radius must be > 0, got {radius}")
        self.space = space
        self.radius = float(radius)
        self.seed = int(seed)
        self.smoothness = float(smoothness)
        self.modes = int(modes)
        self._rng = np.random.default_rng(self.seed)

    def clone(self, seed: int | None = None) -> "CompactSampler":
        return CompactSampler(self.space, self.radius, self.seed if seed is None else seed,
                              self.smoothness, self.modes)

    def envelope(self) -> np.ndarray:
        """Per-coordinate bound for sequence spaces."""
        n = np.arange(1, self.space.dim + 1, dtype=float)
        return self.radius * n ** (-self.space.decay)

    def sample_array(self, count: int) -> np.ndarray:
        if count < 1:
            raise InvalidSpaceError("sample count must be >= 1")
        space, rng, rho = self.space, self._rng, self.radius
        if space.kind in ("euclidean", "matrix"):
            d = space.dim
            g = rng.standard_normal((count, d))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            r = rho * rng.random(count) ** (1.0 / d)
            return g * r[:, None]
        if space.kind in ("lp_seq", "c0_seq"):
            return rng.uniform(-1.0, 1.0, (count, space.dim)) * self.envelope()
        grid = space.grid
        k = np.arange(self.modes)
        weights = (k + 1.0) ** (-self.smoothness)
        weights /= weights.sum()
        basis = np.cos(np.pi * np.outer(k, (grid.t - grid.a) / (grid.b - grid.a)))
        u = rng.uniform(-1.0, 1.0, (count, self.modes)) * weights
        return rho * np.clip(u @ basis, -1.0, 1.0)

    def sample(self, count: int) -> list[Element]:
        return [Element(self.space, row) for row in self.sample_array(count)]

    def contains(self, coeffs, rtol: float = 1e-12) -> np.ndarray:
        """Whether each row satisfies this sampler's envelope or ball constraint."""
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        space = self.space
        if space.kind in ("euclidean", "matrix"):
            return np.linalg.norm(coeffs, axis=1) <= self.radius * (1 + rtol)
        if space.kind in ("lp_seq", "c0_seq"):
            return np.all(np.abs(coeffs) <= self.envelope() * (1 + rtol), axis=1)
        return np.max(np.abs(coeffs), axis=1) <= self.radius * (1 + rtol)


def sample(K: CompactSampler, count: int) -> list[Element]:
    return K.sample(count)


def random_functional(space: SpaceDescriptor, rng: np.random.Generator) -> Functional:
    """Dual representation with i.i.d. standard normal coordinates."""
    return Functional(space, rng.standard_normal(space.dual_dim))
