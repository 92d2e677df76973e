"""Univariate activation functions and the calculus the construction needs.

Besides evaluation this covers central finite differences of any order,
mollification into an explicit sum of shifted copies of the activation,
a finite-difference test for polynomials, and a threshold search for a
nonvanishing k-th derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import comb, expit, roots_legendre

from .errors import ActivationOverflowError, LikelyPolynomialError, NonSmoothActivationError

EPS = np.finfo(float).eps
EXP_CAP = 700.0
_CHUNK = 1 << 20

SMOOTH_TAGS = ("tanh", "sigmoid", "exp", "sin", "poly")
CATALOG = ("relu", "tanh", "sigmoid", "exp", "sin", "poly", "table")


@dataclass(frozen=True, eq=False)
class Activation:
    """A fixed activation ``sigma``.

    ``poly`` keeps coefficients lowest degree first; ``table`` keeps sample
    points and interpolates linearly (constant extrapolation).
    """

    tag: str
    coeffs: tuple = ()
    table_x: tuple = ()
    table_y: tuple = ()
    exp_cap: float = EXP_CAP

    def __post_init__(self):
        if self.tag not in CATALOG:
            raise ValueError(f"unknown activation {self.tag!r}")
        if self.tag == "poly" and not self.coeffs:
            raise ValueError("poly activation needs at least one coefficient")
        if self.tag == "table":
            if len(self.table_x) < 2 or len(self.table_x) != len(self.table_y):
                raise ValueError("table activation needs matching x/y samples (at least 2)")
            if np.any(np.diff(self.table_x) <= 0):
                raise ValueError("table x samples must be strictly increasing")

    @property
    def smooth(self) -> bool:
        return self.tag in SMOOTH_TAGS

    @property
    def name(self) -> str:
        if self.tag == "poly":
            return "poly:" + ",".join(repr(float(c)) for c in self.coeffs)
        if self.tag == "table":
            return "table"
        return self.tag

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tag = self.tag
        if tag == "relu":
            return np.maximum(t, 0.0)
        if tag == "tanh":
            return np.tanh(t)
        if tag == "sigmoid":
            return expit(t)
        if tag == "exp":
            top = np.max(t) if t.size else 0.0
            if top > self.exp_cap:
                raise ActivationOverflowError(
                    f"exp argument {top:.6g} exceeds the cap {self.exp_cap}", cap=self.exp_cap
                )
            return np.exp(t)
        if tag == "sin":
            return np.sin(t)
        if tag == "poly":
            out = np.zeros_like(t)
            for c in reversed(self.coeffs):
                out = out * t + c
            return out
        return np.interp(t, self.table_x, self.table_y)

    def derivative(self, t, subgradient: bool = False):
        """Exact first derivative; ``relu``/``table`` need ``subgradient=True``."""
        t = np.asarray(t, dtype=float)
        tag = self.tag
        if tag == "tanh":
            th = np.tanh(t)
            return 1.0 - th * th
        if tag == "sigmoid":
            s = expit(t)
            return s * (1.0 - s)
        if tag == "exp":
            return self(t)
        if tag == "sin":
            return np.cos(t)
        if tag == "poly":
            dc = [k * c for k, c in enumerate(self.coeffs)][1:]
            out = np.zeros_like(t)
            for c in reversed(dc):
                out = out * t + c
            return out
        if not subgradient:
            raise NonSmoothActivationError(
                f"{tag} is not differentiable everywhere; mollify it or request subgradients"
            )
        if tag == "relu":
            return (t > 0.0).astype(float)
        x, y = np.asarray(self.table_x), np.asarray(self.table_y)
        slopes = np.diff(y) / np.diff(x)
        idx = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(slopes) - 1)
        inside = (t >= x[0]) & (t < x[-1])
        return np.where(inside, slopes[idx], 0.0)

    def to_dict(self) -> dict:
        out = {"tag": self.tag}
        if self.tag == "poly":
            out["coeffs"] = [float(c) for c in self.coeffs]
        if self.tag == "table":
            out["x"] = [float(v) for v in self.table_x]
            out["y"] = [float(v) for v in self.table_y]
        return out


def poly(coeffs) -> Activation:
    return Activation("poly", tuple(float(c) for c in coeffs))


def table(xs, ys) -> Activation:
    return Activation("table", table_x=tuple(map(float, xs)), table_y=tuple(map(float, ys)))


def parse(spec: str) -> Activation:
    """Build an activation from its CLI id (``tanh``, ``poly:0,0,1``, ``table:path``)."""
    spec = spec.strip()
    if spec.startswith("poly:"):
        return poly(float(c) for c in spec[5:].split(","))
    if spec.startswith("table:"):
        data = np.loadtxt(Path(spec[6:]), delimiter=",", ndmin=2)
        return table(data[:, 0], data[:, 1])
    if spec in ("poly", "table") or spec not in CATALOG:
        raise ValueError(f"unknown activation id {spec!r}")
    return Activation(spec)


def from_dict(data: dict):
    if data.get("tag") == "mollified":
        return mollify(from_dict(data["base"]), data["delta"], data["nodes"])
    tag = data["tag"]
    if tag == "poly":
        return poly(data["coeffs"])
    if tag == "table":
        return table(data["x"], data["y"])
    return Activation(tag)


def bump(u):
    """Unnormalized standard bump exp(-1/(1-u^2)) on (-1, 1), zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class MollifiedActivation:
    """``sigma * phi_delta`` evaluated as ``sum_j w_j sigma(t - y_j)``."""

    base: Activation
    delta: float
    shifts: np.ndarray
    weights: np.ndarray
    node_count: int = field(default=0)

    @property
    def tag(self) -> str:
        return "mollified"

    @property
    def smooth(self) -> bool:
        return True

    @property
    def name(self) -> str:
        return f"mollified({self.base.name},delta={self.delta!r},nodes={self.node_count})"

    def _apply(self, fn, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty_like(flat)
        step = max(1, _CHUNK // len(self.shifts))
        for i in range(0, len(flat), step):
            out[i:i + step] = fn(flat[i:i + step, None] - self.shifts) @ self.weights
        return out.reshape(t.shape)

    def __call__(self, t):
        return self._apply(self.base, t)

    def derivative(self, t, subgradient: bool = False):
        # the node sum is piecewise smooth for relu; its a.e. derivative is exact
        return self._apply(lambda z: self.base.derivative(z, subgradient=True), t)

    def to_dict(self) -> dict:
        return {"tag": "mollified", "base": self.base.to_dict(), "delta": self.delta,
                "nodes": self.node_count}


def mollify(sigma: Activation, delta: float, nodes: int = 512) -> MollifiedActivation:
    """Convolve ``sigma`` with the bump of half-width ``delta``.

    Gauss-Legendre on ``y = delta * u``; the node weights are normalized to
    sum to one, which fixes the bump's normalizing constant.
    """
    if not delta > 0:
        raise ValueError("mollifier width must be > 0")
    if nodes < 8:
        raise ValueError("mollifier needs at least 8 quadrature nodes")
    u, w = roots_legendre(int(nodes))
    omega = w * bump(u)
    omega /= omega.sum()
    shifts = delta * u
    shifts.flags.writeable = False
    omega.flags.writeable = False
    return MollifiedActivation(sigma, float(delta), shifts, omega, int(nodes))


def default_step(k: int, scale: float = 1.0) -> float:
    """eps**(1/(k+2)) times the probe scale."""
    return EPS ** (1.0 / (k + 2)) * scale


def difference_stencil(k: int):
    """Offsets (in units of h) and signed binomial weights of the k-th central difference."""
    j = np.arange(k + 1)
    return k / 2.0 - j, (-1.0) ** j * comb(k, j, exact=False)


def deriv_est(sigma, k: int, t, h: float | None = None):
    """k-th central finite difference of ``sigma`` at ``t`` with step ``h``."""
    if k < 0:
        raise ValueError("derivative order must be >= 0")
    if h is None:
        h = default_step(k)
    if not h > 0:
        raise ValueError("step must be > 0")
    offsets, weights = difference_stencil(k)
    t = np.asarray(t, dtype=float)
    vals = sigma(t[..., None] + offsets * h)
    return (vals @ weights) / h**k


def detect_polynomial(sigma, k_max: int, interval=(-1.0, 1.0), rtol: float = 1e-7):
    """Smallest degree ``m < k_max`` whose (m+1)-th differences vanish on ``interval``.

    Differences are taken with several large, asymmetric steps so that
    symmetry (odd/even activations) cannot hide a nonzero difference. Returns
    ``None`` when no degree below ``k_max`` fits.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    a, b = map(float, interval)
    L = b - a
    probe = np.linspace(a, b, 257)
    scale = max(float(np.max(np.abs(sigma(probe)))), np.finfo(float).tiny)
    for m in range(k_max):
        order = m + 1
        offsets, weights = difference_stencil(order)
        starts, steps = [], []
        for frac in (1.0, 0.83, 0.61, 0.37):
            h = frac * L / order
            for s0 in np.linspace(a, b - order * h, 5):
                starts.append(s0)
                steps.append(h)
        starts, steps = np.array(starts), np.array(steps)
        pts = starts[:, None] + (offsets[::-1] + order / 2.0)[None, :] * steps[:, None]
        diffs = sigma(pts) @ weights[::-1]
        if np.max(np.abs(diffs)) <= rtol * scale:
            return m
    return None


def roundoff_floor(sigma, k: int, t, h: float) -> float:
    """Roundoff magnitude of the k-th difference at ``t`` with step ``h``."""
    offsets, weights = difference_stencil(k)
    vals = np.abs(sigma(np.asarray(t, dtype=float)[..., None] + offsets * h))
    return EPS * (vals @ np.abs(weights)) / h**k


def find_nonvanishing_theta(sigma, k: int, theta_range=(-4.0, 4.0), h: float | None = None,
                            points: int = 801, significance: float = 1e3):
    """Threshold ``theta`` in the range maximizing |sigma^(k)(-theta)|.

    Raises :class:`LikelyPolynomialError` when no estimate clears
    ``significance`` times its roundoff floor.
    """
    lo, hi = map(float, theta_range)
    if h is None:
        h = default_step(k, scale=max(1.0, hi - lo))
    thetas = np.linspace(lo, hi, points)
    est = deriv_est(sigma, k, -thetas, h)
    floor = roundoff_floor(sigma, k, -thetas, h) + np.finfo(float).tiny
    significant = np.abs(est) > significance * floor
    if not np.any(significant):
        raise LikelyPolynomialError(
            f"all order-{k} derivative estimates are at roundoff level; "
            "sigma looks like a polynomial of lower degree (see detect_polynomial)",
            order=k,
        )
    idx = int(np.argmax(np.where(significant, np.abs(est), -1.0)))
    return float(thetas[idx]), float(est[idx])
