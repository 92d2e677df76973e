"""Constructive universal approximation, one executable stage per proof step.

1. ``monomial_network`` builds t**k from k+1 neurons by differencing the
   outer weight; ``poly_network`` sums them into any polynomial.
2. Non-smooth activations are mollified first (``activations.mollify``),
   which is itself a finite sum of shifted activations.
3. ``exp_dictionary_fit`` fits the target with exponentials of dual
   functionals, ``sum a_i exp(r_i(x))``.
4. ``compose`` replaces each ``a_i exp(t)`` by a 1-D network evaluated at
   ``t = r_i(x)`` and keeps a ledger of the error budget.

All sup norms are estimated by maxima over dense grids (1-D) or seeded
samples (input space).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import chebyshev as C

from . import activations as act
from .errors import (
    ConditioningError,
    InadmissibleActivationError,
    LikelyPolynomialError,
    ThresholdRangeError,
)
from .network import ShallowNetwork, TrainConfig, init, train
from .spaces import CompactSampler, Functional, euclidean, normalize_to_sphere, pair_many

H_SWEEP = tuple(10.0 ** (-np.arange(1, 25) / 4.0))
MAX_DEGREE = 16
DENSE = 2001
EXP_CAP = 6.0
EXP_SCALES = (0.25, 2.0)


def _dense(a, b, n=DENSE):
    # uniform grid plus Chebyshev extrema, which sit where polynomial errors peak
    u = np.cos(np.pi * np.arange(n // 4 + 1) / (n // 4))
    t = np.concatenate([np.linspace(a, b, n), 0.5 * (a + b) + 0.5 * (b - a) * u])
    return np.unique(t)


@dataclass(frozen=True, eq=False)
class OneDNetwork:
    """``t -> sum_j c_j sigma(w_j t - theta_j)`` valid on ``interval``."""

    activation: object
    coeffs: np.ndarray
    weights: np.ndarray
    thresholds: np.ndarray
    interval: tuple = (-1.0, 1.0)
    error: float = float("nan")
    budget: float = float("inf")
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("coeffs", "weights", "thresholds"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def width(self) -> int:
        return len(self.coeffs)

    @property
    def budget_met(self) -> bool:
        return self.error <= self.budget

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.width == 0:
            return np.zeros_like(t)
        z = t[..., None] * self.weights - self.thresholds
        return self.activation(z) @ self.coeffs

    def affine(self, scale: float, shift: float) -> "OneDNetwork":
        """Network of ``t -> self((t - shift) / scale)``; still a sigma-network in ``t``."""
        w = self.weights / scale
        return OneDNetwork(self.activation, self.coeffs, w, self.thresholds + w * shift,
                           self.interval, self.error, self.budget, dict(self.info))

    @staticmethod
    def concat(nets, activation, interval, scales=None) -> "OneDNetwork":
        nets = list(nets)
        scales = [1.0] * len(nets) if scales is None else list(scales)
        if not nets:
            return OneDNetwork(activation, [], [], [], interval, 0.0)
        return OneDNetwork(
            activation,
            np.concatenate([s * n.coeffs for s, n in zip(scales, nets)]),
            np.concatenate([n.weights for n in nets]),
            np.concatenate([n.thresholds for n in nets]),
            interval,
        )


def _check_thresholds(thresholds, theta_range):
    if theta_range is None or len(thresholds) == 0:
        return
    lo, hi = theta_range
    bad = (thresholds < lo) | (thresholds > hi)
    if np.any(bad):
        raise ThresholdRangeError(
            f"{int(bad.sum())} thresholds fall outside the admissible interval [{lo}, {hi}]",
            worst=float(thresholds[bad][0]),
        )


def monomial_network(sigma, k: int, theta: float, h: float, interval=(-1.0, 1.0),
                     richardson: bool = False, significance: float = 1e3) -> OneDNetwork:
    """Approximate ``t**k`` by the k-th central difference in the outer weight.

    Terms ``(-1)**j C(k, j) sigma((k/2 - j) h t - theta) / (h**k D)`` where
    ``D`` estimates ``sigma^(k)(-theta)`` at the same step. With
    ``richardson`` the networks at ``h`` and ``2h`` are combined as
    ``(4 N_h - N_2h) / 3``, cancelling the h**2 error term.
    """
    a, b = map(float, interval)
    if k == 0:
        base = float(sigma(np.array(-theta)))
        if base == 0.0:
            raise LikelyPolynomialError("sigma(-theta) vanishes; pick another threshold", order=0)
        net = OneDNetwork(sigma, [1.0 / base], [0.0], [theta], (a, b))
    else:
        offsets, signs = act.difference_stencil(k)
        parts = []
        for step in ((h, 2.0 * h) if richardson else (h,)):
            est = float(act.deriv_est(sigma, k, -theta, step))
            floor = float(act.roundoff_floor(sigma, k, -theta, step))
            if not abs(est) > significance * floor:
                raise LikelyPolynomialError(
                    f"order-{k} derivative at {-theta:.4g} is insignificant; "
                    "use find_nonvanishing_theta to choose theta",
                    order=k,
                )
            parts.append((signs / (step**k * est), offsets * step))
        if richardson:
            coeffs = np.concatenate([4.0 / 3.0 * parts[0][0], -1.0 / 3.0 * parts[1][0]])
            weights = np.concatenate([parts[0][1], parts[1][1]])
        else:
            coeffs, weights = parts[0]
        net = OneDNetwork(sigma, coeffs, weights, np.full(len(coeffs), float(theta)), (a, b))
    t = _dense(a, b)
    err = float(np.max(np.abs(net(t) - t**k)))
    return OneDNetwork(sigma, net.coeffs, net.weights, net.thresholds, (a, b), err)


@lru_cache(maxsize=256)
def _bank_entry(key, sigma, k, theta_range):
    del key  # cache key only; sigma objects hash by identity
    lo, hi = (-4.0, 4.0) if theta_range is None else theta_range
    if k == 0:
        thetas = np.linspace(lo, hi, 161)
        vals = np.abs(sigma(-thetas))
        theta = float(thetas[int(np.argmax(vals))])
        return monomial_network(sigma, 0, theta, 1.0), ()
    theta, _ = act.find_nonvanishing_theta(sigma, k, (lo, hi))
    best, sweep = None, []
    for h in H_SWEEP:
        for rich in (False, True):
            try:
                net = monomial_network(sigma, k, theta, h, richardson=rich)
            except LikelyPolynomialError:
                continue
            sweep.append((h, rich, net.error))
            if best is None or net.error < best.error:
                best = net
    if best is None:
        raise LikelyPolynomialError(f"no step in the sweep gives a significant order-{k} difference",
                                    order=k)
    return best, tuple(sweep)


def best_monomial(sigma, k: int, theta_range=None):
    """Best ``t**k`` network on [-1, 1] over the h-sweep (plain and Richardson).

    Returns ``(network, sweep)`` where ``sweep`` lists ``(h, richardson, error)``.
    """
    return _bank_entry((id(sigma), getattr(sigma, "name", "")), sigma, int(k),
                       None if theta_range is None else tuple(map(float, theta_range)))


def _poly_network_unit(sigma, q, budget, theta_range=None) -> OneDNetwork:
    """Polynomial with monomial coefficients ``q`` in ``s`` on [-1, 1]."""
    q = np.trim_zeros(np.asarray(q, dtype=float), "b")
    nets, scales, bound = [], [], 0.0
    for k, qk in enumerate(q):
        if qk == 0.0:
            continue
        mono, _ = best_monomial(sigma, k, theta_range)
        nets.append(mono)
        scales.append(qk)
        bound += abs(qk) * mono.error
    net = OneDNetwork.concat(nets, sigma, (-1.0, 1.0), scales)
    s = _dense(-1.0, 1.0)
    err = float(np.max(np.abs(net(s) - Polynomial(q)(s)))) if len(q) else 0.0
    return OneDNetwork(sigma, net.coeffs, net.weights, net.thresholds, (-1.0, 1.0), err, budget,
                       {"bound": bound})


def _merge(net: OneDNetwork) -> OneDNetwork:
    """Sum coefficients of neurons with identical (weight, threshold)."""
    if net.width == 0:
        return net
    keys = np.stack([net.weights, net.thresholds], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    coeffs = np.zeros(len(uniq))
    np.add.at(coeffs, inv.ravel(), net.coeffs)
    keep = coeffs != 0.0
    return OneDNetwork(net.activation, coeffs[keep], uniq[keep, 0], uniq[keep, 1], net.interval,
                       net.error, net.budget, net.info)


def poly_network(sigma, coeffs, interval=(-1.0, 1.0), eps: float = 1e-6,
                 theta_range=None) -> OneDNetwork:
    """sigma-network for the polynomial ``sum coeffs[k] t**k`` on ``interval``.

    The polynomial is re-expanded in ``s = (t - mid) / half`` so every
    monomial network works on [-1, 1]; the affine map is folded back into
    the weights and thresholds. ``error`` is the measured sup error on a
    dense grid and ``budget_met`` says whether it is within ``eps``.
    """
    a, b = map(float, interval)
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(coeffs) == 0:
        return OneDNetwork(sigma, [], [], [], (a, b), 0.0, eps)
    q = Polynomial(coeffs).convert(domain=[a, b]).coef
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    unit = _poly_network_unit(sigma, q, eps, theta_range)
    net = _merge(unit.affine(half, mid))
    _check_thresholds(net.thresholds, theta_range)
    t = _dense(a, b)
    err = float(np.max(np.abs(net(t) - Polynomial(coeffs)(t))))
    return OneDNetwork(sigma, net.coeffs, net.weights, net.thresholds, (a, b), err, eps,
                       {"degree": len(coeffs) - 1})


def _exp_route_a(sigma, a, lo, hi, rate, eps, theta_range):
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    s = _dense(-1.0, 1.0)
    target = a * np.exp(rate * (mid + half * s))
    best = None
    for deg in range(1, MAX_DEGREE + 1):
        cheb = C.Chebyshev.interpolate(lambda u: a * np.exp(rate * (mid + half * u)), deg)
        fit_err = float(np.max(np.abs(cheb(s) - target)))
        if fit_err > eps / 2 and deg < MAX_DEGREE:
            continue
        q = C.cheb2poly(cheb.coef)
        try:
            unit = _poly_network_unit(sigma, q, eps / 2, theta_range)
        except LikelyPolynomialError:
            break
        err = float(np.max(np.abs(unit(s) - target)))
        if best is None or err < best[0]:
            best = (err, unit, deg, fit_err)
        if err <= eps:
            break
    if best is None:
        return None
    err, unit, deg, fit_err = best
    net = unit if half == 0.0 else unit.affine(half, mid)
    return _merge(net), {"route": "chebyshev", "degree": deg, "fit_error": fit_err}


def _exp_route_b(sigma, a, lo, hi, rate, seed):
    # fallback: fit a 1-D network by gradient descent
    sp = euclidean(1)
    t = np.linspace(lo, hi, 257)[:, None]
    y = a * np.exp(rate * t[:, 0])
    mid, half = 0.5 * (lo + hi), max(0.5 * (hi - lo), 1e-12)
    s = (t - mid) / half
    net0 = init(sp, sigma, 16, seed=seed, scale=1.0)
    net, _ = train(net0, (s, y), TrainConfig(learning_rate=1e-2, iterations=3000,
                                               optimizer="momentum", seed=seed))
    one = OneDNetwork(sigma, net.c, net.duals[:, 0], net.theta, (-1.0, 1.0))
    return one.affine(half, mid), {"route": "trained", "width": 16}


def exp_1d_network(sigma, a: float, interval, eps: float, rate: float = 1.0,
                   theta_range=None, allow_training: bool = True, seed: int = 0) -> OneDNetwork:
    """sigma-network for ``t -> a exp(rate t)`` on ``interval`` within ``eps``.

    Route A: Chebyshev interpolation of the exponential (error <= eps/2),
    then :func:`poly_network` with budget eps/2. Route B trains a small 1-D
    network and is used only when route A misses the budget and does worse.
    """
    lo, hi = map(float, interval)
    t = _dense(lo, hi)
    if a == 0.0:
        return OneDNetwork(sigma, [], [], [], (lo, hi), 0.0, eps, {"route": "zero"})
    if getattr(sigma, "tag", None) == "exp":
        net = OneDNetwork(sigma, [a], [rate], [0.0], (lo, hi))
        err = float(np.max(np.abs(net(t) - a * np.exp(rate * t))))
        return OneDNetwork(sigma, net.coeffs, net.weights, net.thresholds, (lo, hi), err, eps,
                           {"route": "identity"})
    target = a * np.exp(rate * t)
    candidates = []
    route_a = _exp_route_a(sigma, a, lo, hi, rate, eps, theta_range)
    if route_a is not None:
        net, info = route_a
        candidates.append((float(np.max(np.abs(net(t) - target))), net, info))
    if allow_training and (not candidates or candidates[0][0] > eps):
        try:
            net, info = _exp_route_b(sigma, a, lo, hi, rate, seed)
            candidates.append((float(np.max(np.abs(net(t) - target))), net, info))
        except Exception:  # training failure leaves route A's result standing
            pass
    if not candidates:
        raise LikelyPolynomialError("no route produced a network for the exponential")
    err, net, info = min(candidates, key=lambda c: c[0])
    _check_thresholds(net.thresholds, theta_range)
    return OneDNetwork(sigma, net.coeffs, net.weights, net.thresholds, (lo, hi), err, eps, info)


# -- Step 3: exponential dictionary ------------------------------------------------


def _derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass(eq=False)
class ExpModel:
    """``x -> sum_i a_i exp(alpha_i v_i(x))``.

    Without sphere normalization every ``alpha_i`` is 1 and ``v_i = r_i``.
    """

    space: object
    a: np.ndarray
    duals: np.ndarray
    alpha: np.ndarray
    stage1_error: float
    info: dict = field(default_factory=dict)
    target: object = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.a)

    @property
    def terms(self):
        return [(float(a), Functional(self.space, v), float(al))
                for a, v, al in zip(self.a, self.duals, self.alpha)]

    def exponents(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.space.kernel(self.duals).T

    def features(self, X) -> np.ndarray:
        return np.exp(self.exponents(X) * self.alpha)

    def __call__(self, X) -> np.ndarray:
        return self.features(np.atleast_2d(X)) @ self.a


def exp_dictionary_fit(g, K: CompactSampler, n: int, ridge: float = 1e-12, seed: int = 0,
                       cap: float = EXP_CAP, scales=EXP_SCALES, n_train: int = 8192,
                       n_val: int = 16384, extra=(), sphere_B=None,
                       max_condition: float = 1e15) -> ExpModel:
    """Ridge least-squares fit of ``g`` by ``n`` exponentials of dual functionals.

    ``g`` maps a coefficient matrix (one row per element) to target values.
    The dictionary is the zero functional (constants), the functionals in
    ``extra`` as given, then random functionals with i.i.d. normal dual
    coordinates, each rescaled so that its largest |r(x)| over the training
    sample is a log-uniform draw from ``scales`` (never above ``cap``).
    ``ridge`` is relative to the largest squared singular value. With
    ``sphere_B`` each random functional is split as ``alpha * v`` with
    ``max_B |v| = 1``.
    """
    if n < 1:
        raise ValueError("dictionary size must be >= 1")
    lo, hi = scales
    if not 0 < lo <= hi <= cap:
        raise ValueError(f"exponent scales {scales} must lie in (0, cap={cap}]")
    space = K.space
    Xtr = K.clone(_derive_seed(K.seed, seed, 1)).sample_array(n_train)
    Xva = K.clone(_derive_seed(K.seed, seed, 2)).sample_array(n_val)
    ytr, yva = np.asarray(g(Xtr), dtype=float), np.asarray(g(Xva), dtype=float)
    rng = np.random.default_rng(_derive_seed(seed, 3))

    reps = [np.zeros(space.dual_dim)] + [np.asarray(f.rep, dtype=float) for f in extra]
    reps = reps[:n]
    n_fixed = len(reps)
    n_random = n - n_fixed
    draws = rng.standard_normal((n_random, space.dual_dim))
    scale = np.exp(rng.uniform(np.log(lo), np.log(hi), n_random))
    peaks = np.max(np.abs(Xtr @ space.kernel(draws).T), axis=0) if n_random else np.zeros(0)
    reps.extend(draws * (scale / peaks)[:, None])
    alpha = np.ones(len(reps))
    if sphere_B is not None:
        B = sphere_B if isinstance(sphere_B, np.ndarray) else np.vstack([b.coeffs for b in sphere_B])
        fallback = rng.standard_normal(space.dual_dim)
        for i, rep in enumerate(reps):
            if not np.any(rep):
                # constants: any functional on the sphere with a zero exponent rate
                v = normalize_to_sphere(Functional(space, fallback if n_random == 0 else reps[-1]), B)
                reps[i], alpha[i] = np.asarray(v.rep), 0.0
                continue
            v = normalize_to_sphere(Functional(space, rep), B)
            alpha[i] = float(np.max(np.abs(B @ space.kernel(rep))))
            reps[i] = np.asarray(v.rep)
    duals = np.vstack(reps)
    alpha = np.asarray(alpha)
    exps_tr = (Xtr @ space.kernel(duals).T) * alpha
    if n_random and np.max(np.abs(exps_tr[:, n_fixed:])) > cap * (1 + 1e-12):
        raise ConditioningError("exponent cap exceeded after rescaling", cap=cap)
    Phi = np.exp(exps_tr)
    U, s, Vt = np.linalg.svd(Phi, full_matrices=False)
    lam = ridge * s[0] ** 2
    cond = (s[0] ** 2 + lam) / (s[-1] ** 2 + lam) if s[-1] > 0 or lam > 0 else math.inf
    if not cond <= max_condition:
        raise ConditioningError(
            f"normal system condition {cond:.3g} exceeds {max_condition:.3g}; increase ridge",
            condition=float(cond),
        )
    a = Vt.T @ ((s / (s * s + lam)) * (U.T @ ytr))
    model = ExpModel(space, a, duals, alpha, 0.0, target=g)
    val_err = float(np.max(np.abs(model(Xva) - yva)))
    train_err = float(np.max(np.abs(Phi @ a - ytr)))
    model.stage1_error = val_err
    model.info = {
        "n": int(n), "ridge": ridge, "seed": int(seed), "condition": float(cond),
        "train_error": train_err, "n_train": n_train, "n_val": n_val, "cap": cap,
        "sphere": sphere_B is not None,
    }
    return model


# -- Step 4: composition -------------------------------------------------------------


@dataclass
class ConstructionReport:
    dict_size: int
    exp_ranges: list
    stage1_error: float
    stage2_errors: list
    final_width: int
    total_estimate: float
    validation_error: float | None
    seeds: dict
    timings_ms: dict = field(default_factory=dict)
    stage2_budget: float = 0.0
    budget_misses: list = field(default_factory=list)
    dict_sizes_tried: list = field(default_factory=list)
    sphere_peaks: list | None = None

    def __post_init__(self):
        bound = self.stage1_error + math.fsum(self.stage2_errors)
        assert self.total_estimate <= bound * (1 + 1e-12) + 1e-300, "ledger exceeds triangle bound"

    @property
    def ledger_holds(self) -> bool:
        return self.validation_error is None or self.validation_error <= self.total_estimate

    def to_dict(self, timings: bool = True) -> dict:
        out = {
            "dict_size": self.dict_size,
            "exp_ranges": [list(r) for r in self.exp_ranges],
            "stage1_error": self.stage1_error,
            "stage2_errors": list(self.stage2_errors),
            "final_width": self.final_width,
            "total_estimate": self.total_estimate,
            "validation_error": self.validation_error,
            "seeds": dict(self.seeds),
            "stage2_budget": self.stage2_budget,
            "budget_misses": list(self.budget_misses),
            "dict_sizes_tried": [list(x) for x in self.dict_sizes_tried],
        }
        if self.sphere_peaks is not None:
            out["sphere_peaks"] = list(self.sphere_peaks)
        if timings:
            out["timings_ms"] = dict(self.timings_ms)
        return out

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), sort_keys=True)


def _assemble(space, sigma, pieces) -> ShallowNetwork:
    """Neurons ``(c, w * v_i, theta)`` for every 1-D piece; exact duplicates merged."""
    c_all, reps, th_all = [], [], []
    for v, net in pieces:
        if net.width == 0:
            continue
        c_all.append(net.coeffs)
        reps.append(net.weights[:, None] * v[None, :])
        th_all.append(net.thresholds)
    if not c_all:
        return ShallowNetwork(space, sigma, [0.0], np.zeros((1, space.dual_dim)), [0.0])
    c = np.concatenate(c_all)
    duals = np.vstack(reps)
    theta = np.concatenate(th_all)
    key = np.concatenate([duals, theta[:, None]], axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inv.ravel(), c)
    keep = merged != 0.0
    if not np.any(keep):
        keep[0] = True
    return ShallowNetwork(space, sigma, merged[keep], uniq[keep, :-1], uniq[keep, -1])


def compose(model: ExpModel, sigma, eps: float, K: CompactSampler, target=None, seed: int = 0,
            hull_samples: int = 16384, validation_samples: int = 4096, pad: float = 0.05,
            theta_range=None):
    """Assemble one shallow network over X from the fitted exponential model.

    Each term ``a_i exp(alpha_i t)`` gets a 1-D network on the padded hull of
    ``v_i`` over a sample of K with budget ``eps / (2 n)``; the hidden
    functional of every neuron is ``w * v_i``. The report's total estimate is
    the stage-1 error plus the measured stage-2 errors; the validation error
    is measured on a fresh sample when a target is available.
    """
    t0 = time.perf_counter()
    space = model.space
    n = model.size
    budget = eps / (2 * n)
    Xh = K.clone(_derive_seed(K.seed, seed, 4)).sample_array(hull_samples)
    exps = model.exponents(Xh)
    ranges, errors, misses, pieces = [], [], [], []
    for i in range(n):
        lo, hi = float(np.min(exps[:, i])), float(np.max(exps[:, i]))
        width = hi - lo
        lo, hi = lo - pad * width, hi + pad * width
        ranges.append((lo, hi))
        a_i = float(model.a[i])
        if width == 0.0 or a_i == 0.0 or model.alpha[i] == 0.0:
            # constant exponent: the term is a constant on K
            value = a_i * math.exp(model.alpha[i] * lo)
            net = poly_network(sigma, [value], (lo - 1.0, hi + 1.0), budget, theta_range) \
                if value != 0.0 else OneDNetwork(sigma, [], [], [], (lo, hi), 0.0, budget)
        else:
            net = exp_1d_network(sigma, a_i, (lo, hi), budget, rate=float(model.alpha[i]),
                                 theta_range=theta_range, seed=_derive_seed(seed, 5, i))
        errors.append(float(net.error))
        if not net.budget_met:
            misses.append(i)
        pieces.append((model.duals[i], net))
    t1 = time.perf_counter()
    net = _assemble(space, sigma, pieces)
    t2 = time.perf_counter()
    g = target if target is not None else model.target
    val = None
    if g is not None:
        Xv = K.clone(_derive_seed(K.seed, seed, 6)).sample_array(validation_samples)
        val = float(np.max(np.abs(net(Xv) - np.asarray(g(Xv), dtype=float))))
    t3 = time.perf_counter()
    report = ConstructionReport(
        dict_size=n,
        exp_ranges=ranges,
        stage1_error=float(model.stage1_error),
        stage2_errors=errors,
        final_width=net.width,
        total_estimate=float(model.stage1_error) + math.fsum(errors),
        validation_error=val,
        seeds={"dictionary": int(model.info.get("seed", 0)), "compose": int(seed),
               "sampler": int(K.seed)},
        timings_ms={"stage2": 1e3 * (t1 - t0), "assemble": 1e3 * (t2 - t1),
                    "validation": 1e3 * (t3 - t2)},
        stage2_budget=budget,
        budget_misses=misses,
    )
    return net, report


DICT_SIZES = (8, 16, 32, 64, 128, 256, 512)


def approximate(g, K: CompactSampler, sigma, eps: float, sphere_B=None, dict_sizes=DICT_SIZES,
                seed: int = 0, ridge: float = 1e-12, theta_range=None, mollify_delta: float = 0.05,
                mollify_nodes: int = 64, validation_samples: int = 4096, **fit_options):
    """Build a shallow network with sup error below ``eps`` on K.

    Grows the dictionary through ``dict_sizes`` until the stage-1 error is
    at most eps/2 (or the list is exhausted), then composes. Non-smooth
    activations are mollified first; polynomial activations are rejected.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    degree = act.detect_polynomial(sigma, 8, (-4.0, 4.0) if theta_range is None else theta_range)
    if degree is not None:
        raise InadmissibleActivationError(
            f"activation is a polynomial of degree {degree}; density needs a non-polynomial sigma",
            degree=degree,
        )
    if not getattr(sigma, "smooth", False):
        sigma = act.mollify(sigma, mollify_delta, mollify_nodes)
    t0 = time.perf_counter()
    tried, model = [], None
    for n in dict_sizes:
        candidate = exp_dictionary_fit(g, K, n, ridge=ridge, seed=seed, sphere_B=sphere_B,
                                       **fit_options)
        tried.append((int(n), candidate.stage1_error))
        if model is None or candidate.stage1_error < model.stage1_error:
            model = candidate
        if candidate.stage1_error <= eps / 2:
            model = candidate
            break
    t1 = time.perf_counter()
    net, report = compose(model, sigma, eps, K, target=g, seed=seed,
                          validation_samples=validation_samples, theta_range=theta_range)
    report.dict_sizes_tried = tried
    if sphere_B is not None:
        # max |pair(v_i, b)| over B for every normalized functional
        B = sphere_B if isinstance(sphere_B, np.ndarray) else np.vstack([b.coeffs for b in sphere_B])
        peaks = [float(np.max(np.abs(pair_many(v, B)))) for _, v, _ in model.terms]
        report.sphere_peaks = [min(peaks), max(peaks)]
    report.timings_ms["stage1"] = 1e3 * (t1 - t0)
    report.seeds["dictionary"] = int(seed)
    return net, report
