"""Named verification suites with fixed seeds.

Each suite returns a report ``{"suite", "passed", "checks"}`` where every
check records the measured value next to its threshold.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.optimize import linprog

from .. import activations as act
from .. import spaces as sp
from ..constructive import approximate, best_monomial, exp_dictionary_fit
from ..errors import DivergenceError, InadmissibleActivationError
from ..network import TrainConfig, gradients, init, mse, train

SUITES = ("pairings", "gradients", "mollify", "monomials", "algebra", "negative-control")

PAIRING_SPACES = (
    sp.euclidean(8),
    sp.matrix(3, 4),
    sp.lp_seq(1.0, 32),
    sp.lp_seq(3.0, 32),
    sp.c0_seq(32),
    sp.lp_fun(1.5, 0.0, 1.0),
    sp.c_fun(-1.0, 1.0),
)
GRADIENT_SPACES = (
    sp.euclidean(4),
    sp.matrix(2, 3),
    sp.lp_seq(2.0, 16),
    sp.c0_seq(16),
    sp.lp_fun(3.0, 0.0, 1.0, nodes=16),
    sp.c_fun(0.0, 1.0, nodes=16),
)
SMOOTH = ("tanh", "sigmoid", "sin", "exp")
# node counts where the node sum is converged to 1e-8; relu's kink slows it to O(M^-2)
MOLLIFY_NODES = {"tanh": 128, "sigmoid": 128, "sin": 128, "relu": 4096}


def _check(name, value, threshold, passed, **extra):
    out = {"name": name, "value": float(value), "threshold": float(threshold), "passed": bool(passed)}
    out.update(extra)
    return out


def _random_vectors(rng, space, count):
    # mixed scales so that the relative tolerances are exercised across magnitudes
    scale = 10.0 ** rng.uniform(-3, 3, (count, 1))
    return rng.standard_normal((count, space.dim)) * scale


def _aligned(space, rep):
    # elements attaining (or nearly attaining) Hölder equality for sequence-type pairings
    k = space.kernel(rep)
    p = space.norm_p
    if math.isinf(p):
        return np.sign(k)
    if p == 1.0:
        out = np.zeros_like(k)
        idx = np.argmax(np.abs(k), axis=-1)
        out[np.arange(len(k)), idx] = np.sign(k[np.arange(len(k)), idx])
        return out
    if space.kind == "lp_fun":
        return np.sign(rep) * np.abs(rep) ** (space.q - 1.0)
    return np.sign(k) * np.abs(k) ** (space.q - 1.0)


def pairings(trials: int = 10_000, seed: int = 0) -> dict:
    """Bilinearity (relative 1e-12) and Hölder (no violations) per space kind."""
    checks = []
    for i, space in enumerate(PAIRING_SPACES):
        rng = np.random.default_rng([seed, i])
        f1 = rng.standard_normal((trials, space.dual_dim))
        f2 = rng.standard_normal((trials, space.dual_dim))
        x = _random_vectors(rng, space, trials)
        y = _random_vectors(rng, space, trials)
        a, b = rng.uniform(-10, 10, (2, trials, 1))

        def P(f, z):
            return np.einsum("ij,ij->i", z, space.kernel(f))

        nf1, nf2 = space.dual_norm_of(f1), space.dual_norm_of(f2)
        nx, ny = space.norm_of(x), space.norm_of(y)
        # error scale: the Hölder bound on the magnitude of the summed terms
        lhs_x = P(f1, a * x + b * y) - (a[:, 0] * P(f1, x) + b[:, 0] * P(f1, y))
        scale_x = nf1 * (np.abs(a[:, 0]) * nx + np.abs(b[:, 0]) * ny)
        lhs_f = P(a * f1 + b * f2, x) - (a[:, 0] * P(f1, x) + b[:, 0] * P(f2, x))
        scale_f = nx * (np.abs(a[:, 0]) * nf1 + np.abs(b[:, 0]) * nf2)
        rel = max(float(np.max(np.abs(lhs_x) / scale_x)), float(np.max(np.abs(lhs_f) / scale_f)))
        checks.append(_check(f"bilinearity[{space.describe()}]", rel, 1e-12, rel <= 1e-12))

        z = np.vstack([x, _aligned(space, f1[: trials // 10])])
        fz = np.vstack([f1, f1[: trials // 10]])
        val = np.abs(P(fz, z))
        bound = space.dual_norm_of(fz) * space.norm_of(z)
        # the bound itself carries rounding; allow a few ulps of it
        violations = int(np.sum(val > bound * (1.0 + 8 * act.EPS)))
        checks.append(_check(f"holder[{space.describe()}]", violations, 0, violations == 0,
                             trials=int(len(val)), max_ratio=float(np.max(val / bound))))
    return {"suite": "pairings", "checks": checks}


def _fd_gradient(net, X, y, h=1e-3):
    # fourth-order central differences of the loss in every parameter
    p0 = net.param_vector()
    out = np.empty_like(p0)
    for j in range(len(p0)):
        vals = []
        for step in (-2, -1, 1, 2):
            p = p0.copy()
            p[j] += step * h
            vals.append(mse(net.from_vector(p), X, y))
        out[j] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    return out


def gradients_suite(configs: int = 10, seed: int = 0, tol: float = 1e-5) -> dict:
    """Analytic gradients against fourth-order finite differences."""
    checks = []
    for i, space in enumerate(GRADIENT_SPACES):
        worst = 0.0
        for j in range(configs):
            rng = np.random.default_rng([seed, i, j])
            sigma = act.Activation(SMOOTH[j % len(SMOOTH)])
            net = init(space, sigma, 3, seed=int(rng.integers(2**31)), scale=0.5)
            X = rng.uniform(-1, 1, (6, space.dim))
            y = rng.standard_normal(6)
            g = gradients(net, (X, y))
            analytic = np.concatenate([g["c"], g["theta"], g["duals"].ravel()])
            numeric = _fd_gradient(net, X, y)
            # relative to the coordinate, floored at 1e-6 of the largest gradient entry
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)),
                               1e-6 * np.max(np.abs(numeric)))
            worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
        checks.append(_check(f"gradient[{space.describe()}]", worst, tol, worst < tol,
                             configs=configs))
    return {"suite": "gradients", "checks": checks}


def reference_mollify(sigma, delta, t, nodes):
    """Composite Gauss-Legendre (8 panels) reference for (sigma * phi_delta)(t)."""
    u, w = np.polynomial.legendre.leggauss(max(nodes // 8, 2))
    edges = np.linspace(-1.0, 1.0, 9)
    mids, halves = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    U = (mids[:, None] + halves[:, None] * u).ravel()
    W = (halves[:, None] * w).ravel() * act.bump(U)
    W /= W.sum()
    return sigma(np.asarray(t)[:, None] - delta * U) @ W


def mollify_suite(delta: float = 0.1, tol: float = 1e-8) -> dict:
    checks = []
    t = np.linspace(-3.0, 3.0, 601)
    for tag, nodes in MOLLIFY_NODES.items():
        sigma = act.Activation(tag)
        moll = act.mollify(sigma, delta, nodes)
        ref = reference_mollify(sigma, delta, t, 4 * nodes)
        err = float(np.max(np.abs(moll(t) - ref)))
        checks.append(_check(f"quadrature[{tag},M={nodes}]", err, tol, err <= tol))
    relu = act.Activation("relu")
    dev = []
    for d in (0.2, 0.1, 0.05):
        m = act.mollify(relu, d, MOLLIFY_NODES["relu"])
        s = np.linspace(-3.0, 3.0, 6001)
        dev.append(float(np.max(np.abs(m(s) - relu(s)))))
    for k in range(2):
        ratio = dev[k + 1] / dev[k]
        checks.append(_check(f"relu-halving[{k}]", ratio, 0.5, 0.4 <= ratio <= 0.6,
                             deviations=dev[k:k + 2]))
    return {"suite": "mollify", "checks": checks}


def monomials_suite() -> dict:
    checks = []
    t = np.linspace(-1.0, 1.0, 4001)
    for tag in ("exp", "tanh", "sigmoid"):
        sigma = act.Activation(tag)
        for k in range(5):
            net, _ = best_monomial(sigma, k)
            err = float(np.max(np.abs(net(t) - t**k)))
            tol = 1e-12 if k == 0 else 1e-2
            checks.append(_check(f"monomial[{tag},k={k}]", err, tol, err <= tol, width=net.width))
    return {"suite": "monomials", "checks": checks}


def algebra_suite(trials: int = 1000, seed: int = 0) -> dict:
    checks = []
    rng = np.random.default_rng(seed)
    spaces = PAIRING_SPACES
    worst = 0.0
    for i in range(trials):
        space = spaces[i % len(spaces)]
        f1 = sp.random_functional(space, rng)
        f2 = sp.random_functional(space, rng)
        x = sp.Element(space, rng.uniform(-1, 1, space.dim))
        # keep exponents moderate so that the identity is tested, not overflow
        s = 3.0 / max(abs(sp.pair(f1, x)), abs(sp.pair(f2, x)), 1e-300)
        f1, f2 = sp.combine(f1, f1, s, 0.0), sp.combine(f2, f2, s, 0.0)
        lhs = math.exp(sp.pair(f1, x)) * math.exp(sp.pair(f2, x))
        rhs = math.exp(sp.pair(sp.combine(f1, f2, 1.0, 1.0), x))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    checks.append(_check("product-identity", worst, 1e-12, worst <= 1e-12, trials=trials))

    space = sp.lp_seq(2.0, 16)
    K = sp.CompactSampler(space, 1.0, seed=seed)
    frng = np.random.default_rng([seed, 1])
    reps = frng.standard_normal((5, space.dual_dim))
    reps *= (frng.uniform(0.3, 1.5, 5) / space.dual_norm_of(reps))[:, None]
    coef = frng.uniform(-1, 1, 6)

    def g(X):
        return coef[0] + np.exp(X @ space.kernel(reps).T) @ coef[1:]

    model = exp_dictionary_fit(g, K, 6, ridge=0.0, seed=seed,
                               extra=[sp.Functional(space, r) for r in reps])
    checks.append(_check("in-span-fit", model.stage1_error, 1e-10, model.stage1_error <= 1e-10,
                         condition=model.info["condition"]))
    return {"suite": "algebra", "checks": checks}


def minimax_oracle(target, degree, grid):
    """Best sup-norm error of polynomials of ``degree`` against ``target`` on ``grid`` (an LP)."""
    V = np.vander(grid, degree + 1, increasing=True)
    y = target(grid)
    m = degree + 1
    # variables (coeffs, e); minimize e subject to |V c - y| <= e
    A = np.block([[V, -np.ones((len(grid), 1))], [-V, -np.ones((len(grid), 1))]])
    b = np.concatenate([y, -y])
    res = linprog(np.r_[np.zeros(m), 1.0], A_ub=A, b_ub=b,
                  bounds=[(None, None)] * m + [(0, None)], method="highs")
    return float(res.x[-1])


def negative_control_suite(seed: int = 0) -> dict:
    """A polynomial activation cannot approximate beyond its degree."""
    checks = []
    sigma = act.poly([0.0, 0.0, 1.0])
    degree = act.detect_polynomial(sigma, 8, (-4.0, 4.0))
    checks.append(_check("detect-degree", -1 if degree is None else degree, 2, degree == 2))

    # 3001 nodes hit the equioscillation points cos(j pi / 3) exactly
    grid = np.cos(np.linspace(0.0, np.pi, 3001))
    oracle = minimax_oracle(lambda t: t**3, 2, grid)
    cheb = 2.0 ** -2  # monic Chebyshev polynomial T3/4 equioscillates at this level
    checks.append(_check("minimax-oracle", oracle, cheb, abs(oracle - cheb) <= 1e-9))

    try:
        approximate(lambda X: X[:, 0] ** 3, sp.CompactSampler(sp.euclidean(1), seed=seed), sigma, 0.1)
        rejected = False
    except InadmissibleActivationError:
        rejected = True
    checks.append(_check("construct-rejects", float(rejected), 1.0, rejected))

    space = sp.euclidean(1)
    X = np.linspace(-1.0, 1.0, 401)[:, None]
    y = X[:, 0] ** 3
    net = init(space, sigma, 64, seed=seed, scale=0.5)
    try:
        net, trace = train(net, (X, y), TrainConfig(learning_rate=1e-3, iterations=3000,
                                                     optimizer="momentum", seed=seed))
        dense = np.linspace(-1.0, 1.0, 4001)[:, None]
        plateau = float(np.max(np.abs(net(dense) - dense[:, 0] ** 3)))
        extra = {"final_mse": float(trace[-1])}
    except DivergenceError as exc:
        plateau, extra = math.nan, {"reason": exc.code}
    checks.append(_check("trained-plateau", plateau, 0.24, plateau >= 0.24, **extra))
    checks.append(_check("plateau-vs-oracle", plateau, oracle, plateau >= oracle * (1 - 1e-6)))
    return {"suite": "negative-control", "checks": checks}


_RUNNERS = {
    "pairings": pairings,
    "gradients": gradients_suite,
    "mollify": mollify_suite,
    "monomials": monomials_suite,
    "algebra": algebra_suite,
    "negative-control": negative_control_suite,
}


def verify(suite: str) -> dict:
    if suite not in _RUNNERS:
        raise KeyError(suite)
    t0 = time.perf_counter()
    report = _RUNNERS[suite]()
    report["passed"] = all(c["passed"] for c in report["checks"])
    report["runtime_ms"] = 1e3 * (time.perf_counter() - t0)
    return report


def render(report: dict) -> str:
    lines = [f"suite {report['suite']}: {'PASS' if report['passed'] else 'FAIL'} "
             f"({report['runtime_ms']:.0f} ms)"]
    for c in report["checks"]:
        mark = "ok  " if c["passed"] else "FAIL"
        lines.append(f"  {mark} {c['name']}: {c['value']:.6g} (threshold {c['threshold']:.6g})")
    return "\n".join(lines)
