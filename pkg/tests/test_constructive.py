import json
import math

import numpy as np
import pytest

from tvsfnn import activations as act
from tvsfnn import constructive as cons
from tvsfnn import spaces as sp
from tvsfnn.errors import ConditioningError, InadmissibleActivationError, LikelyPolynomialError, ThresholdRangeError
from tvsfnn.harness.targets import build_target, unit_functional

TANH, EXP, SIGMOID = act.Activation("tanh"), act.Activation("exp"), act.Activation("sigmoid")
T = np.linspace(-1, 1, 2001)
L2 = sp.lp_seq(2.0, 16, 1.0)


def sin_target(space=L2, seed=0):
    return build_target({"id": "sin-of-functional", "seed": seed}, space)


def test_monomial_k0_is_exact():
    net = cons.monomial_network(TANH, 0, -1.0, 0.1)
    assert net.width == 1
    np.testing.assert_allclose(net(T), 1.0, rtol=0, atol=1e-15)


@pytest.mark.parametrize("h", [0.3, 0.1, 0.03, 0.01])
def test_monomial_exp_k1_closed_form(h):
    # central difference of exp at 0 in the outer weight: sinh(h t / 2) / sinh(h / 2)
    net = cons.monomial_network(EXP, 1, 0.0, h)
    np.testing.assert_allclose(net(T), np.sinh(h * T / 2) / np.sinh(h / 2), rtol=1e-12, atol=1e-13)
    assert net.error <= h * h / 8
    np.testing.assert_array_equal(net.weights, [h / 2, -h / 2])


def test_monomial_error_shrinks_with_h():
    errs = [cons.monomial_network(EXP, 1, 0.0, h).error for h in (0.3, 0.1, 0.03, 0.01)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_monomial_structure():
    h = 0.05
    net = cons.monomial_network(TANH, 3, -0.7, h)
    assert net.width == 4
    np.testing.assert_allclose(net.weights, np.array([1.5, 0.5, -0.5, -1.5]) * h)
    assert np.all(net.thresholds == -0.7)


def test_monomial_tanh_k3_tuned():
    net, sweep = cons.best_monomial(TANH, 3)
    assert np.max(np.abs(net(T) - T**3)) < 1e-2
    assert len(sweep) > 0


def test_monomial_refuses_vanishing_derivative():
    # tanh''(0) = 0
    with pytest.raises(LikelyPolynomialError):
        cons.monomial_network(TANH, 2, 0.0, 1e-3)


@pytest.mark.parametrize("tag", ["exp", "tanh", "sigmoid"])
def test_monomial_sweep_minimum(tag):
    sigma = act.Activation(tag)
    for k in range(1, 5):
        _, sweep = cons.best_monomial(sigma, k)
        assert min(err for _, _, err in sweep) < 1e-2


def test_poly_network_examples():
    const = cons.poly_network(TANH, [5.0], (-2, 3))
    t = np.linspace(-2, 3, 501)
    np.testing.assert_allclose(const(t), 5.0, rtol=0, atol=1e-12)
    zero = cons.poly_network(TANH, [0.0, 0.0], (-1, 1))
    assert zero.width == 0 and np.all(zero(t) == 0.0)


def test_poly_network_square_with_exp():
    _, sweep = cons.best_monomial(EXP, 2)
    plain = [err for h, rich, err in sweep if not rich]
    # truncation regime: the error falls as h shrinks before roundoff takes over
    assert all(b < a for a, b in zip(plain[:6], plain[1:6]))
    net = cons.poly_network(EXP, [0.0, 0.0, 1.0], (-1, 1), eps=1e-6)
    assert net.error == pytest.approx(np.max(np.abs(net(cons._dense(-1, 1)) - cons._dense(-1, 1) ** 2)))
    assert net.budget_met


def test_poly_network_shifted_interval():
    coeffs = [0.3, -1.0, 0.5, 0.2]
    net = cons.poly_network(SIGMOID, coeffs, (-2.0, 3.0), eps=1e-3)
    t = np.linspace(-2, 3, 1001)
    assert np.max(np.abs(net(t) - np.polynomial.polynomial.polyval(t, coeffs))) <= 1e-3


def test_threshold_range_violation():
    # mapping [999, 1001] onto [-1, 1] moves every threshold by w * 1000
    with pytest.raises(ThresholdRangeError):
        cons.poly_network(TANH, [0.0, 0.0, 1.0], (999.0, 1001.0), theta_range=(-1.0, 1.0))
    inside = cons.poly_network(TANH, [0.0, 0.0, 1.0], (-1, 1), theta_range=(-0.1, 0.1))
    assert np.all(np.abs(inside.thresholds) <= 0.1)


def test_exp_1d_examples():
    net = cons.exp_1d_network(EXP, 2.5, (-1, 2), 1e-6)
    assert net.width == 1 and net.error <= 1e-14
    zero = cons.exp_1d_network(TANH, 0.0, (-1, 1), 1e-3)
    assert zero.width == 0


def test_exp_1d_tanh_chebyshev_degree():
    net = cons.exp_1d_network(TANH, 1.0, (-1, 1), 1e-2)
    assert net.info["route"] == "chebyshev"
    assert net.info["degree"] <= 10
    assert net.error <= 1e-2
    # interpolation error bound: max|f^(11)| / (2**10 * 11!) on [-1, 1]
    cheb = np.polynomial.chebyshev.Chebyshev.interpolate(np.exp, 10)
    bound = math.e / (2**10 * math.factorial(11))
    assert np.max(np.abs(cheb(T) - np.exp(T))) <= bound < 1e-9


def test_exp_1d_rate_and_shift():
    net = cons.exp_1d_network(TANH, -0.7, (0.5, 2.0), 1e-3, rate=0.8)
    t = np.linspace(0.5, 2.0, 501)
    assert np.max(np.abs(net(t) + 0.7 * np.exp(0.8 * t))) <= 1e-3


def test_dictionary_in_span():
    r = unit_functional(L2, 4)
    K = sp.CompactSampler(L2, seed=1)
    model = cons.exp_dictionary_fit(lambda X: np.exp(X @ r.kernel), K, 2, ridge=0.0, extra=[r])
    assert model.stage1_error <= 1e-10


def test_dictionary_constant_target():
    K = sp.CompactSampler(L2, seed=1)
    model = cons.exp_dictionary_fit(lambda X: np.ones(len(X)), K, 1)
    assert model.stage1_error <= 1e-12
    assert np.all(model.duals == 0.0)


def test_dictionary_error_decreases_with_size():
    K = sp.CompactSampler(L2, seed=0)
    errs = [cons.exp_dictionary_fit(sin_target(), K, n, seed=0).stage1_error for n in (8, 32, 128)]
    assert errs[0] > errs[1] > errs[2]


def test_dictionary_exponent_cap_on_validation():
    K = sp.CompactSampler(L2, seed=0)
    model = cons.exp_dictionary_fit(sin_target(), K, 64, seed=0)
    Xv = sp.CompactSampler(L2, seed=99).sample_array(4096)
    assert np.max(np.abs(model.exponents(Xv))) <= cons.EXP_CAP


def test_dictionary_conditioning_error():
    K = sp.CompactSampler(L2, seed=0)
    with pytest.raises(ConditioningError) as info:
        cons.exp_dictionary_fit(sin_target(), K, 64, ridge=0.0, max_condition=10.0)
    assert info.value.details["condition"] > 10.0


def _one_term_model(space, a, r, alpha=1.0):
    g = lambda X: a * np.exp(alpha * (X @ space.kernel(r)))  # noqa: E731
    return cons.ExpModel(space, np.array([a]), np.array([r]), np.array([alpha]), 0.0, target=g)


def test_compose_with_exp_collapses():
    r = unit_functional(L2, 1).rep
    model = _one_term_model(L2, 1.7, r)
    K = sp.CompactSampler(L2, seed=0)
    net, report = cons.compose(model, EXP, 0.1, K)
    assert net.width == 1
    assert report.validation_error - report.stage1_error <= 1e-10


def test_compose_drops_zero_terms():
    r = unit_functional(L2, 1).rep
    model = cons.ExpModel(L2, np.array([0.0, 1.0]), np.array([r, -r]), np.ones(2), 0.0,
                          target=lambda X: np.exp(-(X @ r)))
    net, report = cons.compose(model, EXP, 0.1, sp.CompactSampler(L2, seed=0))
    assert net.width == 1
    assert report.stage2_errors[0] == 0.0


def test_compose_tanh_end_to_end():
    K = sp.CompactSampler(L2, seed=0)
    g = sin_target()
    model = cons.exp_dictionary_fit(g, K, 64, seed=0)
    assert model.stage1_error <= 0.05
    net, report = cons.compose(model, TANH, 0.1, K, target=g)
    assert report.validation_error <= 0.1
    assert report.ledger_holds
    assert report.total_estimate == pytest.approx(report.stage1_error + math.fsum(report.stage2_errors))
    assert len(report.exp_ranges) == report.dict_size == 64


def test_report_json_fields():
    K = sp.CompactSampler(L2, seed=0)
    _, report = cons.approximate(sin_target(), K, TANH, 0.2)
    data = json.loads(report.to_json())
    for key in ("dict_size", "exp_ranges", "stage1_error", "stage2_errors", "final_width",
                "total_estimate", "validation_error", "seeds", "timings_ms"):
        assert key in data
    assert "timings_ms" not in report.to_dict(timings=False)


def test_report_triangle_assertion():
    with pytest.raises(AssertionError):
        cons.ConstructionReport(1, [(0, 1)], 0.1, [0.1], 3, 0.5, None, {})


def test_approximate_constant():
    K = sp.CompactSampler(L2, seed=0)
    net, report = cons.approximate(lambda X: np.full(len(X), 0.3), K, TANH, 1e-3)
    assert net.width >= 1
    assert report.validation_error <= 1e-3


def test_approximate_self_target():
    space = sp.euclidean(2)
    K = sp.CompactSampler(space, seed=0)
    g = build_target({"id": "network-self-target", "width": 3, "seed": 5}, space, TANH)
    net, report = cons.approximate(g, K, TANH, 0.05)
    assert report.validation_error <= 0.05


def test_approximate_rejects_polynomials():
    K = sp.CompactSampler(L2, seed=0)
    with pytest.raises(InadmissibleActivationError) as info:
        cons.approximate(sin_target(), K, act.poly([0.0, 1.0]), 0.1)
    assert info.value.details["degree"] == 1


def test_approximate_is_deterministic():
    K = sp.CompactSampler(L2, seed=3)
    a, ra = cons.approximate(sin_target(), K, TANH, 0.1, seed=7)
    b, rb = cons.approximate(sin_target(), K, TANH, 0.1, seed=7)
    np.testing.assert_array_equal(a.param_vector(), b.param_vector())
    assert ra.to_json(timings=False) == rb.to_json(timings=False)


def test_approximate_sphere_variant():
    K = sp.CompactSampler(L2, seed=0)
    X = K.clone(11).sample_array(1024)
    B = X / np.linalg.norm(X, axis=1, keepdims=True)
    g = sin_target()
    model = cons.exp_dictionary_fit(g, K, 32, sphere_B=B)
    peaks = np.array([np.max(np.abs(sp.pair_many(f, B))) for _, f, _ in model.terms])
    assert np.all((peaks >= 1 - 1e-10) & (peaks <= 1.0))
    assert model.alpha[0] == 0.0 and np.all(model.alpha[1:] > 0)


def test_ledger_soundness_over_seeds():
    held = 0
    # at least 95% of seeded runs
    for seed in range(20):
        K = sp.CompactSampler(L2, seed=seed)
        _, report = cons.approximate(sin_target(seed=seed), K, TANH, 0.1, seed=seed)
        held += report.ledger_holds
    assert held >= 19


def test_affine_fold_back():
    net = cons.poly_network(TANH, [0.0, 1.0], (-1, 1))
    moved = net.affine(2.0, 3.0)
    t = np.linspace(1, 5, 101)
    np.testing.assert_allclose(moved(t), net((t - 3.0) / 2.0), rtol=1e-13, atol=1e-13)
