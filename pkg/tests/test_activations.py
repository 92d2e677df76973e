import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tvsfnn import activations as act
from tvsfnn.errors import ActivationOverflowError, LikelyPolynomialError, NonSmoothActivationError

TANH, RELU, EXP = act.Activation("tanh"), act.Activation("relu"), act.Activation("exp")


def tanh2(t):
    # closed form of the second derivative
    th = np.tanh(t)
    return -2.0 * th * (1.0 - th * th)


def test_eval_examples():
    assert TANH(0.0) == 0.0
    assert RELU(-1.0) == 0.0
    assert act.poly([0, 0, 1])(3.0) == 9.0


def test_parse_ids():
    assert act.parse("sigmoid")(0.0) == 0.5
    assert act.parse("poly:1,0,2").coeffs == (1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        act.parse("swish")


def test_table_activation(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("-1,0\n0,1\n2,3\n")
    sigma = act.parse(f"table:{path}")
    np.testing.assert_allclose(sigma(np.array([-2.0, -0.5, 1.0, 5.0])), [0.0, 0.5, 2.0, 3.0])
    with pytest.raises(NonSmoothActivationError):
        sigma.derivative(0.5)
    np.testing.assert_allclose(sigma.derivative(np.array([-0.5, 1.0]), subgradient=True), [1.0, 1.0])


def test_exp_overflow_is_structured():
    with pytest.raises(ActivationOverflowError):
        EXP(np.array([1.0, 800.0]))


@pytest.mark.parametrize("tag", ["tanh", "sigmoid", "exp", "sin"])
def test_derivative_matches_finite_difference(tag):
    sigma = act.Activation(tag)
    t = np.linspace(-2, 2, 41)
    fd = (sigma(t + 1e-6) - sigma(t - 1e-6)) / 2e-6
    np.testing.assert_allclose(sigma.derivative(t), fd, rtol=1e-8, atol=1e-9)


def test_relu_derivative_policy():
    with pytest.raises(NonSmoothActivationError):
        RELU.derivative(np.array([1.0]))
    np.testing.assert_array_equal(RELU.derivative(np.array([-1.0, 0.0, 2.0]), subgradient=True),
                                  [0.0, 0.0, 1.0])


def test_deriv_est_examples():
    assert abs(act.deriv_est(EXP, 1, 0.0, 1e-5) - 1.0) <= 1e-9
    sq = act.poly([0, 0, 1])
    for t, h in [(0.3, 0.1), (-2.0, 0.7), (5.0, 1e-3)]:
        assert abs(act.deriv_est(sq, 2, t, h) - 2.0) <= 1e-12 * max(1.0, t * t / h / h)
    assert abs(act.deriv_est(TANH, 2, 0.0, 1e-3)) <= 1e-6


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(-1, 1), st.floats(0.05, 1.0))
def test_deriv_est_exact_on_polynomials(coeffs, t, h):
    # the k-th difference of a degree-k polynomial is k! times its leading coefficient
    k = len(coeffs) - 1
    est = float(act.deriv_est(act.poly(coeffs), k, t, h))
    exact = float(np.prod(np.arange(1, k + 1))) * coeffs[-1]
    scale = sum(abs(c) for c in coeffs) * 3.0**k * 2**k / h**k
    assert abs(est - exact) <= 1e-12 * max(1.0, scale)


def test_difference_stencil():
    offsets, weights = act.difference_stencil(3)
    np.testing.assert_array_equal(offsets, [1.5, 0.5, -0.5, -1.5])
    np.testing.assert_array_equal(weights, [1.0, -3.0, 3.0, -1.0])


def test_mollify_identity_is_exact():
    moll = act.mollify(act.poly([0.0, 1.0]), 0.3, 64)
    t = np.linspace(-2, 2, 101)
    np.testing.assert_allclose(moll(t), t, atol=1e-10, rtol=0)


def test_mollify_node_invariants():
    moll = act.mollify(TANH, 0.2, 64)
    assert np.all(np.abs(moll.shifts) < 0.2)
    assert np.all(moll.weights > 0)
    assert abs(moll.weights.sum() - 1.0) <= 1e-10


def test_mollified_relu_outside_kink():
    moll = act.mollify(RELU, 0.1, 256)
    t = np.linspace(0.1, 3.0, 50)
    np.testing.assert_allclose(moll(t), t, atol=1e-12, rtol=0)
    assert np.all(moll(np.linspace(-3, -0.1, 50)) == 0.0)


def _relu_at_zero(delta):
    # oracle: int_0^delta y phi_delta(y) dy by adaptive quadrature
    norm, _ = quad(lambda y: act.bump(y / delta), -delta, delta, epsabs=1e-15)
    num, _ = quad(lambda y: y * act.bump(y / delta), 0.0, delta, epsabs=1e-15)
    return num / norm


def test_mollified_relu_at_zero_matches_quadrature():
    vals = []
    for delta in (0.4, 0.2, 0.1):
        moll = act.mollify(RELU, delta, 4096)
        v = float(moll(0.0))
        # the kink sits mid-stencil, so the node sum converges like M**-2
        assert abs(v - _relu_at_zero(delta)) <= 1e-6 * v
        vals.append(v)
    assert vals[0] > vals[1] > vals[2] > 0


@pytest.mark.parametrize("tag", ["tanh", "sigmoid", "sin", "exp"])
def test_mollify_matches_finer_quadrature(tag):
    from tvsfnn.harness.verify import reference_mollify
    sigma = act.Activation(tag)
    t = np.linspace(-3, 3, 301)
    moll = act.mollify(sigma, 0.1, 128)
    np.testing.assert_allclose(moll(t), reference_mollify(sigma, 0.1, t, 512), atol=1e-8, rtol=0)


def test_mollified_relu_halving_ratio():
    s = np.linspace(-2, 2, 4001)
    dev = [np.max(np.abs(act.mollify(RELU, d, 2048)(s) - RELU(s))) for d in (0.2, 0.1)]
    assert 0.4 <= dev[1] / dev[0] <= 0.6


def test_mollified_derivative_is_smooth_sum():
    moll = act.mollify(RELU, 0.2, 256)
    t = np.linspace(-1, 1, 21)
    fd = (moll(t + 1e-6) - moll(t - 1e-6)) / 2e-6
    np.testing.assert_allclose(moll.derivative(t), fd, atol=1e-6)


def test_mollified_round_trip():
    moll = act.mollify(TANH, 0.1, 32)
    back = act.from_dict(moll.to_dict())
    t = np.linspace(-1, 1, 11)
    np.testing.assert_array_equal(back(t), moll(t))


def test_detect_polynomial_examples():
    assert act.detect_polynomial(act.poly([1, 2, 3]), 8) == 2
    assert act.detect_polynomial(TANH, 8, (-1, 1)) is None
    assert act.detect_polynomial(RELU, 4, (-1, 1)) is None
    assert act.detect_polynomial(act.Activation("sin"), 8, (-1, 1)) is None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2).filter(lambda c: abs(c) > 0.05), min_size=1, max_size=7),
       st.floats(-3, 3), st.floats(1, 4))
def test_detect_polynomial_true_degree(coeffs, a, length):
    assert act.detect_polynomial(act.poly(coeffs), 8, (a, a + length)) == len(coeffs) - 1


def test_find_theta_tanh_second_derivative():
    theta, est = act.find_nonvanishing_theta(TANH, 2, (-4, 4))
    assert abs(tanh2(-theta)) > 0.1
    assert abs(est - tanh2(-theta)) <= 1e-4
    # closed form: the extremum of tanh'' sits at atanh(1/sqrt(3))
    assert abs(abs(theta) - np.arctanh(1 / np.sqrt(3))) <= 0.02


def test_find_theta_exp_any_order():
    for k in range(1, 6):
        theta, est = act.find_nonvanishing_theta(EXP, k, (-1, 1))
        assert abs(est - np.exp(-theta)) <= 1e-3 * np.exp(-theta)


def test_find_theta_rejects_low_degree_polynomial():
    with pytest.raises(LikelyPolynomialError):
        act.find_nonvanishing_theta(act.poly([0, 1]), 2)


@pytest.mark.parametrize("tag", ["relu", "tanh", "sigmoid", "sin", "exp"])
def test_continuity_under_probing(tag):
    sigma = act.Activation(tag)
    t = np.random.default_rng(0).uniform(-5, 5, 1000)
    jumps = np.abs(sigma(t + 1e-9) - sigma(t))
    assert np.max(jumps) <= 1e-9 * 200
