import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tvsfnn import spaces as sp
from tvsfnn.errors import DegenerateFunctionalError, InvalidSpaceError, NonFiniteError, SpaceMismatchError

ALL_SPACES = [
    sp.euclidean(3),
    sp.matrix(2, 3),
    sp.lp_seq(1.0, 12),
    sp.lp_seq(2.5, 12, s=0.5),
    sp.c0_seq(12),
    sp.lp_fun(2.0, 0.0, 1.0, nodes=32),
    sp.c_fun(-1.0, 2.0, nodes=32),
]


def test_matrix_pairing_is_trace():
    s = sp.matrix(2, 2)
    f = sp.Functional(s, np.eye(2).ravel())
    x = sp.Element(s, [1.0, 2.0, 3.0, 4.0])
    assert sp.pair(f, x) == 5.0


def test_sequence_coordinate_projection():
    s = sp.lp_seq(2.0, 8)
    a = np.zeros(8)
    a[0] = 1.0
    x = sp.Element(s, np.r_[3.0, np.arange(7.0)])
    assert sp.pair(sp.Functional(s, a), x) == 3.0


def test_lp_fun_integral_of_one():
    s = sp.lp_fun(2.0, 0.0, 1.0)
    one = sp.Functional(s, np.ones(s.dual_dim))
    assert abs(sp.pair(one, sp.Element(s, np.ones(s.dim))) - 1.0) <= 1e-14


def test_lp_fun_quadrature_against_scipy():
    s = sp.lp_fun(2.0, 0.0, 2.0)
    t = s.grid.t
    f = sp.Functional(s, np.cos(3 * t))
    x = sp.Element(s, np.exp(-t))
    ref, _ = quad(lambda u: np.cos(3 * u) * np.exp(-u), 0.0, 2.0, epsabs=1e-14)
    assert abs(sp.pair(f, x) - ref) <= 1e-12


def test_c_fun_atoms_snap_and_density():
    s = sp.c_fun(0.0, 1.0, nodes=16)
    t = s.grid.t
    # atom placed between nodes lands on the nearest one
    target = t[5] + 0.2 * (t[6] - t[5])
    f = sp.Functional.measure(s, atoms=[(target, 2.0)], density=np.ones(16))
    x = sp.Element(s, t**2)
    expected = 2.0 * t[5] ** 2 + np.sum(s.grid.w * t**2)
    assert abs(sp.pair(f, x) - expected) <= 1e-14
    assert abs(np.sum(s.grid.w * t**2) - 1.0 / 3.0) <= 1e-14


def test_norm_examples():
    assert sp.norm(sp.Element(sp.lp_seq(2.0, 4), [3.0, 4.0, 0.0, 0.0])) == 5.0
    assert abs(sp.norm(sp.Element(sp.matrix(2, 2), np.eye(2).ravel())) - math.sqrt(2)) <= 1e-15
    s = sp.c_fun(0.0, 1.0, nodes=16)
    c = np.zeros(16)
    c[3] = -2.0
    assert sp.norm(sp.Element(s, c)) == 2.0


def test_holder_examples():
    s = sp.lp_seq(2.0, 5)
    e1 = np.eye(5)[0]
    assert sp.holder_bound(sp.Functional(s, e1), sp.Element(s, e1)) == (1.0, 1.0)
    f = sp.Functional(s, np.arange(5.0))
    assert sp.holder_bound(f, sp.Element(s, np.zeros(5))) == (0.0, 0.0)


def test_holder_p1_uses_sup_dual():
    s = sp.lp_seq(1.0, 4)
    f = sp.Functional(s, [1.0, -3.0, 2.0, 0.5])
    x = sp.Element(s, [0.0, -1.0, 0.0, 0.0])
    lhs, rhs = sp.holder_bound(f, x)
    assert lhs == 3.0 and rhs == 3.0


def test_space_mismatch_and_nonfinite():
    f = sp.Functional(sp.lp_seq(2.0, 3), [1.0, 1.0, 1.0])
    with pytest.raises(SpaceMismatchError):
        sp.pair(f, sp.Element(sp.lp_seq(3.0, 3), [1.0, 1.0, 1.0]))
    with pytest.raises(NonFiniteError):
        sp.Element(sp.lp_seq(2.0, 3), [1.0, np.nan, 0.0])
    big = sp.Functional(sp.lp_seq(2.0, 2), [1e308, 1e308])
    with pytest.raises(NonFiniteError):
        sp.pair(big, sp.Element(sp.lp_seq(2.0, 2), [1e308, 1e308]))


@pytest.mark.parametrize("kwargs", [
    dict(kind="lp_seq", shape=(4,), p=0.5),
    dict(kind="lp_seq", shape=(0,)),
    dict(kind="c0_seq", shape=(4,), decay=0.0),
    dict(kind="warp", shape=(2,)),
])
def test_invalid_descriptors(kwargs):
    with pytest.raises(InvalidSpaceError):
        sp.SpaceDescriptor(**kwargs)


def test_dual_exponents():
    assert sp.lp_seq(3.0, 2).q == 1.5
    assert sp.lp_seq(1.0, 2).q == math.inf
    assert sp.c0_seq(2).q == 1.0
    assert sp.c_fun().q == 1.0


def test_combine_examples():
    s = sp.lp_seq(2.0, 6)
    rng = np.random.default_rng(1)
    f = sp.random_functional(s, rng)
    x = sp.Element(s, rng.standard_normal(6))
    assert sp.pair(sp.combine(f, f, 1.0, -1.0), x) == 0.0
    assert sp.pair(sp.combine(f, sp.Functional.zero(s), 2.0, 0.0), x) == 2.0 * sp.pair(f, x)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, len(ALL_SPACES) - 1), st.integers(0, 2**32 - 1),
       st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_bilinearity(idx, seed, a, b):
    s = ALL_SPACES[idx]
    rng = np.random.default_rng(seed)
    f1, f2 = sp.random_functional(s, rng), sp.random_functional(s, rng)
    x = sp.Element(s, rng.standard_normal(s.dim))
    y = sp.Element(s, rng.standard_normal(s.dim))
    scale = abs(a) * f1.dual_norm() * sp.norm(x) + abs(b) * f1.dual_norm() * sp.norm(y) + 1e-300
    lhs = sp.pair(f1, x * a + y * b)
    assert abs(lhs - (a * sp.pair(f1, x) + b * sp.pair(f1, y))) <= 1e-12 * scale
    scale = sp.norm(x) * (abs(a) * f1.dual_norm() + abs(b) * f2.dual_norm()) + 1e-300
    lhs = sp.pair(sp.combine(f1, f2, a, b), x)
    assert abs(lhs - (a * sp.pair(f1, x) + b * sp.pair(f2, x))) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(st.integers(0, len(ALL_SPACES) - 1), st.integers(0, 2**32 - 1))
def test_holder_inequality(idx, seed):
    s = ALL_SPACES[idx]
    rng = np.random.default_rng(seed)
    f = sp.random_functional(s, rng)
    x = sp.Element(s, rng.standard_normal(s.dim) * 10.0 ** rng.uniform(-3, 3))
    lhs, rhs = sp.holder_bound(f, x)
    assert lhs <= rhs * (1 + 1e-12)


def test_holder_bound_over_sampled_compact_set():
    s = sp.lp_seq(2.0, 16)
    K = sp.CompactSampler(s, 1.0, seed=3)
    X = K.sample_array(2000)
    f = sp.random_functional(s, np.random.default_rng(0))
    # every sample has l2 norm <= ||envelope||_2, so |f(x)| is uniformly bounded
    bound = f.dual_norm() * float(np.linalg.norm(K.envelope()))
    assert np.max(np.abs(sp.pair_many(f, X))) <= bound


@pytest.mark.parametrize("space", ALL_SPACES, ids=lambda s: s.kind)
def test_sampler_envelopes(space):
    K = sp.CompactSampler(space, 1.5, seed=7)
    X = K.sample_array(500)
    assert np.all(K.contains(X))
    if space.kind in ("euclidean", "matrix"):
        assert np.max(np.linalg.norm(X, axis=1)) <= 1.5
    elif space.kind in ("lp_seq", "c0_seq"):
        assert np.all(np.abs(X) <= K.envelope())
    else:
        assert np.max(np.abs(X)) <= 1.5


def test_sampler_lp_envelope_rho1_s1():
    K = sp.CompactSampler(sp.lp_seq(2.0, 20), 1.0, seed=0)
    X = K.sample_array(1000)
    n = np.arange(1, 21)
    assert np.all(np.abs(X) <= 1.0 / n)


def test_sampler_determinism_and_clone():
    s = sp.matrix(2, 2)
    a = sp.sample(sp.CompactSampler(s, seed=7), 3)
    b = sp.sample(sp.CompactSampler(s, seed=7), 3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.coeffs, y.coeffs)
    K = sp.CompactSampler(s, seed=7)
    K.sample_array(5)
    np.testing.assert_array_equal(K.clone().sample_array(3), sp.CompactSampler(s, seed=7).sample_array(3))


def test_normalize_examples():
    s = sp.lp_seq(2.0, 3)
    B = [sp.Element(s, [1.0, 0.0, 0.0]), sp.Element(s, [0.0, 1.0, 0.0])]
    f = sp.Functional(s, [2.0, -1.0, 5.0])
    g = sp.normalize_to_sphere(f, B)
    np.testing.assert_array_equal(g.rep, f.rep / 2.0)
    h = sp.normalize_to_sphere(g, B)
    np.testing.assert_allclose(h.rep, g.rep, rtol=1e-15, atol=0)
    with pytest.raises(DegenerateFunctionalError):
        sp.normalize_to_sphere(sp.Functional.zero(s), B)
    # vanishes on every sample of B although nonzero
    with pytest.raises(DegenerateFunctionalError):
        sp.normalize_to_sphere(sp.Functional(s, [0.0, 0.0, 1.0]), B)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, len(ALL_SPACES) - 1), st.integers(0, 2**32 - 1),
       st.floats(1e-6, 1e6))
def test_normalize_scale_invariant(idx, seed, c):
    s = ALL_SPACES[idx]
    rng = np.random.default_rng(seed)
    B = sp.CompactSampler(s, seed=seed % 1000).sample_array(64)
    f = sp.random_functional(s, rng)
    g1 = sp.normalize_to_sphere(f, B)
    g2 = sp.normalize_to_sphere(sp.combine(f, f, c, 0.0), B)
    np.testing.assert_allclose(g2.rep, g1.rep, rtol=1e-12, atol=1e-12 * np.max(np.abs(g1.rep)))
    peak = np.max(np.abs(sp.pair_many(g1, B)))
    assert 1.0 - 1e-12 <= peak <= 1.0


def test_separation_proxy():
    # random functionals separate distinct sampled elements within a few draws
    s = sp.lp_seq(2.0, 16)
    X = sp.CompactSampler(s, seed=2).sample_array(20)
    rng = np.random.default_rng(0)
    for i in range(len(X) - 1):
        x1, x2 = X[i], X[i + 1]
        gap = 1e-9 * np.linalg.norm(x1 - x2)
        assert any(abs(sp.random_functional(s, rng).kernel @ (x1 - x2)) > gap for _ in range(100))


@pytest.mark.parametrize("space", ALL_SPACES, ids=lambda s: s.kind)
def test_json_round_trip(space):
    rng = np.random.default_rng(5)
    d = json.loads(json.dumps(space.to_dict()))
    assert sp.SpaceDescriptor.from_dict(d) == space
    x = sp.Element(space, rng.standard_normal(space.dim))
    y = sp.Element.from_dict(json.loads(json.dumps(x.to_dict())))
    np.testing.assert_array_equal(x.coeffs, y.coeffs)
    f = sp.random_functional(space, rng)
    g = sp.Functional.from_dict(json.loads(json.dumps(f.to_dict())))
    np.testing.assert_array_equal(f.rep, g.rep)
    assert g.space == space


def test_elements_are_immutable():
    x = sp.Element(sp.euclidean(2), [1.0, 2.0])
    with pytest.raises(ValueError):
        x.coeffs[0] = 5.0
