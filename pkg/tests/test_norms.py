from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ulch import Field, GridSpec, ValidationError, WindowError
from ulch.norms import (NormDescriptor, interpolation_exponents, local_integrals, lp_uniformly_local, lp_weighted,
                        spacetime_ul, verify_embedding, verify_interpolation, w12b, window_weights, wm12, wm12b)
from ulch.oracle import brute_norm
from ulch.weights import WeightFn


def _fast(f, desc):
    if desc.space == "Lp_phi":
        return lp_weighted(f, desc.weight, desc.p)
    if desc.space == "Lp_b":
        return lp_uniformly_local(f, desc.p, desc.R, stride=1)
    if desc.space == "W12b":
        return w12b(f, desc.R, stride=1)
    if desc.space == "Wm12b":
        return wm12b(f, desc.R, stride=1)
    return wm12(f)


DESCRIPTORS = [
    NormDescriptor("Lp_phi", 2.0, weight=WeightFn("polynomial", 0.3)),
    NormDescriptor("Lp_phi", 6.0, weight=WeightFn("exponential", 0.2, (0.5,))),
    NormDescriptor("Lp_b", 1.0, 1.0),
    NormDescriptor("Lp_b", 6.0, 0.7),
    NormDescriptor("W12b", 2.0, 1.0),
    NormDescriptor("Wm12b", 2.0, 0.9),
    NormDescriptor("Wm12"),
]


def _with_centre(desc, d):
    if desc.weight is not None and desc.weight.x0:
        w = WeightFn(desc.weight.kind, desc.weight.eps, desc.weight.x0 * d, desc.weight.gamma)
        return NormDescriptor(desc.space, desc.p, desc.R, w)
    return desc


@pytest.mark.parametrize("desc", DESCRIPTORS, ids=lambda d: d.key)
@pytest.mark.parametrize("d,N", [(1, 32), (2, 16), (3, 8)])
def test_brute_force_equivalence(desc, d, N, rng):
    grid = GridSpec(d, N, 2.0)
    desc = _with_centre(desc, d)
    for _ in range(3):
        f = Field(grid, rng.standard_normal(grid.shape))
        fast, slow = _fast(f, desc).value, brute_norm(f, desc).value
        assert abs(fast - slow) <= 1e-10 * max(1.0, slow)


def test_spacetime_matches_brute(rng):
    grid = GridSpec(2, 8, 2.0)
    series = [Field(grid, rng.standard_normal(grid.shape)) for _ in range(6)]
    desc = NormDescriptor("STL2b", 2.0, 1.0)
    fast = spacetime_ul(series, window=3, dt=0.1, R=1.0, stride=1).value
    assert fast == pytest.approx(brute_norm(series, desc, window=3, dt=0.1).value, rel=1e-12)


def test_spacetime_window_longer_than_series():
    grid = GridSpec(1, 8, 2.0)
    with pytest.raises(WindowError):
        spacetime_ul([Field.constant(grid, 1.0)], window=2, dt=0.1)


def test_window_weights_frozen():
    grid = GridSpec(1, 16, 2.0)   # h = 0.25, R = 1 covers 8 cells
    w = window_weights(grid, 1.0)
    assert np.allclose(w, [0.5] + [1.0] * 7 + [0.5])
    w = window_weights(grid, 0.3)  # r = 1.2: outer cells cover [0.5h, 1.2h]
    assert np.allclose(w, [0.7, 1.0, 0.7])


@pytest.mark.parametrize("R", [0.0, 5.0])
def test_window_radius_rejected(R):
    with pytest.raises(ValidationError):
        window_weights(GridSpec(1, 16, 2.0), R)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("c", [-0.7, 2.0])
def test_constant_field_closed_forms(d, c):
    grid = GridSpec(d, 16, 4.0)
    f = Field.constant(grid, c)
    vol = 2.0**d
    assert w12b(f).value ** 2 == pytest.approx(c * c * vol, rel=1e-12)
    assert wm12b(f).value ** 2 == pytest.approx(c * c * vol, rel=1e-12)
    assert lp_uniformly_local(f, 6.0).value == pytest.approx(abs(c) * vol ** (1 / 6), rel=1e-12)
    assert wm12(f).value ** 2 == pytest.approx(c * c * 8.0**d, rel=1e-12)


@pytest.mark.parametrize("m", [1, 3, 5])
def test_wm12_of_sine(m):
    grid = GridSpec(1, 64, np.pi)
    f = Field.from_function(grid, lambda x: np.sin(m * x))
    assert wm12(f).value == pytest.approx(np.sqrt(np.pi / (1 + m * m)), rel=1e-12)


def test_local_integral_of_density_total(rng):
    # summing the local integrals over all centres counts each cell (2R/h)^d times
    grid = GridSpec(2, 16, 2.0)
    dens = rng.uniform(0, 1, grid.shape)
    loc = local_integrals(dens, grid, 0.5)
    assert loc.sum() == pytest.approx(dens.sum() * grid.cell_volume * (1.0 / grid.h) ** 2, rel=1e-12)


@given(st.integers(0, 2**31 - 1), st.floats(-5, 5), st.sampled_from(["Lp_b", "W12b", "Wm12b", "Wm12"]))
def test_homogeneity(seed, c, space):
    grid = GridSpec(1, 32, 3.0)
    f = Field(grid, np.random.default_rng(seed).standard_normal(32))
    desc = NormDescriptor(space, 2.0, 1.0)
    assert _fast(c * f, desc).value == pytest.approx(abs(c) * _fast(f, desc).value, rel=1e-10, abs=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(0, 31), st.sampled_from(["Lp_b", "W12b", "Wm12b"]))
def test_translation_invariance(seed, shift, space):
    grid = GridSpec(1, 32, 3.0)
    v = np.random.default_rng(seed).standard_normal(32)
    desc = NormDescriptor(space, 2.0, 1.0)
    a = _fast(Field(grid, v), desc).value
    b = _fast(Field(grid, np.roll(v, shift)), desc).value
    assert a == pytest.approx(b, rel=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_triangle_inequality(seed):
    grid = GridSpec(1, 32, 3.0)
    rng = np.random.default_rng(seed)
    f, g = Field(grid, rng.standard_normal(32)), Field(grid, rng.standard_normal(32))
    assert w12b(f + g).value <= w12b(f).value + w12b(g).value + 1e-12


def test_descriptor_keys():
    assert NormDescriptor("Lp_b", 6.0).key == "L6b"
    assert NormDescriptor("Lp_phi", 1.5, weight=WeightFn("polynomial", 0.1)).key == "L1.5phi"
    assert NormDescriptor("W12b").key == "W12b"


def test_norm_rejects_small_p():
    f = Field.constant(GridSpec(1, 8, 1.0), 1.0)
    with pytest.raises(ValidationError):
        lp_uniformly_local(f, 0.5)


@pytest.mark.parametrize("kappa,gamma,a,b", [
    (1, Fraction(5), Fraction(4, 5), Fraction(1, 5)),
    (Fraction(3, 2), Fraction(4), Fraction(3, 4), Fraction(1, 4)),
    (2, Fraction(11, 3), Fraction(8, 11), Fraction(3, 11)),
    (Fraction(5, 2), Fraction(7, 2), Fraction(5, 7), Fraction(2, 7)),
])
def test_interpolation_exponents_exact(kappa, gamma, a, b):
    ex = interpolation_exponents(kappa)
    assert (ex["gamma"], ex["a"], ex["b"]) == (gamma, a, b)
    assert ex["identity"] and ex["field_power_ok"] and ex["conjugate_ok"]
    assert all(isinstance(ex[k], Fraction) for k in ("gamma", "a", "b"))


@pytest.mark.parametrize("kappa", [1, Fraction(3, 2), 2, Fraction(5, 2)])
def test_interpolation_no_violations(kappa, rng):
    grid = GridSpec(1, 64, 8.0)
    gamma = float(interpolation_exponents(kappa)["gamma"])
    w = WeightFn("polynomial", 0.2, (), gamma)
    samples = [Field(grid, rng.standard_normal(64) * rng.uniform(0.01, 10)) for _ in range(100)]
    rep = verify_interpolation(samples, w, kappa)
    assert rep["violations"] == 0 and rep["n"] == 100


def test_interpolation_rejects_mismatched_gamma():
    with pytest.raises(ValidationError):
        verify_interpolation([Field.constant(GridSpec(1, 8, 1.0), 1.0)], WeightFn("polynomial", 0.2), 2)


def test_embedding_ratios_bounded(rng):
    grid = GridSpec(1, 256, 32.0)
    samples = [Field(grid, rng.standard_normal(256)) for _ in range(10)]
    rep = verify_embedding(samples, eps_values=(0.2, 0.1))
    for row in rep.values():
        assert row["un_w"] <= 1.0 + 1e-12
        assert row["w_un"] <= row["w_un_bound"]


def test_unit_field_weighted_norm_is_l1():
    grid = GridSpec(2, 64, 20.0)
    w = WeightFn("polynomial", 0.2)
    from ulch.weights import weight_l1
    assert lp_weighted(Field.constant(grid, 1.0), w, 1.0).value == pytest.approx(weight_l1(w, grid), rel=1e-10)


def test_unit_field_l2b_3d():
    grid = GridSpec(3, 16, 4.0)
    assert lp_uniformly_local(Field.constant(grid, 1.0), 2.0, 1.0).value == pytest.approx(8 ** 0.5, rel=1e-12)


def test_single_bump_sup_at_its_cube():
    grid = GridSpec(1, 64, 8.0)
    x = grid.coords()[0]
    f = Field(grid, np.where(np.abs(x - 2.0) < 0.5, 1.0, 0.0))
    loc = local_integrals(np.abs(f.values) ** 2, grid, 1.0)
    assert loc[np.argmin(np.abs(x - 2.0))] == pytest.approx(loc.max())


@given(st.integers(0, 2**31 - 1))
def test_stride_is_sup_over_subset(seed):
    grid = GridSpec(1, 64, 8.0)
    f = Field(grid, np.random.default_rng(seed).standard_normal(64))
    assert lp_uniformly_local(f, 2.0, 1.0, 1).value >= lp_uniformly_local(f, 2.0, 1.0, 2).value
    assert w12b(f, 1.0, 1).value >= w12b(f, 1.0, 2).value


@given(st.integers(0, 2**31 - 1))
def test_wm12b_below_l2b(seed):
    grid = GridSpec(1, 64, 8.0)
    f = Field(grid, np.random.default_rng(seed).standard_normal(64))
    assert wm12b(f, stride=1).value <= lp_uniformly_local(f, 2.0, 1.0, 1).value * (1 + 1e-12)


def test_spacetime_constant_in_time():
    grid = GridSpec(1, 32, 4.0)
    f = Field.from_function(grid, np.cos)
    st_ = spacetime_ul([f] * 10, window=4, dt=0.1, stride=1).value
    assert st_ == pytest.approx(lp_uniformly_local(f, 2.0, 1.0, 1).value * np.sqrt(4 * 0.1), rel=1e-12)


def test_embedding_examples(rng):
    grid = GridSpec(1, 256, 32.0)
    one = verify_embedding([Field.constant(grid, 1.0)])
    assert all(v["un_w"] <= 1.0 + 1e-12 for v in one.values())
    rep = verify_embedding([Field(grid, rng.standard_normal(256)) for _ in range(100)])
    a, b = (rep[e]["un_w"] for e in (0.2, 0.1))
    assert max(a, b) / min(a, b) <= 1.5


def test_bump_train_locality():
    grid = GridSpec(1, 256, 32.0)
    x = grid.coords()[0]
    one = Field(grid, np.exp(-4 * x**2))
    train = Field(grid, sum(np.exp(-4 * (x - c) ** 2) for c in (-16.0, -8.0, 0.0, 8.0, 16.0)))
    assert lp_uniformly_local(one, 2.0, 1.0, 1).value == pytest.approx(
        lp_uniformly_local(train, 2.0, 1.0, 1).value, rel=1e-6)
    w = WeightFn("polynomial", 0.2)
    assert lp_weighted(train, w).value > 1.01 * lp_weighted(one, w).value


def test_interpolation_constant_not_equality():
    # the weights differ in power, so constants sit strictly below the bound
    grid = GridSpec(1, 64, 8.0)
    ex = interpolation_exponents(1)
    rep = verify_interpolation([Field.constant(grid, 2.0)], WeightFn("polynomial", 0.3, (), float(ex["gamma"])), 1)
    assert rep["violations"] == 0 and rep["max_ratio"] < 1.0


@given(st.floats(0.05, 2.0), st.sampled_from([16, 32, 64]))
def test_window_weights_sum_and_match_brute(R, N):
    from ulch.oracle import _overlap_1d
    grid = GridSpec(1, N, 4.0)
    w = window_weights(grid, R)
    assert w.sum() == pytest.approx(2 * R / grid.h, rel=1e-12)
    ref = _overlap_1d(grid, 0, R)
    M = (w.size - 1) // 2
    assert np.allclose(np.roll(ref, M)[:w.size], w, atol=1e-12)
