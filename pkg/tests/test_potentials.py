from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ulch import DomainError, ValidationError
from ulch.potentials import (PotentialSpec, convex_majorant, cubic, regular, singular, singular_points, validate,
                             validate_regular, validate_singular)


def test_cubic_decomposition_and_constants():
    rep = validate(cubic())
    assert all(rep.passed.values())
    assert (rep.constants["a"], rep.constants["b"]) == (2.0, 1.0)
    # f0' = 3u^2 - 1 + 2 sech^2 u has its minimum 1 at the origin
    assert rep.constants["margin"] == pytest.approx(1.0, abs=1e-12)
    assert rep.constants["alpha"] == 0.5


def test_chosen_decomposition_for_cubic_matches_closed_form():
    rep = validate_regular(regular((0.0, -1.0, 0.0, 1.0)))
    assert rep.passed["monotone_part"]
    assert rep.constants["margin"] >= 1.0 - 1e-12


def test_trailing_zero_coefficients_are_dropped():
    assert regular((0.0, -1.0, 0.0, 1.0, 0.0, 0.0)).degree == 3


def test_even_polynomial_rejected():
    with pytest.raises(ValidationError) as exc:
        validate(regular((0.0, 0.0, 1.0)))
    assert exc.value.assumption == "quadratic_lower_bound"


def test_non_odd_origin_fails_monotone_part():
    rep = validate(regular((0.5, 1.0, 0.0, 1.0)), raise_on_fail=False)
    assert not rep.passed["monotone_part"]


def test_quintic_accepted():
    assert validate(regular((0.0, 1.0, 0.0, 0.0, 0.0, 1.0))).ok


def test_singular_l2_constants_exact():
    rep = validate_singular(singular(2, alpha=2.0))
    assert rep.constants["kappa"] == Fraction(2)
    assert isinstance(rep.constants["kappa"], Fraction)
    assert rep.constants["kappa1"] == Fraction(3, 2)
    assert rep.constants["uniqueness"] is True
    assert rep.constants["l_above_5_3"] is True


@pytest.mark.parametrize("l,kappa,kappa1,unique", [
    ("3/2", Fraction(3), Fraction(5, 3), False),
    ("5/3", Fraction(5, 2), Fraction(8, 5), False),
    ("7/4", Fraction(7, 3), Fraction(11, 7), True),
    (3, Fraction(3, 2), Fraction(4, 3), True),
])
def test_singular_exponent_table(l, kappa, kappa1, unique):
    rep = validate_singular(singular(l))
    assert rep.constants["kappa"] == kappa
    assert rep.constants["kappa1"] == kappa1
    assert rep.constants["uniqueness"] is unique


def test_float_exponent_becomes_exact_fraction():
    assert singular(1.5).l == Fraction(3, 2)
    assert singular(2.0).kappa == 2


def test_singular_needs_l_above_one():
    p = singular(1)
    assert p.kappa is None
    with pytest.raises(ValidationError):
        validate(p)


@pytest.mark.parametrize("bad", [1.0, -1.0, 1.2])
def test_singular_domain(bad):
    p = singular(2)
    with pytest.raises(DomainError):
        p.f(np.array([0.0, bad]))
    with pytest.raises(DomainError):
        p.F(bad)


@pytest.mark.parametrize("kwargs", [dict(kind="other"), dict(kind="regular", coeffs=()),
                                    dict(kind="singular"), dict(kind="singular", l=2, alpha=-1.0)])
def test_potential_spec_rejects(kwargs):
    with pytest.raises(ValidationError):
        PotentialSpec(**kwargs)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=7), st.floats(-1.5, 1.5))
def test_antiderivative_regular(coeffs, u):
    p = regular(coeffs)
    h = 1e-5
    fd = (p.F(u + h) - p.F(u - h)) / (2 * h)
    assert fd == pytest.approx(float(p.f(u)), rel=1e-6, abs=1e-6)
    assert p.F(0.0) == 0.0


@given(st.floats(1.1, 4.0), st.floats(0, 3), st.floats(-0.95, 0.95))
def test_antiderivative_singular(l, alpha, u):
    p = singular(l, alpha)
    h = 1e-6
    fd = (p.F(u + h) - p.F(u - h)) / (2 * h)
    assert fd == pytest.approx(float(p.f(u)), rel=1e-5, abs=1e-6)
    fpd = (p.f(u + h) - p.f(u - h)) / (2 * h)
    assert fpd == pytest.approx(float(p.fprime(u)), rel=1e-5, abs=1e-6)


def test_convex_majorant_dominates_and_is_convex(rng):
    u = np.linspace(-3, 3, 301)
    y = np.abs(np.sin(3 * u)) * (1 + u**2) + rng.uniform(0, 0.1, u.size)
    Psi = convex_majorant(u, y)
    assert np.all(Psi >= y - 1e-12)
    assert np.all(np.diff(Psi, 2) >= -1e-9)


def test_singular_points_inside_interval():
    u = singular_points(margin=1e-6, n=101)
    assert np.all(np.diff(u) > 0)
    assert np.max(np.abs(u)) == pytest.approx(1 - 1e-6)


def _quad(fn, a, b, n=200001):
    x = np.linspace(a, b, n)
    return float(np.trapezoid(fn(x), x))


def test_cubic_antiderivative_at_one():
    p = cubic()
    assert float(p.F(1.0)) == pytest.approx(-0.25, abs=1e-14)
    assert float(p.F(1.0)) == pytest.approx(_quad(p.f, 0.0, 1.0), abs=1e-9)


def test_singular_antiderivative_at_half():
    p = singular(2, 0.0)
    assert float(p.F(0.5)) == pytest.approx(1 / 6, abs=1e-14)
    assert float(p.F(0.5)) == pytest.approx(_quad(p.f, 0.0, 0.5), abs=1e-9)


def test_linear_potential_passes():
    rep = validate(regular((0.0, 1.0)))
    assert rep.ok and rep.constants["a"] == 0.0


def test_cubic_margin_on_dense_grid():
    # independent minimisation of f0' = 3u^2 - 1 + 2 sech^2 u on |u| <= 10
    u = np.linspace(-10, 10, 400001)
    assert np.min(3 * u**2 - 1 + 2 / np.cosh(u) ** 2) >= 1.0 - 1e-12
