import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from cuspkit import specialfn
from cuspkit.errors import DomainError, OverflowRangeError, SeriesNonConvergence

orders = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
arguments = st.floats(min_value=0.05, max_value=50.0, allow_nan=False)


@pytest.mark.parametrize("x, expected", [
    (1.0, 1.0),
    (0.5, math.sqrt(math.pi)),
    (1.5, 0.5 * math.sqrt(math.pi)),
    (5.0, 24.0),
])
def test_gamma_reference_values(x, expected):
    assert specialfn.gamma(x) == pytest.approx(expected, rel=1e-12)


def test_gamma_domain():
    with pytest.raises(DomainError):
        specialfn.gamma(0.0)
    with pytest.raises(DomainError):
        specialfn.gamma(-1.5)
    with pytest.raises(OverflowRangeError):
        specialfn.gamma(171.0)
    assert specialfn.log_gamma(171.0) == pytest.approx(float(mpmath.loggamma(171)), rel=1e-13)


@pytest.mark.parametrize("func, nu, y, expected", [
    (specialfn.bessel_j, 0.5, math.pi / 2, 2.0 / math.pi),
    (specialfn.bessel_j, 1.0, 2.0, 0.5767248078),
    (specialfn.bessel_k, 0.5, 1.0, 0.4610685044),
    (specialfn.bessel_i, 0.5, 1.0, 0.9376748882),
    (specialfn.bessel_i_sym, 0.5, 1.0, 1.0844375514),
])
def test_bessel_reference_values(func, nu, y, expected):
    assert func(nu, y) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("nu, y", [(0.0, 0.3), (0.5, 2.0), (1.7, 5.5), (3.25, 12.0), (10.0, 40.0)])
def test_bessel_against_mpmath(nu, y):
    assert specialfn.bessel_j(nu, y) == pytest.approx(float(mpmath.besselj(nu, y)), rel=1e-10, abs=1e-14)
    assert specialfn.bessel_y(nu, y) == pytest.approx(float(mpmath.bessely(nu, y)), rel=1e-10, abs=1e-14)
    assert specialfn.bessel_i(nu, y) == pytest.approx(float(mpmath.besseli(nu, y)), rel=1e-10)
    assert specialfn.bessel_k(nu, y) == pytest.approx(float(mpmath.besselk(nu, y)), rel=1e-10)


def test_half_integer_closed_forms():
    for y in (0.1, 1.0, 3.0, 20.0):
        assert specialfn.bessel_j(0.5, y) == pytest.approx(math.sqrt(2 / (math.pi * y)) * math.sin(y), rel=1e-9, abs=1e-15)
        assert specialfn.bessel_i(0.5, y) == pytest.approx(math.sqrt(2 / (math.pi * y)) * math.sinh(y), rel=1e-9)
        assert specialfn.bessel_k(0.5, y) == pytest.approx(math.sqrt(math.pi / (2 * y)) * math.exp(-y), rel=1e-9)


def test_bessel_domain():
    with pytest.raises(DomainError):
        specialfn.bessel_j(-1.0, 1.0)
    with pytest.raises(DomainError):
        specialfn.bessel_j(1.0, 0.0)
    with pytest.raises(DomainError):
        specialfn.bessel_k(51.0, 1.0)
    with pytest.raises(OverflowRangeError):
        specialfn.bessel_i(0.5, 701.0)
    with pytest.raises(OverflowRangeError):
        specialfn.bessel_i_sym(0.5, 701.0)


def test_bessel_k_large_argument_asymptotics():
    y = 500.0
    ratio = specialfn.bessel_k_scaled(1.0, y) / math.sqrt(math.pi / (2 * y))
    assert ratio == pytest.approx(1.0 + 3.0 / (8 * y), rel=1e-5)
    assert specialfn.bessel_k(1.0, 800.0) >= 0.0


@settings(max_examples=60, deadline=None)
@given(nu=orders, y=arguments)
def test_ik_wronskian(nu, y):
    # I K′ − I′ K = −1/y; the exponential scalings cancel
    w = (specialfn.bessel_i_scaled(nu, y) * specialfn.bessel_k_scaled_prime(nu, y)
         - specialfn.bessel_i_scaled_prime(nu, y) * specialfn.bessel_k_scaled(nu, y))
    assert w == pytest.approx(-1.0 / y, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(nu=orders, y=arguments)
def test_jy_wronskian(nu, y):
    w = (specialfn.bessel_j(nu, y) * specialfn.bessel_y_prime(nu, y)
         - specialfn.bessel_j_prime(nu, y) * specialfn.bessel_y(nu, y))
    assert w == pytest.approx(2.0 / (math.pi * y), rel=1e-8)


@pytest.mark.parametrize("nu", [0.25, 0.5, 1.5, 2.75])
@pytest.mark.parametrize("y", [0.2, 2.0, 15.0])
def test_scaled_i_derivative(nu, y):
    assert specialfn.bessel_i_scaled_prime(nu, y) == pytest.approx(float(special.ivp(nu, y)) * math.exp(-y), rel=1e-10)


def test_symmetric_i_reduces_to_integer_order():
    for n in (0, 1, 3):
        assert specialfn.bessel_i_sym(float(n), 2.5) == pytest.approx(specialfn.bessel_i(float(n), 2.5), rel=1e-12)


def test_symmetric_i_scaled_consistency():
    for nu, y in [(0.25, 1.0), (0.5, 10.0), (1.25, 100.0)]:
        assert specialfn.bessel_i_sym_scaled(nu, y) == pytest.approx(
            specialfn.bessel_i_sym(nu, y) * math.exp(-y), rel=1e-12)
    # usable past the overflow range
    assert specialfn.bessel_i_sym_scaled(0.5, 2000.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi * 2000.0), rel=1e-3)


@pytest.mark.parametrize("nu, y", [(0.0, 0.5), (0.5, 3.0), (1.0 / 3.0, 7.0), (2.0, 12.0), (0.75, 20.0), (1.5, 60.0)])
def test_analytic_i_bridges_to_bessel(nu, y):
    z = (y / 2.0) ** 2
    bridged = (y / 2.0) ** nu * specialfn.analytic_i(nu, z) / specialfn.gamma(nu + 1.0)
    assert bridged == pytest.approx(specialfn.bessel_i(nu, y), rel=1e-9)
    bridged_j = (y / 2.0) ** nu * specialfn.analytic_i(nu, -z) / specialfn.gamma(nu + 1.0)
    assert bridged_j == pytest.approx(specialfn.bessel_j(nu, y), rel=1e-9, abs=1e-13)


def test_analytic_i_series_values():
    assert specialfn.analytic_i(0.5, 0.0) == 1.0
    # first terms 1 + z/(ν+1) + z²/(2(ν+1)(ν+2))
    z = 1e-3
    assert specialfn.analytic_i(1.0, z) == pytest.approx(1.0 + z / 2 + z * z / 12, rel=1e-14)
    with pytest.raises(SeriesNonConvergence):
        specialfn.analytic_i(0.5, 30.0, max_terms=5)
    with pytest.raises(DomainError):
        specialfn.analytic_i(-0.5, 1.0)


@pytest.mark.parametrize("nu, z", [(0.5, 0.7), (2.0, -1.5), (0.25, 12.0)])
def test_analytic_i_prime(nu, z):
    h = 1e-5
    numeric = (specialfn.analytic_i(nu, z + h) - specialfn.analytic_i(nu, z - h)) / (2 * h)
    assert specialfn.analytic_i_prime(nu, z) == pytest.approx(numeric, rel=1e-7)


def test_legendre_and_riccati_bessel():
    assert specialfn.legendre(0, 0.3) == 1.0
    assert specialfn.legendre(1, 0.3) == pytest.approx(0.3)
    assert specialfn.legendre(2, 0.5) == pytest.approx(-0.125)
    with pytest.raises(DomainError):
        specialfn.legendre(2, 1.5)
    assert specialfn.spherical_regular(0, 1.2) == pytest.approx(math.sin(1.2), rel=1e-14)
    assert specialfn.spherical_regular_modified(0, 1.2) == pytest.approx(math.sinh(1.2), rel=1e-14)
