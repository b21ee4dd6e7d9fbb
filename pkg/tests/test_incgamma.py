"""Upper incomplete gamma function against an arbitrary-precision oracle."""

import cmath
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thzchan.errors import DomainError
from thzchan.incgamma import gen_exponential_integral, upper_gamma_with_error


def oracle(a, z):
    with mpmath.workdps(40):
        return complex(mpmath.gammainc(a, z))


def test_examples():
    for z in (0.1, 1.0, 3.7, 25.0):
        assert gen_exponential_integral(1.0, z) == pytest.approx(math.exp(-z), rel=1e-14)
    assert gen_exponential_integral(2.0, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert gen_exponential_integral(0.5, 1.0) == pytest.approx(0.27880558528066198, rel=1e-13)


def test_exponential_integral_e1():
    # Gamma(0, z) = E1(z)
    for z in (0.3, 1.5, 4.0, 2j, 0.5 - 3j):
        with mpmath.workdps(30):
            ref = complex(mpmath.e1(z))
        assert gen_exponential_integral(0.0, z) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("a", [-3.0, -2.0, -2.0 + 1e-9, -1.5, -1.0, -1e-10, 0.0, 0.3, 1.0, 2.5, 4.0])
@pytest.mark.parametrize("z", [0.05j, -0.7j, 1.9j, -2.1j, 15j, -400j, 0.4 + 1.2j, 3.0 - 8.0j, 60.0])
def test_against_mpmath_grid(a, z):
    ref = oracle(a, z)
    if ref == 0 or not cmath.isfinite(ref):
        pytest.skip("reference under/overflows double precision")
    value, err = upper_gamma_with_error(a, z)
    assert abs(value - ref) <= max(1e-11, 10 * err) * abs(ref)


@settings(max_examples=300, deadline=None)
@given(st.floats(-3.0, 4.0), st.floats(1e-3, 3e3), st.booleans())
def test_imaginary_axis(a, y, negative):
    # The band integral evaluates Gamma(1 - alpha, j 2 pi f tau).
    z = complex(0.0, -y if negative else y)
    ref = oracle(a, z)
    value, err = upper_gamma_with_error(a, z)
    assert err <= 1e-6
    assert abs(value - ref) <= 1e-9 * abs(ref)


def test_domain_errors():
    with pytest.raises(DomainError):
        gen_exponential_integral(0.5, -1.0)
    with pytest.raises(DomainError):
        gen_exponential_integral(0.0, 0.0)
    with pytest.raises(DomainError):
        gen_exponential_integral(math.nan, 1.0)
