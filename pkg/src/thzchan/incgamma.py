"""Upper incomplete gamma function for real order and complex argument.

``gen_exponential_integral(a, z) = Gamma(a, z) = int_z^inf u**(a-1) exp(-u) du``
on the principal branch (cut along the negative real axis).

Two evaluation routes:

* ``|z| >= CF_RADIUS``: Legendre continued fraction, modified Lentz.
* otherwise: power series for the lower function, subtracted from Gamma(a).
  For a at or near a non-positive integer -m the pole of Gamma(a) and the
  n = m series term are combined analytically, so Gamma(0, z) = E1(z) and
  its neighbours come out without cancellation.
"""

from __future__ import annotations

import cmath
import math

from scipy import special

from .errors import AccuracyLossError, DomainError

CF_RADIUS = 2.0
MAX_TERMS = 20000
EPS = 2.220446049250313e-16
TARGET_RELATIVE_ERROR = 1e-6
_EULER_GAMMA = 0.5772156649015329
_TINY = 1e-300


def gen_exponential_integral(alpha: float, z: complex) -> complex:
    """Return Gamma(alpha, z) on the principal branch.

    Raises ``DomainError`` on the branch cut (z real and negative) or for
    z = 0 with alpha <= 0, and ``AccuracyLossError`` when neither route can
    deliver ~1e-6 relative accuracy.
    """
    value, _ = upper_gamma_with_error(alpha, z)
    return value


def upper_gamma_with_error(a: float, z: complex) -> tuple[complex, float]:
    """Gamma(a, z) together with an estimate of its relative rounding error."""
    a = float(a)
    z = complex(z)
    if not (math.isfinite(a) and cmath.isfinite(z)):
        raise DomainError("order and argument must be finite")
    if z == 0:
        if a <= 0:
            raise DomainError("Gamma(a, 0) diverges for a <= 0")
        return complex(special.gamma(a)), EPS
    if z.imag == 0 and z.real < 0:
        raise DomainError("argument lies on the branch cut (negative real axis)")

    if abs(z) >= CF_RADIUS:
        try:
            return _continued_fraction(a, z)
        except AccuracyLossError:
            pass
    value, err = _series(a, z)
    if err > TARGET_RELATIVE_ERROR:
        raise AccuracyLossError(
            f"Gamma({a}, {z}) loses precision (estimated relative error {err:.2e})",
            estimated_error=err,
        )
    return value, err


def _continued_fraction(a: float, z: complex) -> tuple[complex, float]:
    # Gamma(a,z) = e^-z z^a / (z+1-a - 1(1-a)/(z+3-a - 2(2-a)/(z+5-a - ...)))
    b = z + 1.0 - a
    f = b if b != 0 else _TINY
    c = f
    d = 0j
    for n in range(1, MAX_TERMS):
        an = -n * (n - a)
        b = b + 2.0
        d = b + an * d
        if d == 0:
            d = _TINY
        c = b + an / c
        if c == 0:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise AccuracyLossError(f"continued fraction for Gamma({a}, {z}) did not converge")
    value = cmath.exp(a * cmath.log(z) - z) / f
    # Rounding in the exponent grows with |z| (phase of exp(-z)).
    err = EPS * (10.0 + abs(z) + abs(a * cmath.log(z)) + math.sqrt(n))
    return value, err


def _exprel(x: complex) -> complex:
    """(exp(x) - 1) / x, accurate near zero."""
    if abs(x) > 0.5:
        return (cmath.exp(x) - 1.0) / x
    term = 1.0 + 0j
    total = term
    for k in range(2, 60):
        term *= x / k
        total += term
        if abs(term) < EPS * abs(total):
            break
    return total


def _lngamma1p_over_eps(eps: float) -> float:
    """ln Gamma(1 + eps) / eps for |eps| <= 1/2, with the eps -> 0 limit."""
    total = -_EULER_GAMMA
    power = 1.0
    for k in range(2, 200):
        power *= -eps
        term = power * special.zeta(k) / k
        # power = (-eps)**(k-1); series term is (-1)^k zeta(k) eps^(k-1) / k
        total -= term
        if abs(term) < EPS * 1e-2:
            break
    return total


def _series(a: float, z: complex) -> tuple[complex, float]:
    logz = cmath.log(z)
    za = cmath.exp(a * logz)
    m = None
    if a < 0.5:
        m = int(round(-a))
        eps = a + m

    # Lower-function series z^a * sum (-z)^n / (n! (a + n)), skipping n = m.
    s = 0j
    abs_sum = 0.0
    term = 1.0 + 0j  # (-z)^n / n!
    for n in range(MAX_TERMS):
        if n > 0:
            term *= -z / n
        if n != m:
            contrib = term / (a + n)
            s += contrib
            abs_sum += abs(contrib)
            if n > abs(z) and abs(contrib) < EPS * abs(s):
                break
    else:
        raise AccuracyLossError(f"series for Gamma({a}, {z}) did not converge")
    lower = za * s
    scale = abs(za) * abs_sum

    if m is None:
        gamma_a = special.gamma(a)
        value = gamma_a - lower
        scale += abs(gamma_a)
    else:
        # Gamma(a) minus the n = m term, combined around the pole at a = -m.
        ell = _lngamma1p_over_eps(eps)
        for k in range(1, m + 1):
            ell += (-math.log1p(-eps / k) / eps) if eps != 0 else 1.0 / k
        q = ell * _exprel(eps * ell) - logz * _exprel(eps * logz)
        pole = (-1) ** m / math.factorial(m) * q
        value = pole - lower
        scale += abs(pole) + abs(logz) / math.factorial(m)
    if value == 0:
        return value, math.inf
    return value, EPS * (10.0 + scale / abs(value))
