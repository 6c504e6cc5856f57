"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import math

import mpmath as mp


def ml_series(alpha: float, beta: float, z: float, extra_digits: int = 30) -> float:
    """E_{alpha,beta}(z) by the defining series in extended precision.

    The working precision grows with |z|^(1/alpha) to absorb cancellation, and
    alpha, beta enter as exact binary values.
    """
    with mp.workdps(extra_digits + int(abs(z) ** (1.0 / alpha) / 2.0) + 10):
        a = mp.mpf(alpha)
        b = mp.mpf(beta)
        zz = mp.mpf(z)
        s = mp.mpf(0)
        tol = mp.mpf(10) ** (-mp.mp.dps + 3)
        k = 0
        while True:
            term = zz**k * mp.rgamma(a * k + b)
            s += term
            if k > 10 and abs(term) < tol * max(abs(s), mp.mpf(10) ** -300) and a * k + b > 2:
                break
            k += 1
        return float(s)


def ml_laplace(alpha: float, beta: float, z: float) -> float:
    """E_{alpha,beta}(z) by numerical Laplace inversion of s^(a-b)/(s^a - z) at time 1."""
    with mp.workdps(30):
        a = mp.mpf(alpha)
        b = mp.mpf(beta)
        zz = mp.mpf(z)
        return float(mp.invertlaplace(lambda s: s ** (a - b) / (s**a - zz), 1, method="talbot"))


def beta_fn(a: float, b: float) -> float:
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
