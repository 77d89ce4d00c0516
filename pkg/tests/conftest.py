from decimal import Decimal, getcontext
from fractions import Fraction

import pytest

from gfra import SystemParams


@pytest.fixture(scope="session")
def std():
    """Reference operating point used across the suite."""
    return SystemParams.from_db(M=100, L=64, gamma_db=6.0, Gamma_db=6.0,
                                lam=20.0)


def exact_poisson_cdf(n: int, lam: float) -> Decimal:
    """Arbitrary-precision Poisson CDF, independent of the package: the
    partial sum of lam^k / k! in exact rationals times exp(-lam) in
    60-digit decimal arithmetic."""
    if n < 0:
        return Decimal(0)
    getcontext().prec = 60
    lf = Fraction(lam)
    total = Fraction(0)
    term = Fraction(1)
    for k in range(n + 1):
        if k > 0:
            term = term * lf / k
        total += term
    partial = Decimal(total.numerator) / Decimal(total.denominator)
    return partial * (-Decimal(lam)).exp()
