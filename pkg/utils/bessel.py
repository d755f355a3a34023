"""
First positive zero of the order-zero Bessel function.

The stored constant is what the screening uses; the series and bisection below
are only there to check it.
"""

import math

from scipy import optimize

J01 = 2.404825557695773


def bessel_j0_series(x: float, terms: int = 40) -> float:
    """J0 from its power series sum (-1)^k (x/2)^{2k} / (k!)^2."""
    q = -(x * x) / 4.0
    term = 1.0
    total = 1.0
    for k in range(1, terms):
        term *= q / (k * k)
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def bisect_j01(lo: float = 2.0, hi: float = 3.0, iterations: int = 200) -> float:
    return optimize.bisect(bessel_j0_series, lo, hi, xtol=1e-15, maxiter=iterations)


def faber_krahn_constant(j01: float = J01) -> float:
    """pi * j01^2, the lower bound for lambda_1(Omega) * area(Omega)."""
    return math.pi * j01 * j01
