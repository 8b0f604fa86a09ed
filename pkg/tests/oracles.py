"""Independent reference implementations used to freeze test values.

Everything here is deliberately naive: scipy Legendre evaluations, direct
per-degree sums, one dimensional quadrature, and exact rational arithmetic
through sympy.  None of it shares code with the package internals, so an
agreement is evidence rather than tautology.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import sympy
from scipy.integrate import quad
from scipy.special import eval_legendre

OMEGA_3 = 4.0 * math.pi

# Frozen spot value of the degree-5 Legendre polynomial at 0.7, from the
# closed form (63 x^5 - 70 x^3 + 15 x) / 8 evaluated in exact arithmetic.
P5_AT_07 = -0.36519875


def legendre_zonal(k: int, s) -> np.ndarray:
    """Degree-k reproducing kernel on S^2: (2k+1)/(4 pi) P_k(s)."""
    return (2 * k + 1) / OMEGA_3 * eval_legendre(k, s)


def naive_weighted_sum(weights, s) -> np.ndarray:
    """Plain per-degree sum of w_k Z^k(s) on S^2; weights indexed by k."""
    s = np.asarray(s, dtype=np.float64)
    total = np.zeros_like(s)
    for k, w in enumerate(weights):
        if w != 0.0:
            total = total + w * legendre_zonal(k, s)
    return total


def sympy_zonal(k: int, s: Fraction) -> float:
    """Exact rational evaluation of Z^k on S^2 at a rational abscissa."""
    x = sympy.Symbol("x")
    poly = sympy.legendre(k, x)
    val = poly.subs(x, sympy.Rational(s.numerator, s.denominator))
    return float(sympy.Rational(2 * k + 1, 1) / (4 * sympy.pi) * val)


def quad_zonal_coeff(f_of_cos, k: int, special_points=()) -> float:
    """Zonal projection coefficient c_k of f on S^2 by 1-d quadrature.

    f is given as a function of cos(angle to the pole); c_k is defined so
    that the degree-k component of f is c_k Z^k(. , pole), which for S^2
    reduces to c_k = 2 pi int_0^pi f(cos th) P_k(cos th) sin th dth.
    """
    def integrand(th):
        c = math.cos(th)
        return f_of_cos(c) * eval_legendre(k, c) * math.sin(th)

    pts = [p for p in special_points if 0.0 < p < math.pi] or None
    val, err = quad(integrand, 0.0, math.pi, points=pts, limit=200)
    if err > 1e-8 * max(1.0, abs(val)):
        raise RuntimeError(f"quadrature too loose for degree {k}: err = {err:.2e}")
    return 2.0 * math.pi * val


def quad_sphere_integral(f_of_cos, special_points=()) -> float:
    """Surface integral over S^2 of a zonal function, by 1-d quadrature."""
    def integrand(th):
        return f_of_cos(math.cos(th)) * math.sin(th)

    pts = [p for p in special_points if 0.0 < p < math.pi] or None
    val, err = quad(integrand, 0.0, math.pi, points=pts, limit=200)
    # quad's error estimate is conservative near endpoint cusps
    if err > 5e-8 * max(1.0, abs(val)):
        raise RuntimeError(f"sphere quadrature too loose: err = {err:.2e}")
    return 2.0 * math.pi * val
