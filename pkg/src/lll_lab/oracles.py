"""Slow independent reference computations used to cross-check the fast paths."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .fock import PlaneQuadrature, as_coeffs, quadrature_box_radius


def brute_force_nonlinear(state) -> np.ndarray:
    """Direct quadruple sum over k + l = m + n with kernel (k+l)!/(2^(k+l) sqrt(k! l! m! n!))."""
    c = as_coeffs(state)
    N = c.size
    lf = [math.lgamma(j + 1) for j in range(2 * N)]
    out = np.zeros(N, dtype=complex)
    for k in range(N):
        acc = 0j
        for l in range(N):
            S = k + l
            for m in range(max(0, S - N + 1), min(S, N - 1) + 1):
                n = S - m
                w = math.exp(lf[S] - S * math.log(2) - 0.5 * (lf[k] + lf[l] + lf[m] + lf[n]))
                acc += w * np.conj(c[l]) * c[m] * c[n]
        out[k] = acc / (2 * math.pi)
    return out


def exact_log_sqrt_binomial(S: int, m: int) -> float:
    """log sqrt(S!/(2^S m!(S-m)!)) from exact big-integer arithmetic."""
    q = Fraction(math.factorial(S), 2**S * math.factorial(m) * math.factorial(S - m))
    # log of a large rational without float overflow
    num, den = q.numerator, q.denominator
    return 0.5 * ((math.log(num)) - math.log(den))


def quadrature_mass(state, points: int = 200) -> float:
    c = as_coeffs(state)
    quad = PlaneQuadrature.square(quadrature_box_radius(c.size), points)
    return float(quad.integrate(np.abs(quad.values(c)) ** 2).real)


def quadrature_hamiltonian(state, points: int = 200) -> float:
    """H = (1/4) integral of |u|^4."""
    c = as_coeffs(state)
    quad = PlaneQuadrature.square(quadrature_box_radius(c.size), points)
    return float(0.25 * quad.integrate(np.abs(quad.values(c)) ** 4).real)


def quadrature_moment(state, points: int = 200) -> complex:
    """Q as the first moment integral of z |u|^2."""
    c = as_coeffs(state)
    quad = PlaneQuadrature.square(quadrature_box_radius(c.size), points)
    return complex(quad.integrate(quad.z * np.abs(quad.values(c)) ** 2))
