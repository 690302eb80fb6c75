"""Independent reference implementations used only by the tests."""

from fractions import Fraction
from math import comb, factorial

import numpy as np
from scipy import integrate


def laguerre_series(n, alpha, x):
    """``L_n^alpha(x)`` from the explicit sum in exact rational arithmetic.

    ``x`` is a complex number whose parts are converted to ``Fraction``
    exactly, so the only rounding is the final conversion to float.
    """
    xr, xi = Fraction(complex(x).real), Fraction(complex(x).imag)
    re = im = Fraction(0)
    pr, pi = Fraction(1), Fraction(0)
    for i in range(n + 1):
        c = Fraction(comb(n + alpha, n - i), factorial(i))
        re += c * pr
        im += c * pi
        pr, pi = -(pr * xr - pi * xi), -(pr * xi + pi * xr)
    return complex(float(re), float(im))


def hermite_fn_direct(j, E):
    """``phi_j(E)`` from the physicists' Hermite polynomial (fine for small j)."""
    from numpy.polynomial.hermite import hermval

    coef = np.zeros(j + 1)
    coef[j] = 1.0
    norm = (2.0**j * factorial(j) * np.sqrt(np.pi)) ** -0.5
    return norm * np.exp(-0.5 * np.asarray(E) ** 2) * hermval(E, coef)


def dos_direct(N, E):
    return sum(hermite_fn_direct(j, E) ** 2 for j in range(N))


def z_avg_quad(N, sigma, half=16.0):
    """Laplace transform of the averaged density by adaptive quadrature."""
    f = lambda E: dos_direct(N, E) * np.exp(-sigma * E)  # noqa: E731
    re = integrate.quad(lambda E: f(E).real, -half, half, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    im = integrate.quad(lambda E: f(E).imag, -half, half, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return complex(re, im)


def chi_double_quad(N, beta, t, half=14.0, nodes=300):
    """Characteristic function as the two-energy integral of the averaged densities."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    E, w = half * x, half * w
    rho = dos_direct(N, E)
    z0 = np.sum(w * rho * np.exp(-(beta + 1j * t) * E))
    zt = np.sum(w * rho * np.exp(1j * t * E))
    zb = np.sum(w * rho * np.exp(-beta * E))
    return z0 * zt / (N * zb)
