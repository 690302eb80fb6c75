"""Closed-form, finite-N GUE averages for a sudden quench.

Energies are in the units fixed by the GUE weight ``exp(-Tr H^2)``. Every
quantity here is the *annealed* average (a ratio of ensemble averages); the
ratio-averaged ("exact") counterparts are only available by sampling, see
:mod:`rmtquench.montecarlo`.

Functions taking a time ``t`` accept scalars or 1-d arrays and return the same
shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from ._backend import kernels
from .specfun import ScaledValue, laguerre_scaled

__all__ = [
    "QuadratureError",
    "ComplexInverseTemperature",
    "CurveSeries",
    "z_avg",
    "avg_dos",
    "two_level_correlator",
    "chi",
    "work_pdf",
    "mean_work",
    "work_second_moment",
    "work_variance",
    "mean_work_high_t",
    "work_variance_high_t",
    "connected_ff",
    "form_factor",
    "loschmidt_echo",
    "echo_plateau",
    "frame_potential_1",
]

_LN2 = math.log(2.0)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its requested tolerance."""


@dataclass(frozen=True)
class ComplexInverseTemperature:
    """``sigma = beta + i t``: inverse temperature plus echo time."""

    beta: float
    t: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")

    @property
    def value(self) -> complex:
        return complex(self.beta, self.t)

    def conj(self) -> complex:
        return complex(self.beta, -self.t)


@dataclass
class CurveSeries:
    """Values on an ascending grid, optionally with per-point standard errors.

    For complex-valued sampled curves ``stderr`` is complex as well: its real
    part is the standard error of the real part and likewise for the imaginary
    part.
    """

    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.ndim != 1 or self.values.shape != self.grid.shape:
            raise ValueError("grid and values must be 1-d and of equal length")
        if self.grid.size > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly ascending")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr)
            if self.stderr.shape != self.grid.shape:
                raise ValueError("stderr must match grid length")
            parts = [self.stderr.real, self.stderr.imag] if np.iscomplexobj(self.stderr) else [self.stderr]
            if any(np.any(p < 0) for p in parts):
                raise ValueError("stderr must be nonnegative")

    def __len__(self):
        return self.grid.size


def _scalar_or_array(arr, like):
    return arr.reshape(np.shape(like))[()] if np.ndim(like) == 0 else arr.reshape(np.shape(like))


def _from_parts(mant, log2_scale):
    """``mant * 2**log2_scale`` with the float scale split to avoid overflow."""
    whole = np.floor(log2_scale)
    m = mant * np.exp2(log2_scale - whole)
    k = np.clip(whole, -5000, 5000).astype(np.int64)
    return np.ldexp(m.real, k) + 1j * np.ldexp(m.imag, k)


def z_avg(N: int, sigma):
    """GUE-averaged continued partition function ``<Z(sigma)>``.

    Equals ``exp(sigma^2/4) L^1_{N-1}(-sigma^2/2)``, the Laplace transform of
    the averaged density of states. ``z_avg(N, 0) == N``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    s = np.atleast_1d(np.asarray(sigma, dtype=np.complex128)).ravel()
    s2 = s * s
    mant, expo = kernels.laguerre_rows(N - 1, 1, -0.5 * s2)
    m = mant[-1] * np.exp(0.25j * s2.imag)
    out = _from_parts(m, s2.real / (4.0 * _LN2) + expo[-1])
    if np.isrealobj(sigma) or np.all(s.imag == 0):
        out = out.real.astype(np.complex128)
    return _scalar_or_array(out, sigma)


def avg_dos(N: int, E):
    """Exact averaged density of states ``sum_{j<N} phi_j(E)^2``; integrates to N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return _scalar_or_array(kernels.dos_sum(int(N), E), E)


def two_level_correlator(N: int, E, E2):
    """Connected two-level correlation ``-(sum_{j<N} phi_j(E) phi_j(E2))^2``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    k = kernels.kernel_sum(int(N), E, E2)
    return _scalar_or_array(-k * k, np.broadcast_arrays(np.asarray(E), np.asarray(E2))[0])


def chi(N: int, beta: float, t):
    """Annealed characteristic function of the work distribution.

    ``<chi(t)> = <Z(beta + it)> <Z(-it)> / (N <Z(beta)>)``.
    """
    _check(N, beta)
    tt = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    z0 = np.atleast_1d(z_avg(N, beta + 1j * tt))
    zt = np.atleast_1d(z_avg(N, -1j * tt))
    zb = z_avg(N, complex(beta)).real
    return _scalar_or_array(z0 * zt / (N * zb), t)


def _check(N, beta, n_min=1):
    if N < n_min:
        raise ValueError(f"N must be >= {n_min}")
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError("beta must be finite and >= 0")


def work_pdf(N: int, beta: float, W_grid, epsabs: float = 1e-13, epsrel: float = 1e-10) -> CurveSeries:
    """Averaged work density as the weighted auto-convolution of the density of states.

    ``p(W) = (N <Z(beta)>)^{-1} int dE rho(E) rho(E + W) exp(-beta E)``, evaluated
    for the whole grid at once by vector-valued adaptive quadrature over
    ``E`` in ``[-sqrt(2N) - 8 (- beta if beta > 1), sqrt(2N) + 8]``.

    Raises
    ------
    QuadratureError
        If the adaptive rule stops short of ``epsabs``/``epsrel``.
    """
    _check(N, beta)
    W = np.asarray(W_grid, dtype=float)
    edge = math.sqrt(2.0 * N) + 8.0
    lo = -edge - (beta if beta > 1 else 0.0)
    zb = z_avg(N, complex(beta)).real
    shift = beta * lo  # keeps exp(-beta E) <= 1 on the domain

    def integrand(E):
        return kernels.dos_sum(N, E + W) * (kernels.dos_sum(N, E)[0] * math.exp(-beta * E + shift))

    res, err, info = integrate.quad_vec(
        integrand, lo, edge, epsabs=epsabs, epsrel=epsrel, limit=2000, full_output=True
    )
    if not info.success:
        raise QuadratureError(f"work_pdf quadrature failed: {info.message} (err={err:.3g})")
    vals = np.maximum(res * math.exp(-shift) / (N * zb), 0.0)
    return CurveSeries(W, vals, meta={"N": N, "beta": beta, "generator": "analytic.work_pdf", "quad_err": float(err)})


def _lag(n, alpha, x) -> ScaledValue:
    # negative degree terms drop out of the derivative identities
    if n < 0:
        return ScaledValue(0j, 0)
    return laguerre_scaled(n, alpha, x)


def _laguerre_ratios(N, beta):
    x = -0.5 * beta * beta
    den = _lag(N - 1, 1, x)
    r2 = (_lag(N - 2, 2, x) / den).to_complex().real
    r3 = (_lag(N - 3, 3, x) / den).to_complex().real
    return r2, r3


def mean_work(N: int, beta: float) -> float:
    """Annealed mean work ``beta/2 + beta L^2_{N-2}/L^1_{N-1}`` at ``x = -beta^2/2``."""
    _check(N, beta)
    r2, _ = _laguerre_ratios(N, beta)
    return 0.5 * beta + beta * r2


def work_second_moment(N: int, beta: float) -> float:
    """Annealed ``<W^2> = N/2 + <Z>''/<Z>`` in Laguerre form."""
    _check(N, beta)
    r2, r3 = _laguerre_ratios(N, beta)
    b2 = beta * beta
    return 0.5 * (N + 1) + 0.25 * b2 + (1.0 + b2) * r2 + b2 * r3


def work_variance(N: int, beta: float) -> float:
    """Annealed work variance; equals N at beta = 0 and tends to (N+1)/2 at low temperature."""
    _check(N, beta)
    r2, r3 = _laguerre_ratios(N, beta)
    return 0.5 * (N + 1) + r2 + beta * beta * (r3 - r2 * r2)


def mean_work_high_t(N: int, beta: float) -> float:
    """Small-beta series ``N beta/2 - (N^2 - 1) beta^3 / 24``, error O(beta^5)."""
    return 0.5 * N * beta - (N * N - 1) * beta**3 / 24.0


def work_variance_high_t(N: int, beta: float) -> float:
    """Small-beta series ``N - (N^2 - 1) beta^2 / 8``, error O(beta^4)."""
    return N - (N * N - 1) * beta**2 / 8.0


def connected_ff(N: int, beta: float, t):
    """Connected part of the spectral form factor, always <= 0.

    Band-wise double sum over ``d = |n - m|`` with one Laguerre row per band,
    O(N^2) per time point.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    return _scalar_or_array(kernels.connected_ff(int(N), float(beta), t), t)


def form_factor(N: int, beta: float, t):
    """Spectral form factor ``g(beta, t) = <Z(beta + it) Z(beta - it)>``."""
    _check(N, beta)
    tt = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    za = np.atleast_1d(z_avg(N, beta + 1j * tt))
    g = z_avg(N, complex(2.0 * beta)).real + np.abs(za) ** 2 + kernels.connected_ff(int(N), float(beta), tt)
    return _scalar_or_array(g, t)


def loschmidt_echo(N: int, beta: float, t):
    """Annealed Loschmidt echo of the thermofield double state.

    Combination of form factors and ``<Z(2 beta)>`` produced by the second
    Haar moment; equals 1 at ``t = 0``.
    """
    _check(N, beta, n_min=2)
    g0 = form_factor(N, 0.0, t)
    gb = form_factor(N, beta, t)
    z2 = z_avg(N, complex(2.0 * beta)).real
    zz = form_factor(N, beta, 0.0)
    num = g0 * gb + N * z2 - z2 * g0 / N - gb
    return num / (zz * (N * N - 1))


def echo_plateau(N: int, beta: float) -> float:
    """Long-time value ``<Z(2 beta)> / <Z(beta)^2> * 2 / (N + 1)`` of the annealed echo."""
    _check(N, beta, n_min=2)
    return z_avg(N, complex(2.0 * beta)).real / form_factor(N, beta, 0.0) * 2.0 / (N + 1)


def frame_potential_1(N: int, beta: float, t):
    """First frame potential of the GUE time-evolution ensemble.

    ``(g(beta/2, t)^2 + N^2 - 2 g(beta/2, t)) / (N^2 - 1)``; at beta = 0 it is
    ``N^2`` times the echo.
    """
    _check(N, beta, n_min=2)
    g = form_factor(N, 0.5 * beta, t)
    return (g * g + N * N - 2.0 * g) / (N * N - 1)
