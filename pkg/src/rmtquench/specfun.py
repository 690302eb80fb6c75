"""Special functions: generalized Laguerre polynomials and oscillator functions.

Laguerre polynomials come from the three-term recurrence in degree,

    n L_n^a(x) = (2n - 1 + a - x) L_{n-1}^a(x) - (n - 1 + a) L_{n-2}^a(x),

which stays accurate where the explicit alternating series cancels
catastrophically. Once an intermediate passes ``2**512`` the recurrence pair is
rescaled and the power of two is carried separately (:class:`ScaledValue`), so
sign and phase survive even when the float value itself would overflow.

The oscillator functions ``phi_j(E) = (2^j j! sqrt(pi))^{-1/2} e^{-E^2/2} H_j(E)``
use their own normalized recurrence and never build ``H_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

__all__ = [
    "ScaledValue",
    "laguerre",
    "laguerre_scaled",
    "laguerre_row",
    "laguerre_row_scaled",
    "hermite_fn",
    "hermite_table",
]

_MANT_MAX = 2.0**64
_MANT_MIN = 2.0**-64


@dataclass(frozen=True)
class ScaledValue:
    """A real or complex number stored as ``mantissa * 2**exponent``."""

    mantissa: complex
    exponent: int = 0

    @classmethod
    def from_value(cls, z) -> "ScaledValue":
        return cls(complex(z), 0).normalized()

    def normalized(self) -> "ScaledValue":
        """Bring ``|mantissa|`` into ``[2**-64, 2**64]``; zero and non-finite pass through."""
        m = complex(self.mantissa)
        a = abs(m)
        if a == 0.0 or not math.isfinite(a):
            return ScaledValue(m, 0 if a == 0.0 else self.exponent)
        if _MANT_MIN <= a <= _MANT_MAX:
            return self
        _, k = math.frexp(a)
        return ScaledValue(complex(math.ldexp(m.real, -k), math.ldexp(m.imag, -k)), self.exponent + k)

    def __mul__(self, other) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_value(other)
        return ScaledValue(self.mantissa * other.mantissa, self.exponent + other.exponent).normalized()

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_value(other)
        return ScaledValue(self.mantissa / other.mantissa, self.exponent - other.exponent).normalized()

    def __add__(self, other) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_value(other)
        if self.mantissa == 0:
            return other
        if other.mantissa == 0:
            return self
        hi, lo = (self, other) if self.exponent >= other.exponent else (other, self)
        shift = lo.exponent - hi.exponent
        m = hi.mantissa + complex(math.ldexp(lo.mantissa.real, shift), math.ldexp(lo.mantissa.imag, shift))
        return ScaledValue(m, hi.exponent).normalized()

    __radd__ = __add__

    def __neg__(self) -> "ScaledValue":
        return ScaledValue(-self.mantissa, self.exponent)

    def __sub__(self, other) -> "ScaledValue":
        if not isinstance(other, ScaledValue):
            other = ScaledValue.from_value(other)
        return self + (-other)

    def conjugate(self) -> "ScaledValue":
        return ScaledValue(self.mantissa.conjugate(), self.exponent)

    def log2abs(self) -> float:
        a = abs(self.mantissa)
        return -math.inf if a == 0.0 else math.log2(a) + self.exponent

    def __complex__(self) -> complex:
        m = complex(self.mantissa)
        e = int(self.exponent)
        # ldexp raises OverflowError instead of returning inf
        try:
            re = math.ldexp(m.real, e)
        except OverflowError:
            re = math.copysign(math.inf, m.real)
        try:
            im = math.ldexp(m.imag, e)
        except OverflowError:
            im = math.copysign(math.inf, m.imag)
        return complex(re, im)

    def __float__(self) -> float:
        return complex(self).real

    to_complex = __complex__


def _check_degree(n, alpha):
    if n < 0 or alpha < 0:
        raise ValueError(f"need n >= 0 and alpha >= 0, got n={n}, alpha={alpha}")


def laguerre_row_scaled(n_max: int, alpha: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Mantissas and exponents of ``L_0^alpha(x) .. L_{n_max}^alpha(x)``.

    ``x`` may be a scalar or a 1-d array; the returned arrays have shape
    ``(n_max + 1,)`` or ``(n_max + 1, len(x))`` correspondingly.
    """
    _check_degree(n_max, alpha)
    scalar = np.ndim(x) == 0
    mant, expo = kernels.laguerre_rows(int(n_max), int(alpha), x)
    if scalar:
        return mant[:, 0], expo[:, 0]
    return mant, expo


def _to_complex(mant, expo):
    return np.ldexp(mant.real, expo) + 1j * np.ldexp(mant.imag, expo)


def laguerre_row(n_max: int, alpha: int, x) -> np.ndarray:
    """``[L_0^alpha(x), ..., L_{n_max}^alpha(x)]`` as complex floats."""
    mant, expo = laguerre_row_scaled(n_max, alpha, x)
    with np.errstate(over="ignore"):
        return _to_complex(mant, expo)


def laguerre_scaled(n: int, alpha: int, x) -> ScaledValue:
    mant, expo = laguerre_row_scaled(n, alpha, complex(x))
    return ScaledValue(complex(mant[-1]), int(expo[-1])).normalized()


def laguerre(n: int, alpha: int, x) -> complex:
    """Generalized Laguerre polynomial ``L_n^alpha(x)`` at a complex argument.

    >>> laguerre(1, 1, 0)
    (2+0j)
    >>> laguerre(2, 1, -0.5)
    (4.625+0j)
    """
    return complex(laguerre_scaled(n, alpha, x))


def hermite_table(j_max: int, E) -> np.ndarray:
    """Values ``phi_j(E)`` for ``j = 0..j_max``, shape ``(j_max + 1, len(E))``."""
    if j_max < 0:
        raise ValueError("j_max must be >= 0")
    return kernels.hermite_table(int(j_max), E)


def hermite_fn(j: int, E):
    """Normalized harmonic-oscillator function ``phi_j(E)``.

    Scalar in, scalar out; arrays are evaluated elementwise.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    vals = kernels.hermite_table(int(j), E)[-1]
    return float(vals[0]) if np.ndim(E) == 0 else vals.reshape(np.shape(E))
