"""Pure numpy implementations of the numerical kernels.

Same signatures and semantics as the compiled ``_ckernels`` module. Loops run
over polynomial degree; everything else is vectorized over the argument grid.
"""

import math

import numpy as np

# rescale a recurrence pair once its magnitude passes 2**512
_BIG = 2.0**512
_LN2 = math.log(2.0)
_PI_QUARTER = math.pi**-0.25


def _cldexp(z, k):
    """Complex ``z * 2**k`` without overflow in intermediate products."""
    return np.ldexp(z.real, k) + 1j * np.ldexp(z.imag, k)


def laguerre_rows(n_max, alpha, x):
    """Rows ``L_0^alpha(x) .. L_{n_max}^alpha(x)`` as scaled values.

    Returns ``(mant, expo)`` of shapes ``(n_max + 1, len(x))`` with
    ``L_n^alpha(x[i]) == mant[n, i] * 2**expo[n, i]``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128)).ravel()
    m = x.size
    mant = np.empty((n_max + 1, m), dtype=np.complex128)
    expo = np.zeros((n_max + 1, m), dtype=np.int64)
    mant[0] = 1.0
    if n_max == 0:
        return mant, expo
    mant[1] = 1.0 + alpha - x
    prev = mant[0].copy()
    cur = mant[1].copy()
    e = np.zeros(m, dtype=np.int64)
    for n in range(2, n_max + 1):
        nxt = ((2 * n - 1 + alpha - x) * cur - (n - 1 + alpha) * prev) / n
        prev, cur = cur, nxt
        big = np.abs(cur) > _BIG
        if big.any():
            _, k = np.frexp(np.abs(cur[big]))
            k = k.astype(np.int64)
            cur[big] = _cldexp(cur[big], -k)
            prev[big] = _cldexp(prev[big], -k)
            e[big] += k
        mant[n] = cur
        expo[n] = e
    return mant, expo


def hermite_table(j_max, E):
    """Normalized oscillator functions ``phi_0..phi_{j_max}`` on ``E``."""
    E = np.atleast_1d(np.asarray(E, dtype=np.float64)).ravel()
    out = np.empty((j_max + 1, E.size))
    out[0] = _PI_QUARTER * np.exp(-0.5 * E * E)
    if j_max >= 1:
        out[1] = math.sqrt(2.0) * E * out[0]
    for j in range(1, j_max):
        out[j + 1] = math.sqrt(2.0 / (j + 1)) * E * out[j] - math.sqrt(j / (j + 1)) * out[j - 1]
    return out


def dos_sum(N, E):
    """``sum_{j<N} phi_j(E)**2`` elementwise."""
    E = np.atleast_1d(np.asarray(E, dtype=np.float64)).ravel()
    acc = np.zeros(E.size)
    p0 = _PI_QUARTER * np.exp(-0.5 * E * E)
    acc += p0 * p0
    if N == 1:
        return acc
    p1 = math.sqrt(2.0) * E * p0
    acc += p1 * p1
    for j in range(1, N - 1):
        p0, p1 = p1, math.sqrt(2.0 / (j + 1)) * E * p1 - math.sqrt(j / (j + 1)) * p0
        acc += p1 * p1
    return acc


def kernel_sum(N, E, E2):
    """``sum_{j<N} phi_j(E) phi_j(E2)`` elementwise over broadcast pairs."""
    E, E2 = np.broadcast_arrays(np.asarray(E, dtype=np.float64), np.asarray(E2, dtype=np.float64))
    E = np.atleast_1d(E).ravel()
    E2 = np.atleast_1d(E2).ravel()
    a0 = _PI_QUARTER * np.exp(-0.5 * E * E)
    b0 = _PI_QUARTER * np.exp(-0.5 * E2 * E2)
    acc = a0 * b0
    if N == 1:
        return acc
    a1 = math.sqrt(2.0) * E * a0
    b1 = math.sqrt(2.0) * E2 * b0
    acc = acc + a1 * b1
    for j in range(1, N - 1):
        c1 = math.sqrt(2.0 / (j + 1))
        c0 = math.sqrt(j / (j + 1))
        a0, a1 = a1, c1 * E * a1 - c0 * a0
        b0, b1 = b1, c1 * E2 * b1 - c0 * b0
        acc += a1 * b1
    return acc


def _log2_factorials(n):
    out = np.zeros(n + 1)
    if n >= 1:
        out[1:] = np.cumsum(np.log2(np.arange(1, n + 1, dtype=np.float64)))
    return out


def connected_ff(N, beta, t):
    """Connected form factor on a grid of times, band-wise over ``|n - m|``.

    Every term of the double sum is nonnegative, so terms are accumulated in
    (mantissa, power-of-two) form and only the final sum is rounded to float.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
    sigma = beta + 1j * t
    sig2 = sigma * sigma
    x = -0.5 * sig2
    s = 0.5 * np.abs(sigma) ** 2
    with np.errstate(divide="ignore"):
        log2s = np.log2(s)
    log2_pref = sig2.real / (2.0 * _LN2)
    lf = _log2_factorials(N)

    mant_parts = []
    exp_parts = []
    for d in range(N):
        kmax = N - 1 - d
        if d > 0 and not np.any(s > 0):
            break
        mant, expo = laguerre_rows(kmax, d, x)
        k = np.arange(kmax + 1)
        log2c = lf[k] - lf[k + d]
        if d == 0:
            rest = log2_pref[None, :] + log2c[:, None]
        else:
            rest = log2_pref[None, :] + d * log2s[None, :] + log2c[:, None]
        alive = np.isfinite(rest)
        rest = np.where(alive, rest, 0.0)
        whole = np.floor(rest)
        frac = rest - whole
        am, ak = np.frexp(np.abs(mant))
        val = am * am * np.exp2(frac) * (1.0 if d == 0 else 2.0)
        val = np.where(alive, val, 0.0)
        ex = whole.astype(np.int64) + 2 * (expo + ak.astype(np.int64))
        mant_parts.append(val)
        exp_parts.append(ex)

    vals = np.concatenate(mant_parts, axis=0)
    exps = np.concatenate(exp_parts, axis=0)
    live = vals > 0
    emax = np.where(live, exps, np.iinfo(np.int64).min).max(axis=0)
    emax = np.where(live.any(axis=0), emax, 0)
    shift = np.clip(exps - emax[None, :], -2000, 0)
    total = np.ldexp(vals, shift).sum(axis=0)
    return -np.ldexp(total, np.clip(emax, -5000, 5000))
