# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Laguerre rows, oscillator functions, connected form factor.

Scalar C loops with the exact semantics of ``rmtquench._pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, log, log2, floor, ldexp, frexp, fabs, exp2, hypot, M_PI, isfinite

cnp.import_array()

cdef double _BIG = 2.0 ** 512
cdef double _LN2 = 0.6931471805599453


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex cldexp(double complex z, int k) nogil:
    return ldexp(z.real, k) + 1j * ldexp(z.imag, k)


cdef void _lag_row(int n_max, int alpha, double complex x,
                   double complex* mant, long long* expo) noexcept nogil:
    cdef double complex prev, cur, nxt
    cdef long long e = 0
    cdef int n, k
    cdef double a
    mant[0] = 1.0
    expo[0] = 0
    if n_max == 0:
        return
    prev = 1.0
    cur = 1.0 + alpha - x
    mant[1] = cur
    expo[1] = 0
    for n in range(2, n_max + 1):
        nxt = ((2 * n - 1 + alpha - x) * cur - (n - 1 + alpha) * prev) / n
        prev = cur
        cur = nxt
        a = hypot(cur.real, cur.imag)  # squaring would overflow right at the threshold
        if a > _BIG:
            frexp(a, &k)
            cur = cldexp(cur, -k)
            prev = cldexp(prev, -k)
            e += k
        mant[n] = cur
        expo[n] = e


def laguerre_rows(int n_max, int alpha, x):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] xs = np.atleast_1d(
        np.asarray(x, dtype=np.complex128)).ravel()
    cdef Py_ssize_t m = xs.shape[0], i, n
    cdef double complex[::1] mrow = np.empty(n_max + 1, dtype=np.complex128)
    cdef long long[::1] erow = np.empty(n_max + 1, dtype=np.int64)
    mant = np.empty((n_max + 1, m), dtype=np.complex128)
    expo = np.empty((n_max + 1, m), dtype=np.int64)
    cdef double complex[:, :] mv = mant
    cdef long long[:, :] ev = expo
    for i in range(m):
        _lag_row(n_max, alpha, xs[i], &mrow[0], &erow[0])
        for n in range(n_max + 1):
            mv[n, i] = mrow[n]
            ev[n, i] = erow[n]
    return mant, expo


def hermite_table(int j_max, E):
    cdef double[::1] es = np.ascontiguousarray(np.atleast_1d(np.asarray(E, dtype=np.float64)).ravel())
    cdef Py_ssize_t m = es.shape[0], i
    cdef int j
    out = np.empty((j_max + 1, m))
    cdef double[:, :] ov = out
    cdef double c0 = M_PI ** -0.25, e
    for i in range(m):
        e = es[i]
        ov[0, i] = c0 * exp(-0.5 * e * e)
        if j_max >= 1:
            ov[1, i] = sqrt(2.0) * e * ov[0, i]
        for j in range(1, j_max):
            ov[j + 1, i] = sqrt(2.0 / (j + 1)) * e * ov[j, i] - sqrt(<double>j / (j + 1)) * ov[j - 1, i]
    return out


def dos_sum(int N, E):
    cdef double[::1] es = np.ascontiguousarray(np.atleast_1d(np.asarray(E, dtype=np.float64)).ravel())
    cdef Py_ssize_t m = es.shape[0], i
    cdef int j
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef double c0 = M_PI ** -0.25, e, p0, p1, p2, acc
    with nogil:
        for i in range(m):
            e = es[i]
            p0 = c0 * exp(-0.5 * e * e)
            acc = p0 * p0
            if N > 1:
                p1 = sqrt(2.0) * e * p0
                acc = acc + p1 * p1
                for j in range(1, N - 1):
                    p2 = sqrt(2.0 / (j + 1)) * e * p1 - sqrt(<double>j / (j + 1)) * p0
                    p0 = p1
                    p1 = p2
                    acc = acc + p1 * p1
            ov[i] = acc
    return out


def kernel_sum(int N, E, E2):
    a_, b_ = np.broadcast_arrays(np.asarray(E, dtype=np.float64), np.asarray(E2, dtype=np.float64))
    cdef double[::1] ea = np.ascontiguousarray(np.atleast_1d(a_).ravel())
    cdef double[::1] eb = np.ascontiguousarray(np.atleast_1d(b_).ravel())
    cdef Py_ssize_t m = ea.shape[0], i
    cdef int j
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef double c0 = M_PI ** -0.25, x, y, a0, a1, a2, b0, b1, b2, acc, s1, s0
    with nogil:
        for i in range(m):
            x = ea[i]
            y = eb[i]
            a0 = c0 * exp(-0.5 * x * x)
            b0 = c0 * exp(-0.5 * y * y)
            acc = a0 * b0
            if N > 1:
                a1 = sqrt(2.0) * x * a0
                b1 = sqrt(2.0) * y * b0
                acc = acc + a1 * b1
                for j in range(1, N - 1):
                    s1 = sqrt(2.0 / (j + 1))
                    s0 = sqrt(<double>j / (j + 1))
                    a2 = s1 * x * a1 - s0 * a0
                    b2 = s1 * y * b1 - s0 * b0
                    a0 = a1
                    a1 = a2
                    b0 = b1
                    b1 = b2
                    acc = acc + a1 * b1
            ov[i] = acc
    return out


def connected_ff(int N, double beta, t):
    cdef double[::1] ts = np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel())
    cdef Py_ssize_t m = ts.shape[0], i
    cdef int d, k, kmax, ak
    cdef double complex sigma, sig2, x
    cdef double s, log2s, log2_pref, rest, whole, am, val, tot
    cdef long long ex, emax, acc_e
    cdef double complex[::1] mrow = np.empty(N, dtype=np.complex128)
    cdef long long[::1] erow = np.empty(N, dtype=np.int64)
    cdef double[::1] lf = np.zeros(N + 1)
    for k in range(1, N + 1):
        lf[k] = lf[k - 1] + log2(<double>k)
    out = np.empty(m)
    cdef double[::1] ov = out
    with nogil:
        for i in range(m):
            sigma = beta + 1j * ts[i]
            sig2 = sigma * sigma
            x = -0.5 * sig2
            s = 0.5 * cabs2(sigma)
            log2_pref = sig2.real / (2.0 * _LN2)
            # running sum tot * 2**acc_e
            tot = 0.0
            acc_e = 0
            for d in range(N):
                if d > 0 and s == 0.0:
                    break
                log2s = log2(s) if d > 0 else 0.0
                kmax = N - 1 - d
                _lag_row(kmax, d, x, &mrow[0], &erow[0])
                for k in range(kmax + 1):
                    rest = log2_pref + d * log2s + lf[k] - lf[k + d]
                    whole = floor(rest)
                    am = frexp(hypot(mrow[k].real, mrow[k].imag), &ak)
                    if am == 0.0:
                        continue
                    val = am * am * exp2(rest - whole)
                    if d > 0:
                        val = 2.0 * val
                    ex = <long long>whole + 2 * (erow[k] + ak)
                    if tot == 0.0:
                        tot = val
                        acc_e = ex
                    elif ex > acc_e:
                        if ex - acc_e > 2000:
                            tot = val
                        else:
                            tot = val + ldexp(tot, <int>(acc_e - ex))
                        acc_e = ex
                    elif acc_e - ex <= 2000:
                        tot = tot + ldexp(val, <int>(ex - acc_e))
            if acc_e > 5000:
                acc_e = 5000
            elif acc_e < -5000:
                acc_e = -5000
            ov[i] = -ldexp(tot, <int>acc_e)
    return out
