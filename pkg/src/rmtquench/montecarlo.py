"""Seeded Monte-Carlo estimators over explicit GUE quench pairs.

Every estimator has two reductions:

``annealed``
    numerator and denominator are averaged separately over pairs, then divided.
    This is what the closed forms in :mod:`rmtquench.analytic` compute.
``exact``
    the per-pair ratio is averaged.

Pairs are processed in fixed chunks of ``CHUNK`` consecutive draw indices.
Chunks may run on any number of threads, but their accumulators are merged in
index order, so results are bit-identical for every thread count.

Standard errors of ratio estimators come from the first-order delta method and
are approximate for small ``n_pairs``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .analytic import CurveSeries
from .ensemble import quench_batch

__all__ = [
    "InsufficientSamplesError",
    "Accumulator",
    "Estimate",
    "WorkHistogram",
    "mc_chi",
    "mc_work_pdf",
    "mc_mean_work",
    "mc_work_variance",
    "mc_loschmidt",
    "mc_frame_potential",
    "mc_partition_moments",
    "mc_overlap_moments",
]

CHUNK = 256
MODES = ("annealed", "exact")


class InsufficientSamplesError(ValueError):
    """Too few pairs for a meaningful estimate and standard error."""


class Accumulator:
    """Streaming mean and second co-moment with pairwise (Chan) merging.

    With ``covariance=False`` the second moment is elementwise,
    ``sum |x - mean|^2``. With ``covariance=True`` the last axis holds
    components and ``m2`` carries their full co-moment matrix.
    """

    def __init__(self, covariance: bool = False):
        self.covariance = covariance
        self.count = 0
        self.mean = None
        self.m2 = None

    def _moment(self, dev_a, dev_b=None):
        if dev_b is None:
            dev_b = dev_a
        if self.covariance:
            return dev_a[..., :, None] * dev_b[..., None, :]
        return (dev_a.conj() * dev_b).real if np.iscomplexobj(dev_a) else dev_a * dev_b

    def push_batch(self, xs) -> "Accumulator":
        """Add samples stacked along axis 0."""
        xs = np.asarray(xs)
        n = xs.shape[0]
        if n == 0:
            return self
        mean = xs.mean(axis=0)
        dev = xs - mean
        if self.covariance:
            m2 = np.einsum("i...a,i...b->...ab", dev, dev)
        else:
            m2 = self._moment(dev).sum(axis=0)
        other = Accumulator(self.covariance)
        other.count, other.mean, other.m2 = n, mean, m2
        merged = self.merge(other)
        self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2
        return self

    def update(self, x) -> "Accumulator":
        return self.push_batch(np.asarray(x)[None])

    def merge(self, other: "Accumulator") -> "Accumulator":
        out = Accumulator(self.covariance)
        if other.count == 0:
            out.count, out.mean, out.m2 = self.count, self.mean, self.m2
            return out
        if self.count == 0:
            out.count, out.mean, out.m2 = other.count, other.mean, other.m2
            return out
        n = self.count + other.count
        delta = other.mean - self.mean
        out.count = n
        out.mean = self.mean + delta * (other.count / n)
        out.m2 = self.m2 + other.m2 + self._moment(delta) * (self.count * other.count / n)
        return out

    @property
    def variance(self):
        """Sample (co)variance, ``m2 / (count - 1)``."""
        if self.count < 2:
            raise InsufficientSamplesError("variance needs at least 2 samples")
        return self.m2 / (self.count - 1)

    @property
    def stderr(self):
        if self.count < 2:
            raise InsufficientSamplesError("stderr needs at least 2 samples")
        m2 = np.diagonal(self.m2, axis1=-2, axis2=-1) if self.covariance else self.m2
        return np.sqrt(m2 / (self.count * (self.count - 1)))


@dataclass(frozen=True)
class Estimate:
    """A sampled value with its standard error."""

    value: Any
    stderr: Any
    n: int
    meta: dict = field(default_factory=dict)


@dataclass
class WorkHistogram:
    """Binned estimate of the averaged work distribution."""

    edges: np.ndarray
    mass: np.ndarray
    stderr: np.ndarray
    n_samples: int
    beta: float
    N: int
    seed: int
    mean: float = float("nan")
    mean_stderr: float = float("nan")

    def __post_init__(self):
        if not np.all(np.diff(self.edges) > 0):
            raise ValueError("edges must be strictly ascending")
        if self.mass.shape != (self.edges.size - 1,):
            raise ValueError("one mass per bin")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.mass / np.diff(self.edges)


def _check_pairs(n_pairs, minimum=100):
    if n_pairs < minimum:
        raise InsufficientSamplesError(f"need at least {minimum} pairs, got {n_pairs}")


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _workers(threads):
    return max(1, int(threads if threads else (os.cpu_count() or 1)))


def _run_chunks(N, n_pairs, seed, threads, work):
    """Apply ``work(start, E0, Etau, P)`` per chunk; return results in chunk order."""
    starts = range(0, n_pairs, CHUNK)

    def job(start):
        e0, et, p = quench_batch(N, seed, start, min(start + CHUNK, n_pairs))
        _spot_check(start, p)
        return work(start, e0, et, p)

    k = _workers(threads)
    if k == 1:
        return [job(s) for s in starts]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(job, starts))


def _spot_check(start, p):
    # every 100th pair must give a doubly stochastic overlap matrix
    idx = [i - start for i in range(start, start + p.shape[0]) if i % 100 == 0]
    if not idx:
        return
    q = p[idx]
    if np.max(np.abs(q.sum(axis=1) - 1)) > 1e-9 or np.max(np.abs(q.sum(axis=2) - 1)) > 1e-9:
        raise RuntimeError("sampled overlap matrix is not doubly stochastic")


def _reduce(chunks, covariance):
    acc = Accumulator(covariance)
    for c in chunks:
        acc = acc.merge(c)
    return acc


def _acc(xs, covariance=True):
    return Accumulator(covariance).push_batch(xs)


def _ref_energy(N):
    # Boltzmann weights are taken relative to the lower semicircle edge so the
    # annealed sums neither overflow nor depend on the chunking
    return -math.sqrt(2.0 * N)


def _ratio(mean, cov, n):
    """``a/b`` and its delta-method stderr from component means ``(a, b)``."""
    a, b = mean[..., 0], mean[..., 1]
    r = a / b
    var = cov[..., 0, 0] - 2 * r * cov[..., 0, 1] + r * r * cov[..., 1, 1]
    return r, np.sqrt(np.maximum(var, 0.0) / n) / np.abs(b)


def _amplitudes(beta, t, e0, et, p, eref):
    """``Tr(exp(i t H_tau) exp(-(beta + i t) H_0)) * exp(beta * eref)``, shape (pairs, T)."""
    b = np.exp(-(beta + 1j * t)[None, None, :] * e0[:, :, None] + beta * eref)
    a = np.exp(1j * t[None, None, :] * et[:, :, None])
    q = np.matmul(p.astype(np.complex128), b)
    return np.einsum("pmt,pmt->pt", a, q)


def mc_chi(N: int, beta: float, t_grid, n_pairs: int, seed: int, threads: int | None = None) -> CurveSeries:
    """Annealed characteristic function ``mean Tr(e^{itH_tau} e^{-(beta+it)H_0}) / mean Z(beta)``."""
    _check_pairs(n_pairs)
    t = np.asarray(t_grid, dtype=float)
    eref = _ref_energy(N)

    def work(start, e0, et, p):
        amp = _amplitudes(beta, t, e0, et, p, eref)
        z = np.exp(-beta * (e0 - eref)).sum(axis=1)
        zz = np.broadcast_to(z[:, None], amp.shape)
        return _acc(np.stack([amp.real, amp.imag, zz], axis=-1))

    acc = _reduce(_run_chunks(N, n_pairs, seed, threads, work), True)
    cov = acc.variance
    re, se_re = _ratio(acc.mean[..., [0, 2]], cov[..., [0, 2], :][..., [0, 2]], acc.count)
    im, se_im = _ratio(acc.mean[..., [1, 2]], cov[..., [1, 2], :][..., [1, 2]], acc.count)
    return CurveSeries(
        t, re + 1j * im, se_re + 1j * se_im,
        meta={"N": N, "beta": beta, "generator": "mc_chi", "mode": "annealed", "seed": seed, "n_pairs": n_pairs},
    )


def _work_range(N, beta):
    half = 2.0 * math.sqrt(2.0 * N) + 16.0
    return -half, half + (beta if beta > 1 else 0.0)


def _boltzmann(beta, e):
    x = -beta * e
    x = x - x.max(axis=-1, keepdims=True)
    w = np.exp(x)
    return w / w.sum(axis=-1, keepdims=True)


def mc_work_pdf(N: int, beta: float, n_pairs: int, bins: int, seed: int, mode: str = "exact",
                w_range: tuple[float, float] | None = None, threads: int | None = None) -> WorkHistogram:
    """Histogram of the pair-averaged work distribution.

    Each pair contributes the full transition weight ``p_n^0 p_{m|n}`` of every
    ``(n, m)`` to the bin holding ``E_m^tau - E_n^0``; no categorical sampling.
    Works outside ``w_range`` are folded into the end bins so every pair
    carries unit mass.

    In ``exact`` mode ``p_n^0`` is normalized per pair. In ``annealed`` mode the
    unnormalized Boltzmann weights are summed over pairs and divided by the
    summed partition functions, which is the quantity
    :func:`rmtquench.analytic.work_pdf` computes.
    """
    _check_pairs(n_pairs)
    _check_mode(mode)
    if bins < 10:
        raise ValueError("bins must be >= 10")
    lo, hi = w_range if w_range is not None else _work_range(N, beta)
    edges = np.linspace(lo, hi, bins + 1)
    eref = _ref_energy(N)

    def work(start, e0, et, p):
        n = e0.shape[0]
        if mode == "exact":
            p0 = _boltzmann(beta, e0)
        else:
            p0 = np.exp(-beta * (e0 - eref))
        wgt = p * p0[:, None, :]
        w = et[:, :, None] - e0[:, None, :]
        idx = np.clip(np.searchsorted(edges, w, side="right") - 1, 0, bins - 1)
        flat = (np.arange(n)[:, None, None] * bins + idx).ravel()
        mass = np.bincount(flat, weights=wgt.ravel(), minlength=n * bins).reshape(n, bins)
        m1 = (wgt * w).sum(axis=(1, 2))
        if mode == "exact":
            return _acc(mass, covariance=False), _acc(m1, covariance=False)
        z = p0.sum(axis=1)
        zz = np.broadcast_to(z[:, None], mass.shape)
        return _acc(np.stack([mass, zz], axis=-1)), _acc(np.stack([m1, z], axis=-1))

    parts = _run_chunks(N, n_pairs, seed, threads, work)
    hist = _reduce([a for a, _ in parts], mode == "annealed")
    mom = _reduce([b for _, b in parts], mode == "annealed")
    if mode == "exact":
        mass, se, mean, mean_se = hist.mean, hist.stderr, float(mom.mean), float(mom.stderr)
    else:
        mass, se = _ratio(hist.mean, hist.variance, n_pairs)
        mean, mean_se = (float(x) for x in _ratio(mom.mean, mom.variance, n_pairs))
    return WorkHistogram(
        edges=edges, mass=mass, stderr=se, n_samples=n_pairs, beta=beta, N=N, seed=seed,
        mean=mean, mean_stderr=mean_se,
    )


def _work_moment_stats(N, betas, n_pairs, seed, threads):
    """Accumulators for exact ``(r1, r2)`` and annealed ``(A0, A1, A2)`` per beta."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    eref = _ref_energy(N)

    def work(start, e0, et, p):
        # p[i, m, k]: transition k (initial) -> m (final)
        et1 = np.einsum("imk,im->ik", p, et)
        et2 = np.einsum("imk,im->ik", p, et * et)
        mu = et1 - e0
        s = et2 - 2.0 * e0 * et1 + e0 * e0
        w = np.exp(-betas[None, None, :] * (e0 - eref)[:, :, None])
        a0 = w.sum(axis=1)
        a1 = np.einsum("ikb,ik->ib", w, mu)
        a2 = np.einsum("ikb,ik->ib", w, s)
        exact = np.stack([a1 / a0, a2 / a0], axis=-1)
        annealed = np.stack([a0, a1, a2], axis=-1)
        return _acc(exact), _acc(annealed)

    parts = _run_chunks(N, n_pairs, seed, threads, work)
    return _reduce([a for a, _ in parts], True), _reduce([b for _, b in parts], True)


def _maybe_scalar(beta, arr):
    return float(arr[0]) if np.ndim(beta) == 0 else arr


def mc_mean_work(N: int, beta, n_pairs: int, seed: int, mode: str = "annealed",
                 threads: int | None = None) -> Estimate:
    """Mean work. ``beta`` may be an array; all values share the same pairs."""
    _check_pairs(n_pairs)
    _check_mode(mode)
    exact, ann = _work_moment_stats(N, beta, n_pairs, seed, threads)
    if mode == "exact":
        val, se = exact.mean[..., 0], exact.stderr[..., 0]
    else:
        cov = ann.variance
        val, se = _ratio(ann.mean[..., [1, 0]], cov[..., [1, 0], :][..., [1, 0]], ann.count)
    return Estimate(_maybe_scalar(beta, val), _maybe_scalar(beta, se), n_pairs, {"mode": mode, "N": N, "seed": seed})


def mc_work_variance(N: int, beta, n_pairs: int, seed: int, mode: str = "annealed",
                     threads: int | None = None) -> Estimate:
    """Work variance: per-mode second moment minus the squared per-mode mean."""
    _check_pairs(n_pairs)
    _check_mode(mode)
    exact, ann = _work_moment_stats(N, beta, n_pairs, seed, threads)
    if mode == "exact":
        m = exact.mean
        val = m[..., 1] - m[..., 0] ** 2
        g = np.stack([-2.0 * m[..., 0], np.ones_like(m[..., 0])], axis=-1)
        cov = exact.variance
    else:
        a0, a1, a2 = ann.mean[..., 0], ann.mean[..., 1], ann.mean[..., 2]
        val = a2 / a0 - (a1 / a0) ** 2
        g = np.stack([-a2 / a0**2 + 2 * a1**2 / a0**3, -2 * a1 / a0**2, 1.0 / a0], axis=-1)
        cov = ann.variance
    se = np.sqrt(np.maximum(np.einsum("...a,...ab,...b->...", g, cov, g), 0.0) / n_pairs)
    return Estimate(_maybe_scalar(beta, val), _maybe_scalar(beta, se), n_pairs, {"mode": mode, "N": N, "seed": seed})


def _echo_stats(N, beta, t, n_pairs, seed, threads, window):
    eref = _ref_energy(N)
    in_win = None
    if window is not None:
        in_win = (t >= window[0]) & (t <= window[1])
        if not in_win.any():
            raise ValueError("averaging window contains no grid points")

    def work(start, e0, et, p):
        amp = _amplitudes(beta, t, e0, et, p, eref)
        a = amp.real**2 + amp.imag**2
        z1 = np.exp(-beta * (e0 - eref)).sum(axis=1)
        z2 = np.exp(-2.0 * beta * (e0 - eref)).sum(axis=1)
        b = z1 * z1
        r = a / b[:, None]
        bb = np.broadcast_to(b[:, None], a.shape)
        ann = np.stack([a, bb], axis=-1)
        if in_win is not None:
            ann = np.concatenate([ann, np.stack([a[:, in_win].mean(axis=1), b], axis=-1)[:, None, :]], axis=1)
            r = np.concatenate([r, r[:, in_win].mean(axis=1)[:, None]], axis=1)
        return _acc(ann), _acc(r, covariance=False), _acc(z2 / b, covariance=False)

    parts = _run_chunks(N, n_pairs, seed, threads, work)
    return tuple(_reduce([x[i] for x in parts], cov) for i, cov in enumerate((True, False, False)))


def mc_loschmidt(N: int, beta: float, t_grid, n_pairs: int, seed: int, mode: str = "annealed",
                 window: tuple[float, float] | None = None, threads: int | None = None) -> CurveSeries:
    """Loschmidt echo ``|Tr(e^{itH_tau} e^{-(beta+it)H_0})|^2 / Z(beta)^2``.

    With ``window=(t0, t1)`` the per-pair average over grid points inside the
    window is estimated as well and reported in ``meta`` (``window_mean``,
    ``window_stderr``). ``meta["exact_plateau"]`` is the sampled
    ``<Z(2 beta)/Z(beta)^2> * 2/(N+1)``.
    """
    _check_pairs(n_pairs)
    _check_mode(mode)
    t = np.asarray(t_grid, dtype=float)
    ann, exact, q = _echo_stats(N, beta, t, n_pairs, seed, threads, window)
    if mode == "exact":
        val, se = exact.mean, exact.stderr
    else:
        val, se = _ratio(ann.mean, ann.variance, ann.count)
    meta = {
        "N": N, "beta": beta, "generator": "mc_loschmidt", "mode": mode, "seed": seed, "n_pairs": n_pairs,
        "exact_plateau": float(q.mean) * 2.0 / (N + 1), "exact_plateau_stderr": float(q.stderr) * 2.0 / (N + 1),
    }
    if window is not None:
        meta.update(window=tuple(window), window_mean=float(val[-1]), window_stderr=float(se[-1]))
        val, se = val[:-1], se[:-1]
    return CurveSeries(t, val, se, meta=meta)


def mc_frame_potential(N: int, t_grid, n_pairs: int, seed: int,
                       window: tuple[float, float] | None = None, threads: int | None = None) -> CurveSeries:
    """First frame potential ``<|Tr(e^{itH_tau} e^{-itH_0})|^2>`` over independent pairs.

    Computed as ``N^2`` times the infinite-temperature echo on the same pairs.
    """
    c = mc_loschmidt(N, 0.0, t_grid, n_pairs, seed, mode="annealed", window=window, threads=threads)
    n2 = float(N * N)
    meta = dict(c.meta, generator="mc_frame_potential")
    for key in ("window_mean", "window_stderr"):
        if key in meta:
            meta[key] *= n2
    return CurveSeries(c.grid, n2 * c.values, n2 * c.stderr, meta=meta)


def mc_partition_moments(N: int, beta: float, n_pairs: int, seed: int, threads: int | None = None) -> Estimate:
    """Sampled ``<Z(beta)>``, ``<Z(beta)^2>`` and ``<Z(2 beta)>`` from the initial draws."""
    _check_pairs(n_pairs)

    def work(start, e0, et, p):
        z1 = np.exp(-beta * e0).sum(axis=1)
        z2 = np.exp(-2.0 * beta * e0).sum(axis=1)
        return _acc(np.stack([z1, z1 * z1, z2], axis=-1), covariance=False)

    acc = _reduce(_run_chunks(N, n_pairs, seed, threads, work), False)
    return Estimate(acc.mean, acc.stderr, n_pairs, {"fields": ("Z", "Z^2", "Z(2beta)"), "N": N, "beta": beta})


def mc_overlap_moments(N: int, n_pairs: int, seed: int, threads: int | None = None):
    """Sampled first and second moments of the overlap probabilities ``p_{m|n}``.

    Returns two :class:`Estimate` objects: ``<p_{m|n}>`` with shape ``(N, N)``
    and ``<p_{m|n} p_{m2|n2}>`` with shape ``(N, N, N, N)`` indexed
    ``[m, n, m2, n2]``.
    """
    _check_pairs(n_pairs)

    def work(start, e0, et, p):
        pp = p[:, :, :, None, None] * p[:, None, None, :, :]
        return _acc(p, covariance=False), _acc(pp, covariance=False)

    parts = _run_chunks(N, n_pairs, seed, threads, work)
    first = _reduce([a for a, _ in parts], False)
    second = _reduce([b for _, b in parts], False)
    meta = {"N": N, "seed": seed}
    return (Estimate(first.mean, first.stderr, n_pairs, meta),
            Estimate(second.mean, second.stderr, n_pairs, meta))
