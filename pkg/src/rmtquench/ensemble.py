"""GUE sampling under the ``exp(-Tr H^2)`` convention.

Normalization matters: every closed form in :mod:`rmtquench.analytic` assumes
the matrix density is proportional to ``exp(-Tr H^2)``. That fixes

* diagonal entries real Gaussian with variance 1/2,
* off-diagonal entries complex with independent real and imaginary parts of
  variance 1/4 each,

so ``E[Tr H^2] = N^2 / 2`` and the semicircle edge sits at ``sqrt(2N)``. The
common ``exp(-N Tr H^2 / 2)`` scaling silently breaks every comparison.

Seeds are split by hashing: draw ``i`` of role ``r`` under root seed ``s`` uses
``SeedSequence([s, i, r])``, so a draw depends only on its tag and never on
which worker produced it or in which order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "DecompositionError",
    "SpectralDraw",
    "QuenchSample",
    "draw_rng",
    "gue_matrix",
    "gue_matrices",
    "sample_gue",
    "make_quench",
    "quench_batch",
    "haar_pair_moment",
    "haar_pair_moment_table",
    "write_draws",
    "read_draws",
]

ROLE_INITIAL = 0
ROLE_FINAL = 1

_DUMP_MAGIC = b"GUE1"


class DecompositionError(RuntimeError):
    """The Hermitian eigensolver failed to converge."""


@dataclass(frozen=True, eq=False)
class SpectralDraw:
    """One GUE realization: ascending eigenvalues and unitary eigenvectors (columns)."""

    dim: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    seed_tag: tuple

    def matrix(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True, eq=False)
class QuenchSample:
    """Independent initial and final draws plus ``|<m_final|n_initial>|^2`` (row m, column n)."""

    initial: SpectralDraw
    final: SpectralDraw
    overlap_probs: np.ndarray


def _tag(sub_seed) -> tuple:
    tag = (sub_seed,) if isinstance(sub_seed, (int, np.integer)) else tuple(sub_seed)
    if not tag or any(int(v) < 0 for v in tag):
        raise ValueError(f"seed tags are nonempty tuples of nonnegative ints, got {sub_seed!r}")
    return tuple(int(v) for v in tag)


def draw_rng(sub_seed) -> np.random.Generator:
    """Generator owned by a single draw, keyed by its seed tag."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(_tag(sub_seed)))))


def _fill(out, rng, dim, iu):
    diag = rng.normal(0.0, math.sqrt(0.5), size=dim)
    off = rng.normal(0.0, 0.5, size=(2, iu[0].size))
    out[iu] = off[0] + 1j * off[1]
    out[(iu[1], iu[0])] = off[0] - 1j * off[1]
    out[np.diag_indices(dim)] = diag


def gue_matrix(dim: int, sub_seed) -> np.ndarray:
    """Hermitian matrix with density proportional to ``exp(-Tr H^2)``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    h = np.zeros((dim, dim), dtype=np.complex128)
    _fill(h, draw_rng(sub_seed), dim, np.triu_indices(dim, 1))
    return h


def gue_matrices(dim: int, tags) -> np.ndarray:
    """Stack of :func:`gue_matrix` draws, one per tag, shape ``(len(tags), dim, dim)``."""
    tags = list(tags)
    out = np.zeros((len(tags), dim, dim), dtype=np.complex128)
    iu = np.triu_indices(dim, 1)
    for h, tag in zip(out, tags):
        _fill(h, draw_rng(tag), dim, iu)
    return out


def _eigh(h):
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(str(exc)) from exc


def sample_gue(dim: int, sub_seed) -> SpectralDraw:
    """Draw a GUE matrix and return its full eigendecomposition."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    tag = _tag(sub_seed)
    w, v = _eigh(gue_matrix(dim, tag))
    return SpectralDraw(dim, w, v, tag)


def _overlaps(v_final, v_initial):
    amp = np.matmul(np.swapaxes(v_final.conj(), -1, -2), v_initial)
    return amp.real**2 + amp.imag**2


def make_quench(dim: int, pair_seed) -> QuenchSample:
    """Two independent draws for ``H_0`` and ``H_tau`` from the pair's seed tag."""
    tag = _tag(pair_seed)
    h0 = sample_gue(dim, tag + (ROLE_INITIAL,))
    ht = sample_gue(dim, tag + (ROLE_FINAL,))
    return QuenchSample(h0, ht, _overlaps(ht.eigenvectors, h0.eigenvectors))


def quench_batch(dim: int, root: int, start: int, stop: int):
    """Pairs ``start..stop-1`` of a run as arrays ``(E0, Etau, P)``.

    Pair ``i`` is exactly ``make_quench(dim, (root, i))``; ``P[i, m, n]`` is
    ``|<m_tau|n_0>|^2``.
    """
    idx = range(start, stop)
    h0 = gue_matrices(dim, [(root, i, ROLE_INITIAL) for i in idx])
    ht = gue_matrices(dim, [(root, i, ROLE_FINAL) for i in idx])
    e0, v0 = _eigh(h0)
    et, vt = _eigh(ht)
    return e0, et, _overlaps(vt, v0)


def haar_pair_moment(N: int, m: int, n: int, m2: int, n2: int) -> Fraction:
    """Haar average of ``p_{m|n} p_{m2|n2}``, exact.

    ``(1 + d(n,n2) d(m,m2) - d(n,n2)/N - d(m,m2)/N) / (N^2 - 1)``
    """
    dn = int(n == n2)
    dm = int(m == m2)
    return (1 + dn * dm - Fraction(dn, N) - Fraction(dm, N)) / (N * N - 1)


def haar_pair_moment_table(N: int) -> np.ndarray:
    """Float table of :func:`haar_pair_moment` indexed ``[m, n, m2, n2]``."""
    eye = np.eye(N)
    dm = eye[:, None, :, None]
    dn = eye[None, :, None, :]
    return (1.0 + dn * dm - dn / N - dm / N) / (N * N - 1)


def write_draws(path, draws) -> None:
    """Dump eigenvalues only: ``b"GUE1"``, u32 N, u64 count, then count*N little-endian f64."""
    draws = list(draws)
    if not draws:
        raise ValueError("no draws to write")
    dim = draws[0].dim
    if any(d.dim != dim for d in draws):
        raise ValueError("all draws must share one dimension")
    body = np.stack([d.eigenvalues for d in draws]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC + struct.pack("<IQ", dim, len(draws)))
        fh.write(body.tobytes())


def read_draws(path) -> np.ndarray:
    """Read a dump back as an array of shape ``(count, N)``."""
    raw = Path(path).read_bytes()
    if raw[:4] != _DUMP_MAGIC:
        raise ValueError("not a GUE1 dump")
    dim, count = struct.unpack("<IQ", raw[4:16])
    data = np.frombuffer(raw, dtype="<f8", offset=16)
    if data.size != dim * count:
        raise ValueError(f"truncated dump: expected {dim * count} values, found {data.size}")
    return data.reshape(count, dim).astype(np.float64)
