"""Pauli-summed two-point correlators under GUE time evolution.

For ``U = exp(-iHt)`` with ``H`` drawn from the GUE, the squared ensemble
average of ``Tr(A U^dag B U rho)`` summed over all ordered Pauli pairs,

    (1/N^2) sum_{A,B} |E_H[Tr(A U^dag B U) / N]|^2,

equals the infinite-temperature Loschmidt echo. Only one and two qubits are
supported; the double sum already has 256 terms at two qubits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .ensemble import _eigh, gue_matrices
from .montecarlo import Estimate, InsufficientSamplesError

__all__ = [
    "UnsupportedSizeError",
    "PauliLabel",
    "pauli_matrix",
    "all_labels",
    "echo_from_correlators",
]

MAX_QUBITS = 2
# role tag of scrambling draws; quench pairs use 0 and 1
ROLE_SCRAMBLE = 2

_SINGLE = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class UnsupportedSizeError(ValueError):
    """More qubits than the Pauli double sum is allowed to cost."""


def _check_qubits(n_qubits):
    if n_qubits not in range(1, MAX_QUBITS + 1):
        raise UnsupportedSizeError(f"n_qubits must be 1..{MAX_QUBITS}, got {n_qubits}")


@dataclass(frozen=True)
class PauliLabel:
    """A Pauli string such as ``("Z", "X")``, one symbol per qubit."""

    word: tuple[str, ...]

    def __post_init__(self):
        word = tuple(self.word)
        if not word or any(c not in _SINGLE for c in word):
            raise ValueError(f"invalid Pauli word {self.word!r}")
        object.__setattr__(self, "word", word)

    @property
    def n_qubits(self) -> int:
        return len(self.word)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __str__(self):
        return "".join(self.word)


def pauli_matrix(label: PauliLabel) -> np.ndarray:
    """Kronecker product of single-qubit Paulis in word order.

    >>> pauli_matrix(PauliLabel(("X",))).real
    array([[0., 1.],
           [1., 0.]])
    """
    _check_qubits(label.n_qubits)
    return reduce(np.kron, (_SINGLE[c] for c in label.word))


def all_labels(n_qubits: int) -> list[PauliLabel]:
    _check_qubits(n_qubits)
    return [PauliLabel(w) for w in itertools.product("IXYZ", repeat=n_qubits)]


def _correlators(paulis, energies, vecs, t):
    """``Tr(A U^dag B U) / N`` for every draw and label pair, shape (draws, A, B)."""
    n = paulis.shape[-1]
    u = np.matmul(vecs * np.exp(-1j * t * energies)[:, None, :], np.swapaxes(vecs.conj(), -1, -2))
    ud = np.swapaxes(u.conj(), -1, -2)
    heis = np.matmul(np.matmul(ud[:, None], paulis[None]), u[:, None])
    # Hermitian operators give real traces
    return np.einsum("aij,dbji->dab", paulis, heis).real / n


def echo_from_correlators(n_qubits: int, t, n_draws: int, seed: int) -> Estimate:
    """Squared-mean Pauli correlator sum at one or several times.

    The ensemble mean of each correlator is taken over shared draws first and
    squared afterwards. The plug-in estimate ``|mean|^2`` is biased upward by
    ``var / n_draws``; that term is subtracted, leaving an ``O(1/n_draws^2)``
    residual. The standard error is the first-order (delta method) one.

    Returns
    -------
    Estimate
        ``value`` and ``stderr`` have the shape of ``t``.
    """
    _check_qubits(n_qubits)
    if n_draws < 100:
        raise InsufficientSamplesError(f"need at least 100 draws, got {n_draws}")
    dim = 2**n_qubits
    paulis = np.stack([pauli_matrix(lab) for lab in all_labels(n_qubits)])
    h = gue_matrices(dim, [(seed, i, ROLE_SCRAMBLE) for i in range(n_draws)])
    energies, vecs = _eigh(h)

    times = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.empty(times.shape)
    errs = np.empty(times.shape)
    for k, tk in enumerate(times):
        x = _correlators(paulis, energies, vecs, tk)
        mean = x.mean(axis=0)
        var = x.var(axis=0, ddof=1)
        vals[k] = (mean**2 - var / n_draws).sum() / dim**2
        y = 2.0 * np.einsum("dab,ab->d", x, mean) / dim**2
        errs[k] = y.std(ddof=1) / np.sqrt(n_draws)
    if np.ndim(t) == 0:
        vals, errs = float(vals[0]), float(errs[0])
    return Estimate(vals, errs, n_draws, {"n_qubits": n_qubits, "seed": seed})
