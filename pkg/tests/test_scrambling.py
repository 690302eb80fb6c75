import itertools

import numpy as np
import pytest

from rmtquench import analytic as an
from rmtquench.montecarlo import InsufficientSamplesError, mc_loschmidt
from rmtquench.scrambling import (
    PauliLabel,
    UnsupportedSizeError,
    all_labels,
    echo_from_correlators,
    pauli_matrix,
)


def test_single_qubit_examples():
    np.testing.assert_array_equal(pauli_matrix(PauliLabel(("I",))), np.eye(2))
    np.testing.assert_array_equal(pauli_matrix(PauliLabel(("X",))), [[0, 1], [1, 0]])
    p = pauli_matrix(PauliLabel(("Z", "X")))
    assert np.trace(p.conj().T @ p) == 4


@pytest.mark.parametrize("n_qubits", [1, 2])
def test_pauli_basis_properties(n_qubits):
    labels = all_labels(n_qubits)
    assert len(labels) == 4**n_qubits
    N = 2**n_qubits
    mats = [pauli_matrix(lab) for lab in labels]
    for lab, m in zip(labels, mats):
        assert np.allclose(m, m.conj().T)
        assert np.allclose(m @ m.conj().T, np.eye(N))
        if set(lab.word) != {"I"}:
            assert abs(np.trace(m)) == 0
    for (i, a), (j, b) in itertools.product(enumerate(mats), repeat=2):
        assert np.trace(a.conj().T @ b) == (N if i == j else 0)


def test_size_guard_and_validation():
    with pytest.raises(UnsupportedSizeError):
        pauli_matrix(PauliLabel(("X", "Y", "Z")))
    with pytest.raises(UnsupportedSizeError):
        echo_from_correlators(3, 1.0, 200, 0)
    with pytest.raises(InsufficientSamplesError):
        echo_from_correlators(1, 1.0, 50, 0)
    with pytest.raises(ValueError):
        PauliLabel(("Q",))
    assert str(PauliLabel(("Z", "X"))) == "ZX"


def test_time_zero_is_one():
    est = echo_from_correlators(2, 0.0, 200, 1)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_identity_against_sampled_echo():
    t = np.array([0.5, 1.0, 2.0])
    corr = echo_from_correlators(1, t, 4000, 3)
    echo = mc_loschmidt(2, 0.0, t, 4000, 3)
    assert np.all(np.abs(corr.value - echo.values) <= 3 * np.hypot(corr.stderr, echo.stderr))


def test_long_time_plateau():
    est = echo_from_correlators(1, 60.0, 10000, 5)
    assert est.value == pytest.approx(an.echo_plateau(2, 0.0), rel=0.05)


def test_two_qubits_against_analytic():
    est = echo_from_correlators(2, 1.0, 2000, 9)
    assert abs(est.value - an.loschmidt_echo(4, 0.0, 1.0)) <= 4 * est.stderr


def test_deterministic():
    a = echo_from_correlators(1, [0.3, 0.9], 300, 2)
    b = echo_from_correlators(1, [0.3, 0.9], 300, 2)
    assert np.array_equal(a.value, b.value)
