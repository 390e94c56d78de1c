"""Tests for core/clifford.py."""

import numpy as np
import pytest

from nonmarkov_rb.core.clifford import frame_potential, is_unitary_2design, single_qubit_cliffords
from nonmarkov_rb.core.linalg import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, dagger, is_unitary
from nonmarkov_rb.core.random import haar_random_unitary


def _same_up_to_phase(a: np.ndarray, b: np.ndarray) -> bool:
    return abs(abs(np.trace(dagger(a) @ b)) - a.shape[0]) < 1e-9


class TestCliffordGroup:
    def test_has_24_unitaries(self) -> None:
        group = single_qubit_cliffords()
        assert len(group) == 24
        assert all(is_unitary(g) for g in group)

    def test_identity_first(self) -> None:
        assert np.allclose(single_qubit_cliffords()[0], np.eye(2))

    def test_distinct_modulo_phase(self) -> None:
        group = single_qubit_cliffords()
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                assert not _same_up_to_phase(a, b)

    def test_closed_under_products(self) -> None:
        group = single_qubit_cliffords()
        for a in group:
            for b in group:
                assert any(_same_up_to_phase(a @ b, c) for c in group)

    def test_cached(self) -> None:
        assert single_qubit_cliffords() is single_qubit_cliffords()


class TestTwoDesign:
    def test_cliffords_are_a_2design(self) -> None:
        group = single_qubit_cliffords()
        assert frame_potential(group) == pytest.approx(2.0, abs=1e-10)
        assert is_unitary_2design(group)

    def test_paulis_are_not(self) -> None:
        paulis = [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z]
        assert frame_potential(paulis) == pytest.approx(4.0, abs=1e-10)
        assert not is_unitary_2design(paulis)

    def test_random_sample_is_not(self) -> None:
        rng = np.random.default_rng(3)
        sample = [haar_random_unitary(2, rng) for _ in range(10)]
        assert not is_unitary_2design(sample)

    def test_rejects_non_unitary(self) -> None:
        gates = list(single_qubit_cliffords())
        gates[3] = 2 * gates[3]
        assert not is_unitary_2design(gates)
