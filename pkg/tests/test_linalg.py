"""Tests for core/linalg.py and core/random.py."""

import numpy as np
import pytest

from nonmarkov_rb.core.linalg import (
    PAULI_X,
    PAULI_Z,
    DensityOperator,
    check_povm,
    check_state,
    hermitian_expm,
    is_hermitian,
    is_unitary,
    kron,
    matrices_close,
    mutual_information,
    partial_trace,
    projector,
    von_neumann_entropy,
)
from nonmarkov_rb.core.random import SeededRng, haar_random_unitary, random_density_operator, random_pure_state
from nonmarkov_rb.exceptions import DimensionError, InvalidStateError


def _make_hermitian(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def _make_bell() -> np.ndarray:
    vec = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return np.outer(vec, vec.conj())


class TestPartialTrace:
    def test_product_operator(self) -> None:
        a = np.array([[1, 2j], [-2j, 3]], dtype=complex)
        b = np.array([[0.25, 0.1], [0.1, 0.75]], dtype=complex)
        joint = kron(a, b)
        assert matrices_close(partial_trace(joint, (2, 2), keep="E"), a * np.trace(b), 1e-12)
        assert matrices_close(partial_trace(joint, (2, 2), keep="S"), b * np.trace(a), 1e-12)

    def test_unequal_dimensions(self) -> None:
        rho_E = projector(1, 4)
        rho_S = np.eye(2) / 2
        joint = np.kron(rho_E, rho_S)
        assert matrices_close(partial_trace(joint, (4, 2), keep="E"), rho_E, 1e-12)
        assert matrices_close(partial_trace(joint, (4, 2), keep="S"), rho_S, 1e-12)

    def test_bad_keep(self) -> None:
        with pytest.raises(ValueError, match="keep"):
            partial_trace(np.eye(4), (2, 2), keep="X")

    def test_wrong_size(self) -> None:
        with pytest.raises(DimensionError):
            partial_trace(np.eye(3), (2, 2), keep="S")


class TestHermitianExpm:
    def test_pauli_z_rotation(self) -> None:
        theta = 0.3
        u = hermitian_expm(PAULI_Z, theta)
        assert matrices_close(u, np.diag([np.exp(-1j * theta), np.exp(1j * theta)]), 1e-14)
        assert is_unitary(u)

    def test_group_property(self) -> None:
        h = _make_hermitian(4, 3)
        assert matrices_close(hermitian_expm(h, 0.2) @ hermitian_expm(h, 0.5), hermitian_expm(h, 0.7), 1e-12)
        assert matrices_close(hermitian_expm(h, 0.4) @ hermitian_expm(h, -0.4), np.eye(4), 1e-12)

    def test_matches_power_series(self) -> None:
        h = _make_hermitian(4, 4)
        generator = -1j * 0.3 * h
        series = np.zeros((4, 4), dtype=complex)
        term = np.eye(4, dtype=complex)
        for k in range(1, 40):
            series += term
            term = term @ generator / k
        assert matrices_close(hermitian_expm(h, 0.3), series, 1e-12)

    def test_rejects_non_hermitian(self) -> None:
        with pytest.raises(ValueError, match="Hermitian"):
            hermitian_expm(np.array([[0, 1], [0, 0]]), 1.0)


class TestStateChecks:
    def test_valid_state_passes(self) -> None:
        assert check_state(np.eye(2) / 2) is not None

    def test_wrong_trace(self) -> None:
        with pytest.raises(InvalidStateError, match="trace"):
            check_state(np.eye(2))

    def test_negative_eigenvalue(self) -> None:
        with pytest.raises(InvalidStateError, match="negative"):
            check_state(np.diag([1.5, -0.5]))

    def test_not_hermitian(self) -> None:
        with pytest.raises(InvalidStateError, match="Hermitian"):
            check_state(np.array([[0.5, 0.1], [0.3, 0.5]]))

    def test_povm_bounds(self) -> None:
        check_povm(projector(0, 2))
        with pytest.raises(InvalidStateError, match="outside"):
            check_povm(2 * projector(0, 2))

    def test_nan_rejected(self) -> None:
        with pytest.raises(InvalidStateError, match="NaN"):
            check_state(np.array([[np.nan, 0], [0, 1]]))

    def test_is_hermitian(self) -> None:
        assert is_hermitian(PAULI_X)
        assert not is_hermitian(np.array([[0, 1], [0, 0]]))


class TestDensityOperator:
    def test_zeros(self) -> None:
        rho = DensityOperator.zeros(2, 2)
        assert rho.dim == 4
        assert rho.matrix[0, 0] == 1
        assert matrices_close(rho.rho_E, projector(0, 2), 1e-14)
        assert matrices_close(rho.rho_S, projector(0, 2), 1e-14)

    def test_matrix_is_read_only(self) -> None:
        rho = DensityOperator.zeros(2, 1)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 0.5

    def test_product_marginals(self) -> None:
        rho_E = np.diag([0.3, 0.7]).astype(complex)
        rho_S = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
        rho = DensityOperator.product(rho_E, rho_S)
        assert matrices_close(rho.rho_E, rho_E, 1e-14)
        assert matrices_close(rho.rho_S, rho_S, 1e-14)

    def test_dimension_cap(self) -> None:
        with pytest.raises(DimensionError, match="exceeds"):
            DensityOperator.zeros(2, 64)

    def test_environment_state(self) -> None:
        env = DensityOperator.environment(np.eye(4) / 4)
        assert env.d_S == 1 and env.d_E == 4


class TestEntropy:
    def test_maximally_mixed_qubit(self) -> None:
        assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2))

    def test_pure_state_zero(self) -> None:
        assert von_neumann_entropy(projector(0, 3)) == pytest.approx(0.0, abs=1e-12)

    def test_product_state_uncorrelated(self) -> None:
        rho = DensityOperator.product(np.diag([0.2, 0.8]), np.eye(2) / 2)
        assert mutual_information(rho) == pytest.approx(0.0, abs=1e-12)

    def test_bell_state(self) -> None:
        rho = DensityOperator(_make_bell(), 2, 2)
        assert mutual_information(rho) == pytest.approx(2 * np.log(2))


class TestRandom:
    def test_derive_is_reproducible(self) -> None:
        a = SeededRng(7).derive(3, 1).generator().standard_normal(5)
        b = SeededRng(7).derive(3, 1).generator().standard_normal(5)
        c = SeededRng(7).derive(3, 2).generator().standard_normal(5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_derive_chains(self) -> None:
        assert SeededRng(7).derive(3).derive(1) == SeededRng(7).derive(3, 1)

    def test_seed_range(self) -> None:
        with pytest.raises(ValueError, match="64-bit"):
            SeededRng(-1)
        with pytest.raises(ValueError, match="64-bit"):
            SeededRng(2**64)

    def test_unknown_algorithm(self) -> None:
        with pytest.raises(ValueError, match="bit generator"):
            SeededRng(1, algorithm="NotAGenerator")

    def test_haar_unitary(self) -> None:
        rng = np.random.default_rng(0)
        for d in (1, 2, 4, 8):
            assert is_unitary(haar_random_unitary(d, rng))

    def test_seeded_unitaries_are_bit_identical(self) -> None:
        first = haar_random_unitary(2, SeededRng(5).derive(1, 2))
        again = haar_random_unitary(2, SeededRng(5).derive(1, 2))
        other = haar_random_unitary(2, SeededRng(5).derive(1, 3))
        assert np.array_equal(first, again)
        assert not np.array_equal(first, other)

    def test_haar_first_moment(self) -> None:
        rng = np.random.default_rng(21)
        rho = np.array([[0.8, 0.3 - 0.1j], [0.3 + 0.1j, 0.2]])
        total = np.zeros((2, 2), dtype=complex)
        for _ in range(10_000):
            u = haar_random_unitary(2, rng)
            total += u @ rho @ u.conj().T
        assert matrices_close(total / 10_000, np.eye(2) / 2, 0.02)

    def test_haar_second_moment(self) -> None:
        rng = np.random.default_rng(22)
        x = projector(0, 4)
        total = np.zeros((4, 4), dtype=complex)
        for _ in range(10_000):
            u = haar_random_unitary(2, rng)
            uu = kron(u, u)
            total += uu @ x @ uu.conj().T
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert matrices_close(total / 10_000, (np.eye(4) + swap) / 6, 0.02)

    def test_random_states_are_valid(self) -> None:
        rng = SeededRng(11)
        rho = random_density_operator(2, 4, rng)
        assert rho.dim == 8
        assert np.trace(rho.matrix).real == pytest.approx(1.0)
        pure = random_pure_state(4, np.random.default_rng(1))
        assert np.trace(pure @ pure).real == pytest.approx(1.0)
