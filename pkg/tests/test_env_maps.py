"""Tests for channels/env_maps.py."""

import numpy as np
import pytest

from nonmarkov_rb.channels.env_maps import (
    EnvMapKind,
    EnvSuperOp,
    dollar_map,
    env_traces,
    extend_env_superop,
    split_dims,
    theta_map,
)
from nonmarkov_rb.channels.kraus import KrausChannel, random_cptp_channel
from nonmarkov_rb.core.linalg import dagger, matrices_close
from nonmarkov_rb.core.random import SeededRng, haar_random_unitary, random_density_operator
from nonmarkov_rb.exceptions import DimensionError


def _make_product_unitary(d_E: int, d_S: int, seed: int) -> tuple[np.ndarray, np.ndarray, KrausChannel]:
    rng = np.random.default_rng(seed)
    u_E = haar_random_unitary(d_E, rng)
    u_S = haar_random_unitary(d_S, rng)
    return u_E, u_S, KrausChannel.unitary(np.kron(u_E, u_S))


def _make_env_state(d_E: int, seed: int) -> np.ndarray:
    return random_density_operator(d_E, 1, SeededRng(seed)).matrix


class TestEnvMaps:
    def test_product_unitary_dollar(self) -> None:
        u_E, u_S, ch = _make_product_unitary(2, 2, 0)
        eps = _make_env_state(2, 1)
        expected = abs(np.trace(u_S)) ** 2 * u_E @ eps @ dagger(u_E)
        assert matrices_close(dollar_map(ch, eps), expected, 1e-12)

    def test_product_unitary_theta(self) -> None:
        u_E, _, ch = _make_product_unitary(3, 2, 2)
        eps = _make_env_state(3, 3)
        assert matrices_close(theta_map(ch, eps), u_E @ eps @ dagger(u_E), 1e-12)

    def test_theta_is_trace_preserving_for_tp(self) -> None:
        ch = random_cptp_channel(4, 3, SeededRng(4))
        eps = _make_env_state(2, 5)
        assert np.trace(theta_map(ch, eps)).real == pytest.approx(1.0, abs=1e-12)

    def test_theta_matches_definition(self) -> None:
        ch = random_cptp_channel(4, 2, SeededRng(6))
        eps = _make_env_state(2, 7)
        joint = ch(np.kron(eps, np.eye(2) / 2))
        expected = np.einsum("esfs->ef", joint.reshape(2, 2, 2, 2))
        assert matrices_close(theta_map(ch, eps), expected, 1e-12)

    def test_env_traces_shape(self) -> None:
        ch = random_cptp_channel(8, 2, SeededRng(8))
        assert env_traces(ch, 4, 2).shape == (2, 4, 4)

    def test_split_dims(self) -> None:
        assert split_dims(KrausChannel.identity(8), 4) == 2
        with pytest.raises(DimensionError, match="divisible"):
            split_dims(KrausChannel.identity(6), 4)


class TestEnvSuperOp:
    def test_call_matches_maps(self) -> None:
        ch = random_cptp_channel(4, 2, SeededRng(9))
        eps = _make_env_state(2, 10)
        diff = EnvSuperOp(EnvMapKind.DOLLAR_MINUS_THETA, ch, d_S=2, d_E=2)(eps)
        assert matrices_close(diff, dollar_map(ch, eps) - theta_map(ch, eps), 1e-14)

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(DimensionError, match="does not match"):
            EnvSuperOp(EnvMapKind.THETA, KrausChannel.identity(4), d_S=2, d_E=3)

    @pytest.mark.parametrize("kind", list(EnvMapKind))
    def test_extension_acts_on_environment_factor(self, kind: EnvMapKind) -> None:
        ch = random_cptp_channel(4, 3, SeededRng(11))
        op = EnvSuperOp(kind, ch, d_S=2, d_E=2)
        a = _make_env_state(2, 12)
        b = np.array([[0.2, 0.1 - 0.3j], [0.1 + 0.3j, -0.4]])
        assert matrices_close(extend_env_superop(op, np.kron(a, b)), np.kron(op(a), b), 1e-12)

    def test_extension_is_linear(self) -> None:
        ch = random_cptp_channel(4, 2, SeededRng(13))
        op = EnvSuperOp(EnvMapKind.THETA, ch, d_S=2, d_E=2)
        rng = np.random.default_rng(14)
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert matrices_close(op.extend(x + 2 * y), op.extend(x) + 2 * op.extend(y), 1e-12)
