"""Tests for noise/classical.py."""

import itertools

import numpy as np
import pytest

from nonmarkov_rb.noise.classical import (
    AveragingMode,
    classical_dephasing_asf,
    dephasing_strength,
    gaussian_expectation,
    markovian_dephasing_rate,
    negative_support_mass,
    shallow_pocket_asf,
    shallow_pocket_curve,
    shallow_pocket_markovian_curve,
)
from nonmarkov_rb.exceptions import QuadratureError


class TestGaussianDephasing:
    def test_markovian_rate_value(self) -> None:
        curve = classical_dephasing_asf(0.015, 5, AveragingMode.MARKOVIAN)
        assert curve.values[0] == pytest.approx(0.9997, abs=5e-5)

    def test_markovian_rate_closed_form(self) -> None:
        curve = classical_dephasing_asf(0.015, 50, "markovian")
        rate = markovian_dephasing_rate(0.015)
        assert curve.values[0] == pytest.approx(rate, abs=1e-10)
        assert curve.values[-1] == pytest.approx(rate**50, abs=1e-10)

    def test_dc_dominates_markovian(self) -> None:
        markov = classical_dephasing_asf(0.2, 40, AveragingMode.MARKOVIAN)
        dc = classical_dephasing_asf(0.2, 40, AveragingMode.DC)
        assert dc.values[0] == pytest.approx(markov.values[0], abs=1e-12)
        assert np.all(dc.values >= markov.values - 1e-12)
        assert dc.values[-1] > markov.values[-1]

    def test_curve_metadata(self) -> None:
        curve = classical_dephasing_asf(0.015, 10, AveragingMode.DC)
        assert list(curve.m_values) == list(range(1, 11))
        assert curve.extra["mode"] == "dc"

    def test_rejects_bad_arguments(self) -> None:
        with pytest.raises(ValueError, match="sigma"):
            classical_dephasing_asf(0.0, 10)
        with pytest.raises(ValueError, match="m_max"):
            classical_dephasing_asf(0.1, 0)

    def test_strength_at_zero(self) -> None:
        assert dephasing_strength(0.0) == pytest.approx(1.0)


class TestGaussianExpectation:
    def test_second_moment(self) -> None:
        assert gaussian_expectation(lambda d: d**2, 0.3) == pytest.approx(0.09, abs=1e-12)

    def test_vector_valued(self) -> None:
        out = gaussian_expectation(lambda d: np.stack([np.ones_like(d), d**4]), 0.5)
        assert out == pytest.approx([1.0, 3 * 0.5**4], abs=1e-12)

    def test_nonconvergence_raises(self) -> None:
        with pytest.raises(QuadratureError, match="did not converge"):
            gaussian_expectation(np.abs, 1.0, nodes=16, tol=1e-14, max_nodes=128)


class TestShallowPocket:
    def test_single_step_closed_form(self) -> None:
        gamma, tau = 0.05, 0.7
        expected = (1 + 2 * np.exp(-2 * gamma * tau)) / 3
        assert shallow_pocket_asf(gamma, [tau], 1) == pytest.approx(expected, abs=1e-14)

    def test_two_steps_characteristic_sum(self) -> None:
        gamma, taus = 0.2, [0.3, 0.5]
        expected = sum(
            np.exp(-gamma * abs(2 * s1 * taus[0] + 2 * s2 * taus[1]))
            for s1, s2 in itertools.product((-1, 0, 1), repeat=2)
        ) / 9
        assert shallow_pocket_asf(gamma, taus, 2) == pytest.approx(expected, abs=1e-14)

    def test_empty_sequence(self) -> None:
        assert shallow_pocket_asf(0.1, [0.2, 0.3], 0) == pytest.approx(1.0)

    def test_quadrature_agrees_loosely(self) -> None:
        taus = [0.03] * 3
        spectral = shallow_pocket_asf(0.01, taus, 3)
        quadrature = shallow_pocket_asf(0.01, taus, 3, method="quadrature", tol=1e-3)
        assert quadrature == pytest.approx(spectral, abs=1e-3)

    def test_argument_checks(self) -> None:
        with pytest.raises(ValueError, match="gamma"):
            shallow_pocket_asf(0.0, [0.1], 1)
        with pytest.raises(ValueError, match="dephasing times"):
            shallow_pocket_asf(0.1, [0.1], 2)
        with pytest.raises(ValueError, match="method"):
            shallow_pocket_asf(0.1, [0.1], 1, method="simpson")

    def test_negative_support_mass(self) -> None:
        assert negative_support_mass(0.1, []) == 0.0
        assert 0.0 < negative_support_mass(0.1, [1.0]) < 1.0
        assert negative_support_mass(0.1, [2.0]) > negative_support_mass(0.1, [1.0])

    def test_curves(self) -> None:
        taus = [0.4, 0.1, 0.25]
        curve = shallow_pocket_curve(0.1, taus)
        markov = shallow_pocket_markovian_curve(0.1, taus)
        assert list(curve.m_values) == [1, 2, 3]
        assert curve.values[0] == pytest.approx(markov.values[0], abs=1e-14)
        factors = (1 + 2 * np.exp(-0.2 * np.array(taus))) / 3
        assert markov.values == pytest.approx(np.cumprod(factors), abs=1e-14)
