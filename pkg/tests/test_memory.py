"""Tests for analysis/memory.py and analysis/coherence.py."""

import numpy as np
import pytest

from nonmarkov_rb.analysis.coherence import (
    CoherenceVerdict,
    coherence_diagnosis,
    default_residual_threshold,
    excess_residual,
)
from nonmarkov_rb.analysis.fitting import ExpFit, fit_exponential
from nonmarkov_rb.analysis.memory import BaselineConstraint, markovianized_baseline, memory_length_scan
from nonmarkov_rb.config import Config
from nonmarkov_rb.engine.analytical import analytical_curve, pattern_curve
from nonmarkov_rb.engine.curve import ASFCurve
from nonmarkov_rb.noise.models import depolarizing_process, finite_memory_process, markovianized_process, two_spin_process
from nonmarkov_rb.sim.patterns import IdentityPattern
from nonmarkov_rb.sim.runner import RBRunConfig, run_interleaved_identity_scan


def _prefix_curves(process, m_values, max_k: int) -> dict[tuple[int, ...], ASFCurve]:
    return {
        tuple(range(1, k + 1)): pattern_curve(process, m_values, IdentityPattern.prefix(k))
        for k in range(max_k + 1)
    }


def _sampled_prefix_curves(process, cfg: RBRunConfig, max_k: int) -> dict[tuple[int, ...], ASFCurve]:
    patterns = [IdentityPattern.prefix(k) for k in range(max_k + 1)]
    curves = run_interleaved_identity_scan(process, cfg, patterns, threads=2)
    return {tuple(range(1, k + 1)): curve for k, curve in enumerate(curves)}


def _interleave_scan(process, m_values, depths=(1, 2)) -> list[ASFCurve]:
    patterns = [IdentityPattern.none()] + [IdentityPattern.interleave(k) for k in depths]
    return [pattern_curve(process, m_values, p) for p in patterns]


def _make_fit(A: float, p: float, B: float) -> ExpFit:
    return ExpFit(A, p, B, 0.0, 0.0, True, (1, 10))


# -- Memory-length scan --------------------------------------------------------

class TestMemoryScan:
    def test_finite_memory_model(self) -> None:
        process = finite_memory_process()
        m_values = range(1, 31)
        tail = fit_exponential(analytical_curve(process, m_values), (12, 30))
        assert tail.A == pytest.approx(0.7847, abs=0.01)
        assert tail.p == pytest.approx(0.9325, abs=0.01)
        assert tail.B == pytest.approx(0.4915, abs=0.01)

        report = memory_length_scan(_prefix_curves(process, m_values, 12), (12, 30), rel_tol=0.01)
        assert report.ell_hat == 9
        assert report.p_matched == pytest.approx(0.9278, abs=0.005)
        assert report.matched_pattern == tuple(range(1, 9))
        assert report.converged

    def test_sampled_finite_memory_model(self) -> None:
        cfg = RBRunConfig(m_values=range(1, 31), samples_per_m=150, seed=99)
        curves = _sampled_prefix_curves(finite_memory_process(), cfg, 10)
        report = memory_length_scan(curves, (12, 30))
        assert report.p_reference == pytest.approx(0.9325, abs=0.03)
        assert report.p_matched == pytest.approx(0.9278, abs=0.03)
        assert report.converged
        assert report.ell_hat > 1

    def test_markovian_model_has_unit_memory(self) -> None:
        process = depolarizing_process(0.98)
        report = memory_length_scan(_prefix_curves(process, range(1, 21), 4))
        assert report.ell_hat == 1
        assert report.matched_pattern == ()
        assert report.p_reference == pytest.approx(0.98, abs=1e-8)

    def test_report_serializes(self) -> None:
        report = memory_length_scan(_prefix_curves(depolarizing_process(0.98), range(1, 21), 2), (5, 20))
        data = report.to_dict()
        assert data["reference_window"] == [5, 20]
        assert [row["k"] for row in data["candidates"]] == [0, 1, 2]

    def test_needs_unmodified_curve(self) -> None:
        curves = _prefix_curves(depolarizing_process(0.98), range(1, 21), 2)
        del curves[()]
        with pytest.raises(ValueError, match="unmodified curve"):
            memory_length_scan(curves)

    def test_patterns_must_be_prefixes(self) -> None:
        curve = analytical_curve(depolarizing_process(0.98), range(1, 21))
        with pytest.raises(ValueError, match="prefixes"):
            memory_length_scan({(): curve, (2, 3): curve})

    def test_config_sets_tolerance(self) -> None:
        class LooseConfig(Config):
            MEMORY_REL_TOL = 0.5

        curves = _prefix_curves(finite_memory_process(), range(1, 31), 12)
        report = memory_length_scan(curves, (12, 30), config=LooseConfig)
        assert report.tolerance_used == 0.5
        assert report.ell_hat == 1


class TestBaseline:
    def test_a_eq_b(self) -> None:
        curve = markovianized_baseline(_make_fit(0.6, 0.9, 0.45), BaselineConstraint.A_EQ_B, [0, 1, 2])
        assert curve.values[0] == pytest.approx(1.0)
        assert curve.extra["A"] == pytest.approx(0.55)
        assert curve.extra["B"] == pytest.approx(0.45)
        assert curve.values[2] == pytest.approx(0.55 * 0.81 + 0.45)

    def test_a_plus_b_eq_1(self) -> None:
        curve = markovianized_baseline(_make_fit(0.6, 0.9, 0.45), "A_plus_B_eq_1", [1])
        assert curve.extra["B"] == pytest.approx(0.4)

    def test_custom(self) -> None:
        curve = markovianized_baseline(_make_fit(0.6, 0.9, 0.45), "custom", [1], A=0.3, B=0.5)
        assert curve.values[0] == pytest.approx(0.3 * 0.9 + 0.5)
        with pytest.raises(ValueError, match="both A and B"):
            markovianized_baseline(_make_fit(0.6, 0.9, 0.45), "custom", [1], A=0.3)


# -- Coherence diagnosis -------------------------------------------------------

class TestCoherence:
    def test_two_spin_is_coherent(self) -> None:
        process = two_spin_process()
        m_values = range(1, 41)
        threshold = default_residual_threshold(analytical_curve(markovianized_process(process), m_values))
        assert threshold == pytest.approx(1e-3)
        assert coherence_diagnosis(_interleave_scan(process, m_values), threshold) is CoherenceVerdict.COHERENT

    def test_depolarizing_is_dissipative(self) -> None:
        process = depolarizing_process(0.97)
        m_values = range(1, 41)
        threshold = default_residual_threshold(analytical_curve(process, m_values))
        assert coherence_diagnosis(_interleave_scan(process, m_values), threshold) is CoherenceVerdict.DISSIPATIVE

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_sampled_verdict_is_stable(self, seed: int) -> None:
        process = depolarizing_process(0.97)
        cfg = RBRunConfig(m_values=range(1, 21), samples_per_m=3, seed=seed)
        patterns = [IdentityPattern.none(), IdentityPattern.interleave(1), IdentityPattern.interleave(2)]
        scan = run_interleaved_identity_scan(process, cfg, patterns)
        assert coherence_diagnosis(scan, 1e-3) is CoherenceVerdict.DISSIPATIVE

    def test_baseline_need_not_clear_threshold(self) -> None:
        m = np.arange(1, 21)
        smooth = 0.5 * 0.9**m + 0.5
        wiggly = smooth + 0.01 * (-1.0) ** m
        scan = [ASFCurve.from_arrays(m, smooth), ASFCurve.from_arrays(m, wiggly), ASFCurve.from_arrays(m, wiggly)]
        assert excess_residual(scan[0]) < 1e-3
        assert coherence_diagnosis(scan, 1e-3) is CoherenceVerdict.COHERENT

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_sampled_two_spin_is_coherent(self, seed: int) -> None:
        process = two_spin_process()
        cfg = RBRunConfig(m_values=range(1, 41), samples_per_m=200, seed=seed)
        patterns = [IdentityPattern.none(), IdentityPattern.interleave(1), IdentityPattern.interleave(2)]
        scan = run_interleaved_identity_scan(process, cfg, patterns, threads=2)
        threshold = default_residual_threshold(analytical_curve(markovianized_process(process), cfg.m_values))
        assert coherence_diagnosis(scan, threshold) is CoherenceVerdict.COHERENT

    def test_needs_three_curves(self) -> None:
        scan = _interleave_scan(two_spin_process(), range(1, 21), depths=(1,))
        assert coherence_diagnosis(scan, 1e-3) is CoherenceVerdict.INCONCLUSIVE

    def test_stderr_discounts_residual(self) -> None:
        m = np.arange(1, 21)
        values = 0.5 * 0.9**m + 0.5 + 0.002 * (-1.0) ** m
        bare = ASFCurve.from_arrays(m, values)
        sampled = ASFCurve.from_arrays(m, values, np.full(20, 0.01), engine="monte-carlo")
        assert excess_residual(bare) > 1e-3
        assert excess_residual(sampled) == 0.0

    def test_config_sets_stderr_discount(self) -> None:
        class NoDiscountConfig(Config):
            COHERENCE_STDERR_MULTIPLE = 0.0

        m = np.arange(1, 21)
        values = 0.5 * 0.9**m + 0.5 + 0.002 * (-1.0) ** m
        bare = ASFCurve.from_arrays(m, values)
        sampled = ASFCurve.from_arrays(m, values, np.full(20, 0.01), engine="monte-carlo")
        assert excess_residual(sampled, config=NoDiscountConfig) == pytest.approx(excess_residual(bare), abs=1e-6)

    def test_config_sets_threshold_floor(self) -> None:
        class HighFloorConfig(Config):
            COHERENCE_RESIDUAL_FLOOR = 0.05

        exact = analytical_curve(depolarizing_process(0.97), range(1, 21))
        assert default_residual_threshold(exact) == 1e-3
        assert default_residual_threshold(exact, config=HighFloorConfig) == 0.05
