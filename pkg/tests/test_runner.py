"""Tests for the Monte-Carlo runner in sim/runner.py."""

import numpy as np
import pytest

from nonmarkov_rb.analysis.fitting import fit_exponential
from nonmarkov_rb.config import Config
from nonmarkov_rb.core.random import SeededRng
from nonmarkov_rb.engine.analytical import analytical_curve, pattern_curve
from nonmarkov_rb.engine.curve import Engine
from nonmarkov_rb.noise.models import depolarizing_process, finite_memory_schedule, two_spin_process
from nonmarkov_rb.noise.process import NoiseProcess
from nonmarkov_rb.sim import runner
from nonmarkov_rb.sim.patterns import IdentityPattern
from nonmarkov_rb.sim.runner import (
    GateSource,
    RBRunConfig,
    run_interleaved_identity_scan,
    run_rb,
    sample_fidelity,
)


def _make_cfg(**overrides) -> RBRunConfig:
    params = {"m_values": range(1, 9), "samples_per_m": 4, "seed": 7}
    params.update(overrides)
    return RBRunConfig(**params)


class TestRBRunConfig:
    def test_normalizes_m_values(self) -> None:
        cfg = _make_cfg(m_values=[5, 1, 5, 3])
        assert cfg.m_values == (1, 3, 5)
        assert cfg.gate_source is GateSource.CLIFFORD24

    def test_rejects_bad_settings(self) -> None:
        with pytest.raises(ValueError, match="m_values"):
            _make_cfg(m_values=[0, 1])
        with pytest.raises(ValueError, match="samples_per_m"):
            _make_cfg(samples_per_m=0)
        with pytest.raises(ValueError, match="mutually exclusive"):
            _make_cfg(fixed_ids={1}, interleave_ids=1)

    def test_pattern(self) -> None:
        assert _make_cfg().pattern.is_empty
        assert _make_cfg(interleave_ids=2).pattern == IdentityPattern.interleave(2)
        assert _make_cfg(fixed_ids={1, 2}).pattern == IdentityPattern.explicit([1, 2])


class TestDeterminism:
    def test_same_seed_same_curve(self) -> None:
        process = two_spin_process()
        first = run_rb(process, _make_cfg())
        second = run_rb(process, _make_cfg())
        assert np.array_equal(first.values, second.values)
        assert np.array_equal(first.stderrs, second.stderrs)

    def test_threads_do_not_change_results(self) -> None:
        process = two_spin_process()
        serial = run_rb(process, _make_cfg(), threads=1)
        pooled = run_rb(process, _make_cfg(), threads=2)
        assert np.array_equal(serial.values, pooled.values)

    def test_config_sets_default_threads(self, monkeypatch) -> None:
        pool_sizes = []

        class RecordingPool:
            def __init__(self, max_workers: int) -> None:
                pool_sizes.append(max_workers)

            def __enter__(self):
                return self

            def __exit__(self, *exc) -> bool:
                return False

            def map(self, fn, items):
                return map(fn, items)

        class PooledConfig(Config):
            THREADS = 3

        monkeypatch.setattr(runner, "ProcessPoolExecutor", RecordingPool)
        process = two_spin_process()
        serial = run_rb(process, _make_cfg())
        assert pool_sizes == []
        pooled = run_rb(process, _make_cfg(), config=PooledConfig)
        assert pool_sizes == [3]
        assert np.array_equal(serial.values, pooled.values)
        run_interleaved_identity_scan(process, _make_cfg(), [IdentityPattern.none()], config=PooledConfig)
        assert pool_sizes == [3, 3]

    def test_seed_changes_samples(self) -> None:
        process = two_spin_process()
        assert not np.array_equal(run_rb(process, _make_cfg(seed=1)).values, run_rb(process, _make_cfg(seed=2)).values)

    def test_sample_depends_only_on_key(self) -> None:
        process = two_spin_process()
        rng = SeededRng(3).derive(4, 0)
        pattern = IdentityPattern.none()
        a = sample_fidelity(process, pattern, GateSource.CLIFFORD24, rng, 4)
        b = sample_fidelity(process, pattern, GateSource.CLIFFORD24, rng, 4)
        assert a == b


class TestAgainstAnalytical:
    def test_two_spin_within_three_stderr(self) -> None:
        process = two_spin_process()
        cfg = RBRunConfig(m_values=range(1, 51), samples_per_m=50, seed=2024)
        mc = run_rb(process, cfg)
        exact = analytical_curve(process, cfg.m_values)
        inside = np.abs(mc.values - exact.values) <= 3 * mc.stderrs
        assert inside.mean() >= 0.95

    @pytest.mark.parametrize("source", list(GateSource))
    def test_depolarizing_is_gate_independent(self, source: GateSource) -> None:
        process = depolarizing_process(0.97)
        mc = run_rb(process, _make_cfg(gate_source=source))
        exact = analytical_curve(process, mc.m_values)
        assert mc.values == pytest.approx(exact.values, abs=1e-12)

    def test_interleaved_depolarizing(self) -> None:
        process = depolarizing_process(0.97)
        pattern = IdentityPattern.interleave(2)
        mc = run_rb(process, _make_cfg(samples_per_m=2), pattern=pattern)
        exact = pattern_curve(process, mc.m_values, pattern)
        assert mc.values == pytest.approx(exact.values, abs=1e-12)

    def test_haar_agrees_with_clifford24(self) -> None:
        process = two_spin_process()
        cfg = _make_cfg(m_values=range(1, 21), samples_per_m=60, seed=5)
        clifford = run_rb(process, cfg)
        haar = run_rb(process, _make_cfg(m_values=range(1, 21), samples_per_m=60, seed=5, gate_source="haar"))
        exact = analytical_curve(process, cfg.m_values)
        assert (np.abs(haar.values - exact.values) <= 3 * haar.stderrs).mean() >= 0.9
        spread = 3 * np.sqrt(clifford.stderrs**2 + haar.stderrs**2)
        assert (np.abs(haar.values - clifford.values) <= spread).mean() >= 0.9

    @pytest.mark.parametrize("k", [1, 2])
    def test_interleaved_markovian_rate(self, k: int) -> None:
        cfg = _make_cfg(m_values=range(1, 21), samples_per_m=1)
        mc = run_rb(depolarizing_process(0.97), cfg, pattern=IdentityPattern.interleave(k))
        assert fit_exponential(mc).p == pytest.approx(0.97 ** (k + 1), abs=1e-8)

    def test_trace_preserving_noise_with_unit_povm(self) -> None:
        process = NoiseProcess(two_spin_process().rho0, finite_memory_schedule(), np.eye(2))
        mc = run_rb(process, _make_cfg(samples_per_m=5))
        assert mc.values == pytest.approx(np.ones(8), abs=1e-12)
        assert mc.stderrs == pytest.approx(np.zeros(8), abs=1e-12)


class TestStatistics:
    def test_stderr_halves_with_four_times_the_samples(self) -> None:
        process = two_spin_process()
        small = run_rb(process, _make_cfg(m_values=range(1, 21), samples_per_m=25, seed=9))
        large = run_rb(process, _make_cfg(m_values=range(1, 21), samples_per_m=100, seed=9))
        ratio = large.stderrs.sum() / small.stderrs.sum()
        assert 0.4 <= ratio <= 0.6


class TestCurveMetadata:
    def test_single_sample_has_no_stderr(self) -> None:
        curve = run_rb(two_spin_process(), _make_cfg(samples_per_m=1))
        assert not curve.has_stderr

    def test_metadata(self) -> None:
        curve = run_rb(two_spin_process(), _make_cfg(interleave_ids=1))
        assert curve.engine is Engine.MONTE_CARLO
        assert curve.seed == 7 and curve.samples == 4
        assert curve.extra == {"pattern": "interleave_1", "gate_source": "clifford24"}

    def test_scan_returns_one_curve_per_pattern(self) -> None:
        patterns = [IdentityPattern.prefix(k) for k in range(3)]
        curves = run_interleaved_identity_scan(two_spin_process(), _make_cfg(samples_per_m=2), patterns)
        assert [c.extra["pattern"] for c in curves] == ["none", "prefix_1", "prefix_2"]
