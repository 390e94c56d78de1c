"""Experiment configuration: JSON document → validated frozen dataclasses.

``ExperimentConfig.to_dict`` emits the canonical form (every default filled
in, sequence lengths expanded); parsing that form yields an equal config.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from nonmarkov_rb.channels.kraus import KrausChannel
from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import DensityOperator, projector
from nonmarkov_rb.exceptions import ConfigError, NonMarkovRBError
from nonmarkov_rb.noise import models
from nonmarkov_rb.noise.hamiltonians import ising_chain_hamiltonian, two_spin_hamiltonian, xx_spin_hamiltonian
from nonmarkov_rb.noise.process import ConstantSchedule, NoiseProcess, SpamSpec, StepNoise, apply_spam
from nonmarkov_rb.sim.runner import GateSource, RBRunConfig

logger = logging.getLogger(__name__)

ENGINES = ("analytical", "monte-carlo", "markovianized", "oracle")
CLASSICAL_MODELS = ("classical_dephasing", "shallow_pocket")

MODEL_PARAMS: dict[str, dict[str, Any]] = {
    "two_spin": {"J": Config.TWO_SPIN_J, "h_x": Config.TWO_SPIN_HX, "h_y": Config.TWO_SPIN_HY, "delta": Config.TWO_SPIN_DELTA},
    "xx_spin": {"J_x": Config.XX_JX, "J_y": Config.XX_JY, "delta": Config.TWO_SPIN_DELTA},
    "ising_chain": {"J": Config.ISING_J, "h_x": Config.ISING_HX, "h_y": Config.ISING_HY, "delta": Config.TWO_SPIN_DELTA},
    "finite_memory": {
        "ell": Config.FINITE_MEMORY_ELL, "delta": Config.FINITE_MEMORY_DELTA,
        "delta_M_factor": Config.DELTA_M_FACTOR, "J": Config.TWO_SPIN_J,
        "h_x": Config.TWO_SPIN_HX, "h_y": Config.TWO_SPIN_HY, "markov_branch": "markovianized",
    },
    "depolarizing": {"p": 0.99},
    "custom_kraus": {"kind": "joint", "channel": None},
    "classical_dephasing": {"sigma": 0.015, "mode": "markovian"},
    "shallow_pocket": {"gamma": 0.01, "tau": 0.03, "taus": None, "method": "spectral"},
}


# -- Field helpers -------------------------------------------------------------

def _require(data: dict, key: str, path: str) -> Any:
    if key not in data:
        raise ConfigError("missing required field", f"{path}.{key}" if path else key)
    return data[key]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    return float(value)


def _integer(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", path)
    return value


def _check_keys(data: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown}", path or "<root>")


def _complex_matrix(value: Any, path: str) -> np.ndarray:
    try:
        raw = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected rows of [re, im] pairs: {exc}", path) from exc
    if raw.ndim != 3 or raw.shape[-1] != 2:
        raise ConfigError(f"expected rows of [re, im] pairs, got shape {raw.shape}", path)
    return raw[..., 0] + 1j * raw[..., 1]


def _matrix_payload(matrix: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


# -- Sections ------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Any, path: str = "model") -> ModelSpec:
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path)
        _check_keys(data, {"model", "params"}, path)
        name = _require(data, "model", path)
        if name not in MODEL_PARAMS:
            raise ConfigError(f"unknown model {name!r}; expected one of {sorted(MODEL_PARAMS)}", f"{path}.model")
        given = data.get("params", {}) or {}
        if not isinstance(given, dict):
            raise ConfigError("expected an object", f"{path}.params")
        _check_keys(given, set(MODEL_PARAMS[name]), f"{path}.params")
        params = {**MODEL_PARAMS[name], **given}
        if name == "custom_kraus" and params["channel"] is None:
            raise ConfigError("custom_kraus needs a channel", f"{path}.params.channel")
        return cls(name, params)

    def to_dict(self) -> dict:
        return {"model": self.name, "params": dict(self.params)}

    @property
    def is_classical(self) -> bool:
        return self.name in CLASSICAL_MODELS


@dataclass(frozen=True)
class AnalysisConfig:
    fit_window: tuple[int, int] | None = None
    q_values: tuple = (1, 2, "inf")
    scan_max_k: int | None = None
    rel_tol: float = Config.MEMORY_REL_TOL
    interleave_depths: tuple[int, ...] = (1, 2)
    residual_threshold: float | None = None
    baseline_constraint: str = "A_eq_B"

    @classmethod
    def from_dict(cls, data: Any, path: str = "analysis") -> AnalysisConfig:
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path)
        _check_keys(data, set(cls.__dataclass_fields__), path)
        window = data.get("fit_window")
        if window is not None:
            if not isinstance(window, list) or len(window) != 2:
                raise ConfigError("expected [m_min, m_max]", f"{path}.fit_window")
            window = (_integer(window[0], f"{path}.fit_window[0]", 0), _integer(window[1], f"{path}.fit_window[1]", 0))
            if window[0] >= window[1]:
                raise ConfigError("m_min must be below m_max", f"{path}.fit_window")
        q_values = tuple(data.get("q_values", cls.q_values))
        for i, q in enumerate(q_values):
            if q != "inf":
                if _number(q, f"{path}.q_values[{i}]") <= 0:
                    raise ConfigError("q must be positive", f"{path}.q_values[{i}]")
        scan = data.get("scan_max_k")
        depths = tuple(
            _integer(d, f"{path}.interleave_depths[{i}]", 1)
            for i, d in enumerate(data.get("interleave_depths", cls.interleave_depths))
        )
        threshold = data.get("residual_threshold")
        constraint = data.get("baseline_constraint", cls.baseline_constraint)
        if constraint not in ("A_eq_B", "A_plus_B_eq_1"):
            raise ConfigError(f"unknown constraint {constraint!r}", f"{path}.baseline_constraint")
        return cls(
            fit_window=window,
            q_values=q_values,
            scan_max_k=None if scan is None else _integer(scan, f"{path}.scan_max_k", 1),
            rel_tol=_number(data.get("rel_tol", cls.rel_tol), f"{path}.rel_tol"),
            interleave_depths=depths,
            residual_threshold=None if threshold is None else _number(threshold, f"{path}.residual_threshold"),
            baseline_constraint=constraint,
        )

    def to_dict(self) -> dict:
        return {
            "fit_window": None if self.fit_window is None else list(self.fit_window),
            "q_values": list(self.q_values),
            "scan_max_k": self.scan_max_k,
            "rel_tol": self.rel_tol,
            "interleave_depths": list(self.interleave_depths),
            "residual_threshold": self.residual_threshold,
            "baseline_constraint": self.baseline_constraint,
        }


@dataclass(frozen=True)
class OutputConfig:
    path: str = Config.OUTPUT_DIR
    format: str = "csv"

    @classmethod
    def from_dict(cls, data: Any, path: str = "output") -> OutputConfig:
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path)
        _check_keys(data, {"path", "format"}, path)
        fmt = data.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}", f"{path}.format")
        return cls(str(data.get("path", Config.OUTPUT_DIR)), fmt)

    def to_dict(self) -> dict:
        return {"path": self.path, "format": self.format}


def _parse_m_values(value: Any, path: str) -> tuple[int, ...]:
    if isinstance(value, dict):
        _check_keys(value, {"start", "stop", "step"}, path)
        start = _integer(_require(value, "start", path), f"{path}.start", 1)
        stop = _integer(_require(value, "stop", path), f"{path}.stop", start)
        step = _integer(value.get("step", 1), f"{path}.step", 1)
        return tuple(range(start, stop + 1, step))
    if isinstance(value, list) and value:
        return tuple(_integer(v, f"{path}[{i}]", 1) for i, v in enumerate(value))
    raise ConfigError("expected a non-empty list or {start, stop[, step]}", path)


def _parse_run(data: Any, path: str = "run") -> RBRunConfig:
    if not isinstance(data, dict):
        raise ConfigError("expected an object", path)
    _check_keys(data, {"m_values", "samples_per_m", "gate_source", "fixed_ids", "interleave_ids", "seed"}, path)
    m_values = _parse_m_values(_require(data, "m_values", path), f"{path}.m_values")
    gate_source = data.get("gate_source", GateSource.CLIFFORD24.value)
    if gate_source not in {g.value for g in GateSource}:
        raise ConfigError(f"unknown gate source {gate_source!r}", f"{path}.gate_source")
    interleave = data.get("interleave_ids")
    fixed = data.get("fixed_ids", []) or []
    if fixed and interleave is not None:
        raise ConfigError("fixed_ids and interleave_ids are mutually exclusive", path)
    seed = _integer(data.get("seed", Config.DEFAULT_SEED), f"{path}.seed", 0)
    if seed >= 2**64:
        raise ConfigError("seed must fit in 64 bits", f"{path}.seed")
    return RBRunConfig(
        m_values=m_values,
        samples_per_m=_integer(data.get("samples_per_m", Config.SAMPLES_PER_M), f"{path}.samples_per_m", 1),
        gate_source=GateSource(gate_source),
        fixed_ids=frozenset(_integer(v, f"{path}.fixed_ids[{i}]", 1) for i, v in enumerate(fixed)),
        interleave_ids=None if interleave is None else _integer(interleave, f"{path}.interleave_ids", 0),
        seed=seed,
    )


def _run_to_dict(run: RBRunConfig) -> dict:
    return {
        "m_values": list(run.m_values),
        "samples_per_m": run.samples_per_m,
        "gate_source": run.gate_source.value,
        "fixed_ids": sorted(run.fixed_ids),
        "interleave_ids": run.interleave_ids,
        "seed": run.seed,
    }


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    run: RBRunConfig
    system_qubits: int = 1
    env_qubits: int = 1
    rho0: Any = "zeros"
    povm: Any = "proj0"
    spam: dict | None = None
    engines: tuple[str, ...] = ("analytical",)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def d_S(self) -> int:
        return 2**self.system_qubits

    @property
    def d_E(self) -> int:
        return 2**self.env_qubits

    @classmethod
    def from_dict(cls, data: Any) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        _check_keys(data, set(cls.__dataclass_fields__), "")
        model = ModelSpec.from_dict(_require(data, "model", ""))
        system_qubits = _integer(data.get("system_qubits", 1), "system_qubits", 1)
        if system_qubits != 1:
            raise ConfigError("only single-qubit systems are supported", "system_qubits")
        env_qubits = _integer(data.get("env_qubits", 1), "env_qubits", 0)
        if system_qubits + env_qubits > 6:
            raise ConfigError("at most 6 qubits in total", "env_qubits")
        engines = data.get("engines", ["analytical"])
        if not isinstance(engines, list) or not engines:
            raise ConfigError("expected a non-empty list", "engines")
        for i, engine in enumerate(engines):
            if engine not in ENGINES:
                raise ConfigError(f"unknown engine {engine!r}; expected one of {list(ENGINES)}", f"engines[{i}]")
        rho0 = data.get("rho0", "zeros")
        if rho0 != "zeros":
            rho0 = _matrix_payload(_complex_matrix(rho0, "rho0"))
        povm = data.get("povm", "proj0")
        if povm != "proj0":
            povm = _matrix_payload(_complex_matrix(povm, "povm"))
        spam = data.get("spam")
        if spam is not None and not isinstance(spam, dict):
            raise ConfigError("expected an object or null", "spam")
        return cls(
            model=model,
            run=_parse_run(_require(data, "run", "")),
            system_qubits=system_qubits,
            env_qubits=env_qubits,
            rho0=rho0,
            povm=povm,
            spam=spam,
            engines=tuple(dict.fromkeys(engines)),
            analysis=AnalysisConfig.from_dict(data.get("analysis")),
            output=OutputConfig.from_dict(data.get("output")),
        )

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "system_qubits": self.system_qubits,
            "env_qubits": self.env_qubits,
            "rho0": self.rho0,
            "povm": self.povm,
            "spam": self.spam,
            "run": _run_to_dict(self.run),
            "engines": list(self.engines),
            "analysis": self.analysis.to_dict(),
            "output": self.output.to_dict(),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        """Git blob hash of the canonical JSON."""
        body = self.canonical_json().encode("utf-8")
        return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, run=_parse_run({**_run_to_dict(self.run), "seed": seed}))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(data)


# -- Building the process ------------------------------------------------------

def model_hamiltonian(spec: ModelSpec, env_qubits: int) -> np.ndarray | None:
    p = spec.params
    if spec.name in ("two_spin", "finite_memory"):
        return two_spin_hamiltonian(p["J"], p["h_x"], p["h_y"])
    if spec.name == "xx_spin":
        return xx_spin_hamiltonian(p["J_x"], p["J_y"])
    if spec.name == "ising_chain":
        return ising_chain_hamiltonian(env_qubits + 1, p["J"], p["h_x"], p["h_y"])
    return None


def _base_process(cfg: ExperimentConfig) -> NoiseProcess:
    spec = cfg.model
    p = spec.params
    if spec.name in ("two_spin", "xx_spin", "finite_memory") and cfg.env_qubits != 1:
        raise ConfigError(f"{spec.name} couples exactly one environment qubit", "env_qubits")
    if spec.name == "two_spin":
        return models.two_spin_process(p["J"], p["h_x"], p["h_y"], p["delta"])
    if spec.name == "xx_spin":
        return models.xx_spin_process(p["J_x"], p["J_y"], p["delta"])
    if spec.name == "ising_chain":
        if cfg.env_qubits < 1:
            raise ConfigError("ising_chain needs at least one environment qubit", "env_qubits")
        return models.ising_chain_process(cfg.env_qubits, p["J"], p["h_x"], p["h_y"], p["delta"])
    if spec.name == "finite_memory":
        return models.finite_memory_process(
            int(p["ell"]), p["delta"], p["delta_M_factor"], p["J"], p["h_x"], p["h_y"], p["markov_branch"]
        )
    if spec.name == "depolarizing":
        return models.depolarizing_process(p["p"], cfg.d_E)
    if spec.name == "custom_kraus":
        channel = KrausChannel.from_dict(p["channel"])
        if p["kind"] == "system_only":
            step = StepNoise.system_only(channel)
        elif p["kind"] == "joint":
            step = StepNoise.joint(channel)
        else:
            raise ConfigError(f"kind must be 'joint' or 'system_only', got {p['kind']!r}", "model.params.kind")
        return NoiseProcess(DensityOperator.zeros(cfg.d_S, cfg.d_E), ConstantSchedule(step), projector(0, cfg.d_S), "custom_kraus")
    raise ConfigError(f"model {spec.name!r} has no quantum noise process", "model.model")


def _spam_spec(cfg: ExperimentConfig) -> SpamSpec:
    spam = cfg.spam or {}
    _check_keys(spam, {"preset", "prep", "meas_rotation"}, "spam")
    h = model_hamiltonian(cfg.model, cfg.env_qubits)
    preset = spam.get("preset")
    if preset is not None:
        if h is None:
            raise ConfigError("SPAM presets need a Hamiltonian model", "spam.preset")
        if preset == "mild":
            return models.mild_spam(h)
        if preset == "severe":
            return models.severe_spam(h)
        raise ConfigError(f"unknown preset {preset!r}", "spam.preset")

    prep = None
    prep_data = spam.get("prep")
    if prep_data is not None:
        kind = _require(prep_data, "kind", "spam.prep")
        if kind == "model_unitary":
            if h is None:
                raise ConfigError("model_unitary preparation needs a Hamiltonian model", "spam.prep.kind")
            prep = models.joint_unitary_prep(h, _number(_require(prep_data, "delta", "spam.prep"), "spam.prep.delta"))
        elif kind == "system_rotation_x":
            prep = models.system_rotation_prep(_number(_require(prep_data, "gamma", "spam.prep"), "spam.prep.gamma"))
        elif kind == "kraus":
            prep = KrausChannel.from_dict(_require(prep_data, "channel", "spam.prep"))
        else:
            raise ConfigError(f"unknown preparation kind {kind!r}", "spam.prep.kind")
    rotation = spam.get("meas_rotation")
    return SpamSpec(prep, None if rotation is None else _number(rotation, "spam.meas_rotation"))


def build_process(cfg: ExperimentConfig) -> NoiseProcess:
    """Noise process described by ``cfg`` with initial state, POVM and SPAM applied."""
    try:
        process = _base_process(cfg)
        if cfg.rho0 != "zeros":
            rho = DensityOperator(_complex_matrix(cfg.rho0, "rho0"), cfg.d_S, cfg.d_E)
            process = NoiseProcess(rho, process.steps, process.povm, process.model_id)
        if cfg.povm != "proj0":
            process = NoiseProcess(process.rho0, process.steps, _complex_matrix(cfg.povm, "povm"), process.model_id)
        if cfg.spam:
            process = apply_spam(process, _spam_spec(cfg))
    except ConfigError:
        raise
    except NonMarkovRBError as exc:
        raise ConfigError(str(exc)) from exc
    logger.info(f"Built {process.model_id} process (d_S={process.d_S}, d_E={process.d_E})")
    return process
