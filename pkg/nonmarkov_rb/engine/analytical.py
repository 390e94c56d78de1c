"""Closed-form average sequence fidelity for environment-correlated noise.

The engine carries two running operators through the sequence:

    X_n = [($_{Λ_n} − Θ_{Λ_n}) ⊗ 𝓘_S](X_{n−1}) / (d_S² − 1),   X_0 = ρ − ρ_E ⊗ I/d_S
    ε_n = Θ_{Λ_n}(ε_{n−1}),                                    ε_0 = ρ_E

and evaluates F_m = tr[(I_E ⊗ 𝓜) Λ_{m+1}(X_m + ε_m ⊗ I/d_S)]. Cost is linear
in m; no sum over gate sequences is ever formed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from tqdm import tqdm

from nonmarkov_rb.channels.env_maps import EnvMapKind, EnvSuperOp, extend_env_superop, theta_map
from nonmarkov_rb.channels.kraus import KrausChannel, TPFlag, apply_channel, compose
from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import partial_trace
from nonmarkov_rb.engine.curve import ASFCurve, Engine
from nonmarkov_rb.exceptions import NumericalError, StructureError
from nonmarkov_rb.noise.process import NoiseProcess, StepKind
from nonmarkov_rb.sim.patterns import IdentityPattern

logger = logging.getLogger(__name__)


@dataclass
class RunningOperators:
    """The (X, ε) pair after some number of randomized steps."""

    x: np.ndarray
    eps: np.ndarray
    d_E: int
    d_S: int

    @classmethod
    def start(cls, rho: np.ndarray, d_E: int, d_S: int) -> RunningOperators:
        rho_E = partial_trace(rho, (d_E, d_S), keep="E")
        x = rho - np.kron(rho_E, np.eye(d_S) / d_S)
        return cls(x=x, eps=rho_E, d_E=d_E, d_S=d_S)

    def advance(self, ch: KrausChannel) -> None:
        """Absorb one randomized step with noise ``ch``."""
        op = EnvSuperOp(EnvMapKind.DOLLAR_MINUS_THETA, ch, self.d_S, self.d_E)
        self.x = extend_env_superop(op, self.x) / (self.d_S**2 - 1)
        self.eps = theta_map(ch, self.eps)
        if ch.tp_flag is TPFlag.PRESERVING:
            trace = np.trace(self.eps).real
            if not -Config.ASF_UPPER_SLACK <= trace <= 1 + Config.ASF_UPPER_SLACK:
                raise NumericalError(f"Environment operator trace {trace:.12g} left [0, 1] under TP noise")

    def copy(self) -> RunningOperators:
        return RunningOperators(self.x.copy(), self.eps.copy(), self.d_E, self.d_S)

    def final_operator(self) -> np.ndarray:
        """X + ε ⊗ I/d_S, the operator the undo step acts on."""
        return self.x + np.kron(self.eps, np.eye(self.d_S) / self.d_S)


def survival(ops: RunningOperators, undo: KrausChannel, povm: np.ndarray) -> float:
    final = apply_channel(undo, ops.final_operator())
    meas = np.kron(np.eye(ops.d_E), povm)
    return float(np.real(np.trace(meas @ final)))


def _warn_if_unbounded(value: float, m: int, config: Config = Config) -> None:
    if not -config.ASF_UPPER_SLACK <= value <= 1 + config.ASF_UPPER_SLACK:
        logger.warning(f"ASF at m={m} is {value:.12g}, outside [0, 1]")


def evaluate_sequence(
    process: NoiseProcess,
    rho: np.ndarray,
    channels: Sequence[KrausChannel],
    undo: KrausChannel,
) -> float:
    """Theorem evaluation for an explicit list of randomized-step channels."""
    ops = RunningOperators.start(rho, process.d_E, process.d_S)
    for ch in channels:
        ops.advance(ch)
    return survival(ops, undo, process.povm)


def asf_analytical(process: NoiseProcess, m: int) -> float:
    """F_m for ``process``; steps 1..m+1 must be defined."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    channels = [process.joint_channel(n) for n in range(1, m + 1)]
    value = evaluate_sequence(process, process.rho0.matrix, channels, process.joint_channel(m + 1))
    _warn_if_unbounded(value, m)
    return value


def analytical_curve(
    process: NoiseProcess,
    m_values: Iterable[int],
    show_progress: bool = False,
    config: Config = Config,
) -> ASFCurve:
    """ASF at every requested m from one pass over the running operators."""
    m_values = sorted(int(m) for m in m_values)
    if not m_values or m_values[0] < 0:
        raise ValueError("m_values must be non-empty and non-negative")
    wanted = set(m_values)
    ops = RunningOperators.start(process.rho0.matrix, process.d_E, process.d_S)
    values = {}
    if 0 in wanted:
        values[0] = survival(ops, process.joint_channel(1), process.povm)
    for n in tqdm(range(1, m_values[-1] + 1), desc=f"ASF {process.model_id}", disable=not show_progress):
        ops.advance(process.joint_channel(n))
        if n in wanted:
            values[n] = survival(ops, process.joint_channel(n + 1), process.povm)
            _warn_if_unbounded(values[n], n, config)
    return ASFCurve.from_arrays(
        m_values, [values[m] for m in m_values], model_id=process.model_id, engine=Engine.ANALYTICAL
    )


def asf_markovian(p_list: Sequence[float], A: float, B: float) -> ASFCurve:
    """F_m = (Π_{n≤m} p_n)·A + B for m = 1..len(p_list)."""
    p = np.asarray(p_list, dtype=float)
    values = np.cumprod(p) * A + B
    return ASFCurve.from_arrays(
        np.arange(1, len(p) + 1), values, model_id="markovian", engine=Engine.ANALYTICAL,
        extra={"A": A, "B": B},
    )


def markovian_constants(process: NoiseProcess, m: int) -> tuple[float, float]:
    """A = tr[𝓜 Λ_{m+1}(ρ_S − I/d)], B = tr[𝓜 Λ_{m+1}(I/d)] for a system-only undo step."""
    step = process.step(m + 1)
    if step.kind is not StepKind.SYSTEM_ONLY:
        raise StructureError(f"Step {m + 1} is {step.kind.value}; Markovian constants need a system-only channel")
    d = process.d_S
    maximally_mixed = np.eye(d) / d
    a = np.trace(process.povm @ apply_channel(step.channel, process.rho0.rho_S - maximally_mixed)).real
    b = np.trace(process.povm @ apply_channel(step.channel, maximally_mixed)).real
    return float(a), float(b)


# -- Identity-fixed protocols --------------------------------------------------

def _fold_fixed_steps(
    process: NoiseProcess,
    length: int,
    fixed: frozenset[int],
) -> tuple[np.ndarray, list[KrausChannel]]:
    """Absorb identity-gate steps into the initial state or the preceding channel."""
    rho = process.rho0.matrix
    channels: list[KrausChannel] = []
    for n in range(1, length + 1):
        ch = process.joint_channel(n)
        if n not in fixed:
            channels.append(ch)
        elif channels:
            channels[-1] = compose(ch, channels[-1])
        else:
            rho = apply_channel(ch, rho)
    return rho, channels


def asf_with_identities(process: NoiseProcess, m: int, fixed_ids: Iterable[int]) -> float:
    """ASF when the gates at ``fixed_ids`` are the identity.

    Fixed steps still apply their noise. Leading fixed steps act on the
    initial state and later ones compose with the last randomized step, so
    the theorem evaluator only sees the randomized steps.
    """
    fixed = frozenset(int(i) for i in fixed_ids)
    if any(i < 1 or i > m for i in fixed):
        raise ValueError(f"fixed_ids must lie in 1..{m}, got {sorted(fixed)}")
    if len(fixed) == m:
        raise StructureError("Every gate is fixed; no randomization left")
    rho, channels = _fold_fixed_steps(process, m, fixed)
    return evaluate_sequence(process, rho, channels, process.joint_channel(m + 1))


def pattern_curve(
    process: NoiseProcess,
    m_values: Iterable[int],
    pattern: IdentityPattern,
    show_progress: bool = False,
) -> ASFCurve:
    """Analytical ASF under an identity pattern.

    ``m`` indexes the pattern's own axis: total sequence length for prefix,
    periodic and explicit patterns, random gates for interleaving.
    """
    m_values = sorted(int(m) for m in m_values)
    if pattern.is_empty:
        curve = analytical_curve(process, m_values, show_progress)
        return ASFCurve(curve.points, model_id=process.model_id, extra={"pattern": pattern.label})

    values = []
    kept = []
    for m in tqdm(m_values, desc=f"ASF {pattern.label}", disable=not show_progress):
        length = pattern.sequence_length(m)
        fixed = pattern.fixed_ids(m)
        if len(fixed) >= length:
            logger.debug(f"Skipping m={m} for pattern {pattern.label}: every gate is fixed")
            continue
        kept.append(m)
        values.append(asf_with_identities(process, length, fixed))
    return ASFCurve.from_arrays(
        kept, values, model_id=process.model_id, engine=Engine.ANALYTICAL,
        identity_pattern=pattern.recorded_ids(max(m_values)), extra={"pattern": pattern.label},
    )
