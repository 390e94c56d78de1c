"""Closed forms for noise that is non-Markovian only over a finite block of steps.

Each evaluator checks that the schedule has the corollary's shape, then
splits the ASF into the term carried by the correlated part X and the term
carried by the environment operator ε. They agree with ``asf_analytical`` on
the same schedule.
"""

from __future__ import annotations

import logging

import numpy as np

from nonmarkov_rb.channels.kraus import KrausChannel, TPFlag, apply_channel
from nonmarkov_rb.channels.markov import noise_strength
from nonmarkov_rb.core.linalg import check_state, partial_trace
from nonmarkov_rb.engine.analytical import RunningOperators, survival
from nonmarkov_rb.exceptions import StructureError
from nonmarkov_rb.noise.process import NoiseProcess, OverrideSchedule, StepKind, StepNoise

logger = logging.getLogger(__name__)


def _check_range(ell: int, m: int) -> None:
    if not 1 <= ell < m:
        raise StructureError(f"Corollaries need 1 <= ell < m, got ell={ell}, m={m}")


def _markovian_channel(process: NoiseProcess, n: int) -> KrausChannel:
    step = process.step(n)
    if step.kind is not StepKind.SYSTEM_ONLY:
        raise StructureError(f"Step {n} must be system-only, got {step.kind.value}")
    if not step.channel.is_trace_preserving():
        raise StructureError(f"Step {n} must be trace preserving")
    return step.channel


def _split(
    ops: RunningOperators,
    process: NoiseProcess,
    first: int,
    m: int,
) -> tuple[float, float]:
    """Run steps first..m from ``ops`` and return the (X-term, ε-term) of the survival."""
    x_part = RunningOperators(ops.x, np.zeros_like(ops.eps), ops.d_E, ops.d_S)
    eps_part = RunningOperators(np.zeros_like(ops.x), ops.eps, ops.d_E, ops.d_S)
    undo = process.joint_channel(m + 1)
    for n in range(first, m + 1):
        ch = process.joint_channel(n)
        x_part.advance(ch)
        eps_part.advance(ch)
    return survival(x_part, undo, process.povm), survival(eps_part, undo, process.povm)


def asf_corollary_initial(process: NoiseProcess, ell: int, m: int) -> float:
    """Correlated noise on steps 1..ℓ, Markovian TP noise from ℓ+1 onwards.

    F_m = p_{ℓ+1}⋯p_m · tr[𝓜 Λ_{m+1}(tr_E 𝒜_ℓ(ρ))] + tr[ℬ_ℓ(ρ)] · tr[𝓜 Λ_{m+1}(I/d)]
    """
    _check_range(ell, m)
    tail = [_markovian_channel(process, n) for n in range(ell + 1, m + 2)]
    ops = RunningOperators.start(process.rho0.matrix, process.d_E, process.d_S)
    for n in range(1, ell + 1):
        ops.advance(process.joint_channel(n))

    d = process.d_S
    undo = tail[-1]
    p_tail = float(np.prod([noise_strength(ch).value for ch in tail[:-1]]))
    reduced = partial_trace(ops.x, (process.d_E, d), keep="S")
    a_term = np.trace(process.povm @ apply_channel(undo, reduced)).real
    b_term = np.trace(ops.eps).real * np.trace(process.povm @ apply_channel(undo, np.eye(d) / d)).real
    return float(p_tail * a_term + b_term)


def asf_corollary_late(process: NoiseProcess, ell: int, m: int) -> float:
    """Markovian TP noise on steps 1..ℓ, correlated noise afterwards.

    F_m = p_1⋯p_ℓ · tr[𝓜 tr_E Λ_{m+1} 𝒜_{m:ℓ+1}(ρ)] + tr[𝓜 tr_E Λ_{m+1} ℬ_{m:ℓ+1}(ρ)]
    """
    _check_range(ell, m)
    head = [_markovian_channel(process, n) for n in range(1, ell + 1)]
    p_head = float(np.prod([noise_strength(ch).value for ch in head]))
    ops = RunningOperators.start(process.rho0.matrix, process.d_E, process.d_S)
    a_term, b_term = _split(ops, process, ell + 1, m)
    return float(p_head * a_term + b_term)


def blocks_process(process: NoiseProcess, ell: int, eps: np.ndarray) -> NoiseProcess:
    """``process`` with step ℓ followed by a reset of the environment to ε."""
    step = process.step(ell)
    if step.kind is StepKind.SYSTEM_ONLY:
        raise StructureError(f"Step {ell} is system-only; a reset needs a joint channel")
    reset = StepNoise.reset_after(step.channel, eps)
    return process.with_steps(OverrideSchedule(process.steps, ((ell, reset),)))


def asf_corollary_blocks(process: NoiseProcess, ell: int, eps: np.ndarray | None, m: int) -> float:
    """Two correlated blocks separated by an environment reset after step ℓ.

    F_m = tr{𝓜 tr_E Λ_{m+1} 𝒜_{m:ℓ+1}[ε ⊗ tr_E 𝒜_ℓ(ρ)]}
          + tr[ℬ_ℓ(ρ)] · tr{𝓜 tr_E Λ_{m+1} ℬ_{m:ℓ+1}(ε ⊗ I/d)}

    Step ℓ must be ``RESET_AFTER``; a ``JOINT`` step is accepted when ``eps``
    is given and is then treated as reset to ``eps``. Longer chains of blocks
    follow by applying the same split at each reset.
    """
    _check_range(ell, m)
    step = process.step(ell)
    if step.kind is StepKind.RESET_AFTER:
        if eps is not None and not np.allclose(eps, step.env_state, atol=1e-12):
            raise StructureError(f"eps differs from the reset state stored at step {ell}")
        eps = step.env_state
    elif step.kind is StepKind.JOINT and eps is not None:
        eps = check_state(eps, process.d_E, "eps")
    else:
        raise StructureError(f"Step {ell} must reset the environment, got {step.kind.value}")

    d_E, d_S = process.d_E, process.d_S
    ops = RunningOperators.start(process.rho0.matrix, d_E, d_S)
    for n in range(1, ell):
        ops.advance(process.joint_channel(n))
    ops.advance(step.channel)

    reset_x = np.kron(eps, partial_trace(ops.x, (d_E, d_S), keep="S"))
    second = RunningOperators(reset_x, np.zeros((d_E, d_E), dtype=complex), d_E, d_S)
    a_term, _ = _split(second, process, ell + 1, m)

    fresh = RunningOperators(np.zeros_like(reset_x), np.asarray(eps, dtype=complex), d_E, d_S)
    _, b_unit = _split(fresh, process, ell + 1, m)
    return float(a_term + np.trace(ops.eps).real * b_unit)
