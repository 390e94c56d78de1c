"""Direct simulation of one RB gate sequence on the joint E⊗S state."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from nonmarkov_rb.channels.kraus import apply_channel
from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import dagger, is_unitary
from nonmarkov_rb.noise.process import NoiseProcess

logger = logging.getLogger(__name__)


def sequence_fidelity(process: NoiseProcess, gates: Sequence[np.ndarray], m: int | None = None) -> float:
    """Survival probability f = tr[(I_E ⊗ 𝓜) ρ_final] for one sequence.

    Step n applies I_E ⊗ G_n and then the step's noise. The undo gate
    (G_m ⋯ G_1)† is applied as a single gate followed by the noise of step m+1.
    """
    if m is None:
        m = len(gates)
    if len(gates) != m:
        raise ValueError(f"Expected {m} gates, got {len(gates)}")

    d_E, d_S = process.d_E, process.d_S
    env_identity = np.eye(d_E)
    rho = process.rho0.matrix
    undo = np.eye(d_S, dtype=complex)
    for n, gate in enumerate(gates, start=1):
        gate = np.asarray(gate, dtype=complex)
        if gate.shape != (d_S, d_S) or not is_unitary(gate):
            raise ValueError(f"Gate {n} is not a {d_S}×{d_S} unitary")
        full = np.kron(env_identity, gate)
        rho = apply_channel(process.joint_channel(n), full @ rho @ dagger(full))
        undo = undo @ dagger(gate)

    full = np.kron(env_identity, undo)
    rho = apply_channel(process.joint_channel(m + 1), full @ rho @ dagger(full))
    f = float(np.real(np.trace(np.kron(env_identity, process.povm) @ rho)))
    if not -Config.ASF_UPPER_SLACK <= f <= 1 + Config.ASF_UPPER_SLACK:
        logger.warning(f"Sequence fidelity {f:.12g} outside [0, 1] for {process.model_id}")
    return f
