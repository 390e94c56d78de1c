"""Noise-process builders for the spin models, the finite-memory schedule and SPAM presets."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from nonmarkov_rb.channels.kraus import (
    KrausChannel,
    TPFlag,
    depolarizing_channel,
    embed_system_channel,
)
from nonmarkov_rb.channels.markov import markovianize
from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import PAULI_X, PAULI_Z, DensityOperator, check_state, hermitian_expm, projector
from nonmarkov_rb.noise.hamiltonians import (
    ising_chain_hamiltonian,
    two_spin_hamiltonian,
    xx_spin_hamiltonian,
)
from nonmarkov_rb.noise.process import (
    ConstantSchedule,
    NoiseProcess,
    SpamSpec,
    StepNoise,
    StepSchedule,
    reset_channel_kraus,
)

logger = logging.getLogger(__name__)

MARKOV_BRANCHES = ("markovianized", "reset_after")


def unitary_noise_channel(h: np.ndarray, delta: float) -> KrausChannel:
    """Single-Kraus channel exp(−iδH)."""
    return KrausChannel.unitary(hermitian_expm(h, delta))


def dephasing_channel(delta: float) -> KrausChannel:
    return KrausChannel.unitary(hermitian_expm(PAULI_Z, delta))


def ground_env_state(d_E: int) -> np.ndarray:
    return projector(0, d_E)


def _process(
    d_S: int,
    d_E: int,
    steps: StepSchedule,
    model_id: str,
    rho0: DensityOperator | None = None,
    povm: np.ndarray | None = None,
) -> NoiseProcess:
    return NoiseProcess(
        rho0=rho0 if rho0 is not None else DensityOperator.zeros(d_S, d_E),
        steps=steps,
        povm=povm if povm is not None else projector(0, d_S),
        model_id=model_id,
    )


# -- Unitary spin models -----------------------------------------------------

def two_spin_process(
    J: float = Config.TWO_SPIN_J,
    h_x: float = Config.TWO_SPIN_HX,
    h_y: float = Config.TWO_SPIN_HY,
    delta: float = Config.TWO_SPIN_DELTA,
) -> NoiseProcess:
    ch = unitary_noise_channel(two_spin_hamiltonian(J, h_x, h_y), delta)
    return _process(2, 2, ConstantSchedule(StepNoise.joint(ch)), "two_spin")


def xx_spin_process(
    J_x: float = Config.XX_JX,
    J_y: float = Config.XX_JY,
    delta: float = Config.TWO_SPIN_DELTA,
) -> NoiseProcess:
    ch = unitary_noise_channel(xx_spin_hamiltonian(J_x, J_y), delta)
    return _process(2, 2, ConstantSchedule(StepNoise.joint(ch)), "xx_spin")


def ising_chain_process(
    n_env_qubits: int,
    J: float = Config.ISING_J,
    h_x: float = Config.ISING_HX,
    h_y: float = Config.ISING_HY,
    delta: float = Config.TWO_SPIN_DELTA,
) -> NoiseProcess:
    """System qubit coupled to a closed chain of ``n_env_qubits`` environment spins."""
    if n_env_qubits < 1:
        raise ValueError(f"Ising chain needs at least one environment qubit, got {n_env_qubits}")
    h = ising_chain_hamiltonian(n_env_qubits + 1, J, h_x, h_y)
    ch = unitary_noise_channel(h, delta)
    return _process(2, 2**n_env_qubits, ConstantSchedule(StepNoise.joint(ch)), f"ising_chain_{n_env_qubits}")


# -- Markovian models --------------------------------------------------------

def system_only_process(ch: KrausChannel, d_E: int = 1, model_id: str = "system_only") -> NoiseProcess:
    """Time-independent Markovian noise acting on the system alone."""
    return _process(ch.dim, d_E, ConstantSchedule(StepNoise.system_only(ch)), model_id)


def depolarizing_process(p: float, d_E: int = 1) -> NoiseProcess:
    return system_only_process(depolarizing_channel(p), d_E, "depolarizing")


@dataclass(frozen=True)
class MarkovianizedSchedule(StepSchedule):
    """Each step replaced by the system-only channel σ ↦ tr_E[Λ_n(ε ⊗ σ)]."""

    base: StepSchedule
    d_E: int
    d_S: int
    env_state: np.ndarray

    def __call__(self, n: int) -> StepNoise:
        joint = self.base(n).realize(self.d_E, self.d_S)
        return StepNoise.system_only(markovianize(joint, self.env_state))


def markovianized_process(process: NoiseProcess, eps: np.ndarray | None = None) -> NoiseProcess:
    """Markovian counterpart of ``process`` used as the N_q reference."""
    eps = ground_env_state(process.d_E) if eps is None else check_state(eps, process.d_E, "eps")
    rho0 = DensityOperator.product(process.rho0.rho_E, process.rho0.rho_S)
    return NoiseProcess(
        rho0=rho0,
        steps=MarkovianizedSchedule(process.steps, process.d_E, process.d_S, eps),
        povm=process.povm,
        model_id=f"{process.model_id}_markovianized",
    )


# -- Finite-memory model -----------------------------------------------------

def memory_weight(n: int, ell: int) -> float:
    """q_{n−ℓ} = 1/(1 + exp(n − ℓ))."""
    return float(expit(ell - n))


@dataclass(frozen=True)
class FiniteMemorySchedule(StepSchedule):
    """Joint unitary noise that hands over to Markovian noise around step ℓ.

    Step n is the mixture q·Λ + (1 − q)·Λ_M with q = q_{n−ℓ}. Λ is exp(−iδH);
    the Markovian branch is built from exp(−iδ_M H) with δ_M = factor·δ and
    resets the environment to ε so the analytical engine sees a single
    joint channel per step.

    ``markov_branch="markovianized"`` realizes the branch as
    (reset-to-ε)∘(I_E ⊗ tr_E∘Λ_M(ε ⊗ ·)); ``"reset_after"`` as ε ⊗ tr_E∘Λ_M(·).
    """

    ell: int
    delta: float
    delta_M_factor: float
    hamiltonian: np.ndarray
    env_state: np.ndarray
    markov_branch: str = "markovianized"
    _joint: KrausChannel = field(init=False, repr=False, compare=False)
    _branch: KrausChannel = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.ell < 1:
            raise ValueError(f"ell must be at least 1, got {self.ell}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.markov_branch not in MARKOV_BRANCHES:
            raise ValueError(f"markov_branch must be one of {MARKOV_BRANCHES}, got {self.markov_branch!r}")
        eps = check_state(self.env_state, name="env_state")
        d_E = eps.shape[0]
        joint = unitary_noise_channel(self.hamiltonian, self.delta)
        markov_unitary = unitary_noise_channel(self.hamiltonian, self.delta_M_factor * self.delta)
        if self.markov_branch == "markovianized":
            embedded = embed_system_channel(markovianize(markov_unitary, eps), d_E)
            branch = reset_channel_kraus(embedded, eps, d_E)
        else:
            branch = reset_channel_kraus(markov_unitary, eps, d_E)
        object.__setattr__(self, "_joint", joint)
        object.__setattr__(self, "_branch", branch)

    @property
    def markov_channel(self) -> KrausChannel:
        return self._branch

    @property
    def joint_unitary(self) -> KrausChannel:
        return self._joint

    def weight(self, n: int) -> float:
        return memory_weight(n, self.ell)

    def __call__(self, n: int) -> StepNoise:
        q = self.weight(n)
        parts = []
        if q > 0:
            parts.append(np.sqrt(q) * self._joint.kraus)
        if q < 1:
            parts.append(np.sqrt(1.0 - q) * self._branch.kraus)
        return StepNoise.joint(KrausChannel(np.concatenate(parts), TPFlag.PRESERVING))


def finite_memory_schedule(
    ell: int = Config.FINITE_MEMORY_ELL,
    delta: float = Config.FINITE_MEMORY_DELTA,
    delta_M_factor: float = Config.DELTA_M_FACTOR,
    H: np.ndarray | None = None,
    eps: np.ndarray | None = None,
    markov_branch: str = "markovianized",
) -> FiniteMemorySchedule:
    h = two_spin_hamiltonian() if H is None else H
    d_E = h.shape[0] // 2
    return FiniteMemorySchedule(
        ell=ell,
        delta=delta,
        delta_M_factor=delta_M_factor,
        hamiltonian=h,
        env_state=ground_env_state(d_E) if eps is None else eps,
        markov_branch=markov_branch,
    )


def finite_memory_process(
    ell: int = Config.FINITE_MEMORY_ELL,
    delta: float = Config.FINITE_MEMORY_DELTA,
    delta_M_factor: float = Config.DELTA_M_FACTOR,
    J: float = Config.TWO_SPIN_J,
    h_x: float = Config.TWO_SPIN_HX,
    h_y: float = Config.TWO_SPIN_HY,
    markov_branch: str = "markovianized",
) -> NoiseProcess:
    schedule = finite_memory_schedule(
        ell, delta, delta_M_factor, two_spin_hamiltonian(J, h_x, h_y), markov_branch=markov_branch
    )
    return _process(2, 2, schedule, "finite_memory")


# -- SPAM presets ------------------------------------------------------------

def joint_unitary_prep(h: np.ndarray, delta: float) -> KrausChannel:
    """Preparation error exp(−iΔ₁H) generated by the noise Hamiltonian itself."""
    return unitary_noise_channel(h, delta)


def system_rotation_prep(gamma: float) -> KrausChannel:
    """Local preparation error exp(−iγX) on the system."""
    return KrausChannel.unitary(hermitian_expm(PAULI_X, gamma))


def mild_spam(h: np.ndarray | None = None) -> SpamSpec:
    h = two_spin_hamiltonian() if h is None else h
    return SpamSpec(joint_unitary_prep(h, Config.MILD_SPAM_DELTA1), Config.MILD_SPAM_DELTA2)


def severe_spam(h: np.ndarray | None = None) -> SpamSpec:
    h = two_spin_hamiltonian() if h is None else h
    return SpamSpec(joint_unitary_prep(h, Config.SEVERE_SPAM_DELTA1), Config.SEVERE_SPAM_DELTA2)
