"""Noise processes: initial state, per-step noise schedule and measurement.

A schedule maps the 1-based step index n (including the undo step m+1) to a
``StepNoise``. Schedules are small picklable objects rather than closures so
a process can be shipped to worker processes unchanged.
"""

from __future__ import annotations

import dataclasses
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np

from nonmarkov_rb.channels.kraus import KrausChannel, apply_channel, compress, embed_system_channel
from nonmarkov_rb.channels.markov import eigen_mixture
from nonmarkov_rb.core.linalg import (
    PAULI_Y,
    DensityOperator,
    check_povm,
    check_state,
    dagger,
    hermitian_expm,
)
from nonmarkov_rb.exceptions import DimensionError, ScheduleExhaustedError

logger = logging.getLogger(__name__)


class StepKind(str, Enum):
    JOINT = "joint"
    SYSTEM_ONLY = "system_only"
    RESET_AFTER = "reset_after"


def reset_channel_kraus(ch: KrausChannel, eps: np.ndarray, d_E: int) -> KrausChannel:
    """Kraus form of X ↦ ε ⊗ tr_E[Λ(X)]: operators √w_k (|φ_k⟩⟨e_i| ⊗ I_S) λ_μ."""
    d_S = ch.dim // d_E
    weights, vectors = eigen_mixture(eps)
    k = ch.kraus.reshape(ch.n_kraus, d_E, d_S, d_E, d_S)
    # out[n, r, i, e, a, f, b] = √w_r φ_r[e] K[n, i, a, f, b]
    out = np.einsum("er,niafb->nrieafb", vectors * np.sqrt(weights), k)
    reset = KrausChannel(out.reshape(-1, ch.dim, ch.dim), ch.tp_flag)
    return compress(reset) if reset.n_kraus > ch.dim**2 else reset


@dataclass(frozen=True)
class StepNoise:
    """Noise applied after the gate of one protocol step.

    ``JOINT`` channels act on E⊗S, ``SYSTEM_ONLY`` channels on S alone (the
    environment is a spectator), and ``RESET_AFTER`` applies a joint channel
    followed by re-preparing the environment in ``env_state``.
    """

    kind: StepKind
    channel: KrausChannel
    env_state: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StepKind(self.kind))
        if self.kind is StepKind.RESET_AFTER:
            if self.env_state is None:
                raise ValueError("RESET_AFTER steps need an environment state")
            eps = np.array(check_state(self.env_state, name="env_state"), copy=True)
            eps.setflags(write=False)
            object.__setattr__(self, "env_state", eps)
        elif self.env_state is not None:
            raise ValueError(f"{self.kind.value} steps do not take an environment state")

    @classmethod
    def joint(cls, ch: KrausChannel) -> StepNoise:
        return cls(StepKind.JOINT, ch)

    @classmethod
    def system_only(cls, ch: KrausChannel) -> StepNoise:
        return cls(StepKind.SYSTEM_ONLY, ch)

    @classmethod
    def reset_after(cls, ch: KrausChannel, eps: np.ndarray) -> StepNoise:
        return cls(StepKind.RESET_AFTER, ch, eps)

    def realize(self, d_E: int, d_S: int) -> KrausChannel:
        """The step as a single channel on E⊗S."""
        if self.kind is StepKind.SYSTEM_ONLY:
            if self.channel.dim != d_S:
                raise DimensionError(f"System-only channel has dimension {self.channel.dim}, expected d_S={d_S}")
            return embed_system_channel(self.channel, d_E)
        if self.channel.dim != d_E * d_S:
            raise DimensionError(f"Joint channel has dimension {self.channel.dim}, expected {d_E * d_S}")
        if self.kind is StepKind.JOINT:
            return self.channel
        if self.env_state.shape[0] != d_E:
            raise DimensionError(f"Reset state has dimension {self.env_state.shape[0]}, expected d_E={d_E}")
        return reset_channel_kraus(self.channel, self.env_state, d_E)


class StepSchedule(ABC):
    """Step index n ≥ 1 → StepNoise."""

    @abstractmethod
    def __call__(self, n: int) -> StepNoise:
        """Noise for step ``n``."""


@dataclass(frozen=True)
class ConstantSchedule(StepSchedule):
    step: StepNoise

    def __call__(self, n: int) -> StepNoise:
        if n < 1:
            raise ScheduleExhaustedError(f"Step indices start at 1, got {n}")
        return self.step


@dataclass(frozen=True)
class ListSchedule(StepSchedule):
    """Explicit per-step noise; steps past the list fall back to ``tail`` if given."""

    steps: tuple[StepNoise, ...]
    tail: StepNoise | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    def __call__(self, n: int) -> StepNoise:
        if 1 <= n <= len(self.steps):
            return self.steps[n - 1]
        if n > len(self.steps) and self.tail is not None:
            return self.tail
        raise ScheduleExhaustedError(f"Schedule defines {len(self.steps)} steps, step {n} requested")


@dataclass(frozen=True)
class OverrideSchedule(StepSchedule):
    """``base`` with selected steps replaced."""

    base: StepSchedule
    overrides: tuple[tuple[int, StepNoise], ...]

    def __call__(self, n: int) -> StepNoise:
        for index, step in self.overrides:
            if index == n:
                return step
        return self.base(n)


@dataclass(frozen=True)
class NoiseProcess:
    """Initial E⊗S state, noise schedule and POVM element on S."""

    rho0: DensityOperator
    steps: StepSchedule
    povm: np.ndarray
    model_id: str = "custom"

    def __post_init__(self) -> None:
        povm = np.array(check_povm(self.povm, self.rho0.d_S), copy=True)
        povm.setflags(write=False)
        object.__setattr__(self, "povm", povm)

    @property
    def d_S(self) -> int:
        return self.rho0.d_S

    @property
    def d_E(self) -> int:
        return self.rho0.d_E

    def step(self, n: int) -> StepNoise:
        return self.steps(n)

    def joint_channel(self, n: int) -> KrausChannel:
        return self.steps(n).realize(self.d_E, self.d_S)

    def with_steps(self, steps: StepSchedule, model_id: str | None = None) -> NoiseProcess:
        return dataclasses.replace(self, steps=steps, model_id=model_id or self.model_id)


@dataclass(frozen=True)
class SpamSpec:
    """Preparation channel (on E⊗S or on S) and measurement rotation angle about Y."""

    prep: KrausChannel | None = None
    meas_rotation: float | None = None

    @property
    def is_empty(self) -> bool:
        return self.prep is None and not self.meas_rotation


def apply_spam(process: NoiseProcess, spam: SpamSpec) -> NoiseProcess:
    """Replace ρ by prep(ρ) and 𝓜 by R†𝓜R with R = exp(−iΔ₂Y)."""
    if spam.is_empty:
        return process

    rho = process.rho0
    if spam.prep is not None:
        prep = spam.prep
        if prep.dim == process.d_S and process.d_E > 1:
            prep = embed_system_channel(prep, process.d_E)
        elif prep.dim != rho.dim:
            raise DimensionError(f"Preparation channel dimension {prep.dim} matches neither d_S nor d_E·d_S")
        rho = DensityOperator(apply_channel(prep, rho.matrix), process.d_S, process.d_E)

    povm = process.povm
    if spam.meas_rotation:
        if process.d_S != 2:
            raise DimensionError("Measurement rotation about Y is defined for a qubit system")
        r = hermitian_expm(PAULI_Y, spam.meas_rotation)
        povm = check_povm(dagger(r) @ povm @ r, process.d_S)

    logger.debug(f"Applied SPAM to {process.model_id}: prep={spam.prep is not None}, meas_rotation={spam.meas_rotation}")
    return dataclasses.replace(process, rho0=rho, povm=povm)
