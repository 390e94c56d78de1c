"""Kraus-form completely positive maps.

A channel is stored as a stack of square Kraus operators together with a
trace-preservation flag that is validated at construction time.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import PAULI_X, PAULI_Y, PAULI_Z, as_square, dagger
from nonmarkov_rb.core.random import SeededRng, haar_random_unitary
from nonmarkov_rb.exceptions import ChannelError, DimensionError

logger = logging.getLogger(__name__)


class TPFlag(str, Enum):
    PRESERVING = "trace-preserving"
    NON_INCREASING = "trace-non-increasing"
    UNCHECKED = "unchecked"


@dataclass(frozen=True)
class KrausChannel:
    """Λ(x) = Σ_μ λ_μ x λ_μ†.

    Parameters
    ----------
    kraus : np.ndarray
        Array of shape ``(n_kraus, d, d)``; sequences of matrices are stacked.
    tp_flag : TPFlag
        Checked against Σλ†λ within ``Config.TP_TOL``.
    """

    kraus: np.ndarray
    tp_flag: TPFlag = TPFlag.UNCHECKED

    def __post_init__(self) -> None:
        ops = np.array(self.kraus, dtype=complex, copy=True)
        if ops.ndim == 2:
            ops = ops[np.newaxis]
        if ops.ndim != 3 or ops.shape[0] == 0 or ops.shape[1] != ops.shape[2]:
            raise DimensionError(f"Kraus operators must be a non-empty stack of square matrices, got {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise ChannelError("Kraus operators contain NaN or Inf entries")
        ops.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "tp_flag", TPFlag(self.tp_flag))

        if self.tp_flag is TPFlag.PRESERVING:
            deviation = np.max(np.abs(self.kraus_sum() - np.eye(self.dim)))
            if deviation > Config.TP_TOL:
                raise ChannelError(f"Channel flagged trace-preserving but ‖Σλ†λ − I‖ = {deviation:.3e}")
        elif self.tp_flag is TPFlag.NON_INCREASING:
            top = np.linalg.eigvalsh(self.kraus_sum()).max()
            if top > 1 + Config.TP_TOL:
                raise ChannelError(f"Channel flagged trace-non-increasing but max eig(Σλ†λ) = {top:.12g}")

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    def kraus_sum(self) -> np.ndarray:
        return np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)

    def is_trace_preserving(self, tol: float = Config.TP_TOL) -> bool:
        return bool(np.max(np.abs(self.kraus_sum() - np.eye(self.dim))) <= tol)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_channel(self, x)

    # -- Constructors ------------------------------------------------------

    @classmethod
    def identity(cls, dim: int) -> KrausChannel:
        return cls(np.eye(dim, dtype=complex), TPFlag.PRESERVING)

    @classmethod
    def unitary(cls, u: np.ndarray) -> KrausChannel:
        return cls(as_square(u, name="u"), TPFlag.PRESERVING)

    # -- Serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "kraus": [
                [[[float(z.real), float(z.imag)] for z in row] for row in op]
                for op in self.kraus
            ],
            "tp_flag": self.tp_flag.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> KrausChannel:
        try:
            raw = np.asarray(data["kraus"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ChannelError(f"Malformed Kraus payload: {exc}") from exc
        if raw.ndim != 4 or raw.shape[-1] != 2:
            raise ChannelError(f"Kraus payload must nest as [op][row][col][re, im], got shape {raw.shape}")
        ops = raw[..., 0] + 1j * raw[..., 1]
        if "dim" in data and ops.shape[1] != int(data["dim"]):
            raise DimensionError(f"Kraus payload declares dim={data['dim']} but operators are {ops.shape[1]}×{ops.shape[2]}")
        return cls(ops, TPFlag(data.get("tp_flag", TPFlag.UNCHECKED.value)))

    @classmethod
    def from_json(cls, text: str) -> KrausChannel:
        return cls.from_dict(json.loads(text))


def apply_channel(ch: KrausChannel, x: np.ndarray) -> np.ndarray:
    """Σ_μ λ_μ x λ_μ†."""
    x = as_square(x, name="x")
    if x.shape[0] != ch.dim:
        raise DimensionError(f"Operator dimension {x.shape[0]} does not match channel dimension {ch.dim}")
    return np.einsum("kij,jl,kml->im", ch.kraus, x, ch.kraus.conj())


def _combined_flag(*channels: KrausChannel) -> TPFlag:
    flags = {c.tp_flag for c in channels}
    if flags == {TPFlag.PRESERVING}:
        return TPFlag.PRESERVING
    if flags <= {TPFlag.PRESERVING, TPFlag.NON_INCREASING}:
        return TPFlag.NON_INCREASING
    return TPFlag.UNCHECKED


def choi_matrix(ch: KrausChannel) -> np.ndarray:
    """Σ_μ vec(λ_μ) vec(λ_μ)† with row-major vectorization."""
    vecs = ch.kraus.reshape(ch.n_kraus, -1)
    return vecs.T @ vecs.conj()


def compress(ch: KrausChannel, cutoff: float = Config.KRAUS_CUTOFF) -> KrausChannel:
    """Minimal Kraus set for the same map, from the spectral decomposition of its Choi matrix."""
    if ch.n_kraus <= 1:
        return ch
    choi = choi_matrix(ch)
    w, v = np.linalg.eigh((choi + dagger(choi)) / 2)
    keep = w > cutoff * max(w.max(), 1.0)
    if not np.any(keep):
        keep = w == w.max()
    ops = (np.sqrt(w[keep]) * v[:, keep]).T.reshape(-1, ch.dim, ch.dim)
    # eigh sorts ascending; put the dominant operator first
    return KrausChannel(ops[::-1], ch.tp_flag)


def compose(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    """second ∘ first, compressed once the product set exceeds d² operators."""
    if second.dim != first.dim:
        raise DimensionError(f"Cannot compose channels of dimension {second.dim} and {first.dim}")
    ops = np.einsum("aij,bjk->abik", second.kraus, first.kraus).reshape(-1, first.dim, first.dim)
    composed = KrausChannel(ops, _combined_flag(second, first))
    if composed.n_kraus > composed.dim**2:
        composed = compress(composed)
    return composed


def mix(weights: Sequence[float], channels: Sequence[KrausChannel]) -> KrausChannel:
    """Convex mixture Σ w_i Λ_i realized by scaling each Kraus set by √w_i."""
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(channels) or len(channels) == 0:
        raise ValueError("mix requires one weight per channel")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must be a probability vector, got {weights}")
    dims = {c.dim for c in channels}
    if len(dims) != 1:
        raise DimensionError(f"Cannot mix channels of dimensions {sorted(dims)}")
    ops = [np.sqrt(w) * c.kraus for w, c in zip(weights, channels) if w > 0]
    return KrausChannel(np.concatenate(ops), _combined_flag(*channels))


def embed_system_channel(ch: KrausChannel, d_E: int) -> KrausChannel:
    """I_E ⊗ ch on the E⊗S space."""
    identity = np.eye(d_E, dtype=complex)
    return KrausChannel(np.array([np.kron(identity, op) for op in ch.kraus]), ch.tp_flag)


def depolarizing_channel(p: float) -> KrausChannel:
    """Qubit map x ↦ p·x + (1−p)·tr(x)·I/2."""
    if not -1.0 / 3.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [-1/3, 1], got {p}")
    w_id = (1 + 3 * p) / 4
    w_pauli = (1 - p) / 4
    ops = [np.sqrt(w_id) * np.eye(2)] + [np.sqrt(w_pauli) * P for P in (PAULI_X, PAULI_Y, PAULI_Z)]
    return KrausChannel(np.array(ops), TPFlag.PRESERVING)


def random_cptp_channel(
    dim: int,
    n_kraus: int,
    rng: np.random.Generator | SeededRng,
) -> KrausChannel:
    """Random CPTP map from the blocks of a Haar-random isometry."""
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    big = haar_random_unitary(dim * n_kraus, gen)
    isometry = big[:, :dim]
    return KrausChannel(isometry.reshape(n_kraus, dim, dim), TPFlag.PRESERVING)
