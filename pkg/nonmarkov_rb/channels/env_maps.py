"""Environment-side superoperators distilled from a joint E⊗S channel.

For a joint channel with Kraus operators λ_μ the two maps are

    $_Λ(ε) = Σ_μ tr_S(λ_μ) ε tr_S(λ_μ)†
    Θ_Λ(ε) = tr_S[Λ(ε ⊗ I/d_S)]

Kraus operators are reshaped to rank-5 tensors K[μ, e, a, f, b] with output
index (e, a) and input index (f, b), environment first. Both maps, and their
extensions to E⊗S operators with the system as spectator, are then single
einsum contractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from nonmarkov_rb.channels.kraus import KrausChannel
from nonmarkov_rb.core.linalg import as_square
from nonmarkov_rb.exceptions import DimensionError


class EnvMapKind(str, Enum):
    DOLLAR = "dollar"
    THETA = "theta"
    DOLLAR_MINUS_THETA = "dollar_minus_theta"


def split_dims(ch: KrausChannel, d_E: int) -> int:
    """Return d_S for a joint channel whose environment has dimension d_E."""
    if d_E < 1 or ch.dim % d_E:
        raise DimensionError(f"Channel dimension {ch.dim} is not divisible by d_E={d_E}")
    return ch.dim // d_E


def kraus_tensor(ch: KrausChannel, d_E: int, d_S: int) -> np.ndarray:
    if ch.dim != d_E * d_S:
        raise DimensionError(f"Channel dimension {ch.dim} does not match d_E·d_S = {d_E * d_S}")
    return ch.kraus.reshape(ch.n_kraus, d_E, d_S, d_E, d_S)


def env_traces(ch: KrausChannel, d_E: int, d_S: int) -> np.ndarray:
    """tr_S(λ_μ) for every Kraus operator, shape (n_kraus, d_E, d_E)."""
    return np.einsum("neafa->nef", kraus_tensor(ch, d_E, d_S))


def dollar_map(ch: KrausChannel, eps: np.ndarray) -> np.ndarray:
    eps = as_square(eps, name="eps")
    d_E = eps.shape[0]
    d_S = split_dims(ch, d_E)
    traces = env_traces(ch, d_E, d_S)
    return np.einsum("nef,fg,nhg->eh", traces, eps, traces.conj())


def theta_map(ch: KrausChannel, eps: np.ndarray) -> np.ndarray:
    eps = as_square(eps, name="eps")
    d_E = eps.shape[0]
    d_S = split_dims(ch, d_E)
    k = kraus_tensor(ch, d_E, d_S)
    return np.einsum("neafb,fg,nhagb->eh", k, eps, k.conj()) / d_S


@dataclass(frozen=True)
class EnvSuperOp:
    """One of $_Λ, Θ_Λ or $_Λ − Θ_Λ bound to its source channel and dimensions."""

    kind: EnvMapKind
    source: KrausChannel
    d_S: int
    d_E: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", EnvMapKind(self.kind))
        if self.source.dim != self.d_E * self.d_S:
            raise DimensionError(
                f"Source channel dimension {self.source.dim} does not match d_E·d_S = {self.d_E * self.d_S}"
            )

    def __call__(self, eps: np.ndarray) -> np.ndarray:
        eps = as_square(eps, self.d_E, "eps")
        if self.kind is EnvMapKind.DOLLAR:
            return dollar_map(self.source, eps)
        if self.kind is EnvMapKind.THETA:
            return theta_map(self.source, eps)
        return dollar_map(self.source, eps) - theta_map(self.source, eps)

    def extend(self, x: np.ndarray) -> np.ndarray:
        return extend_env_superop(self, x)


def _extend_dollar(k: np.ndarray, x4: np.ndarray) -> np.ndarray:
    traces = np.einsum("neafa->nef", k)
    return np.einsum("nef,fsgt,nhg->esht", traces, x4, traces.conj())


def _extend_theta(k: np.ndarray, x4: np.ndarray, d_S: int) -> np.ndarray:
    # The fresh system slot in state I/d_S is contracted away analytically:
    # its input index b is summed against itself and its output index a is traced.
    return np.einsum("neafb,fsgt,nhagb->esht", k, x4, k.conj()) / d_S


def extend_env_superop(op: EnvSuperOp, x: np.ndarray) -> np.ndarray:
    """Apply ``op`` to the E factor of an E⊗S operator, S spectating."""
    d_E, d_S = op.d_E, op.d_S
    x = as_square(x, d_E * d_S, "x")
    x4 = x.reshape(d_E, d_S, d_E, d_S)
    k = kraus_tensor(op.source, d_E, d_S)
    if op.kind is EnvMapKind.DOLLAR:
        y = _extend_dollar(k, x4)
    elif op.kind is EnvMapKind.THETA:
        y = _extend_theta(k, x4, d_S)
    else:
        y = _extend_dollar(k, x4) - _extend_theta(k, x4, d_S)
    return y.reshape(d_E * d_S, d_E * d_S)
