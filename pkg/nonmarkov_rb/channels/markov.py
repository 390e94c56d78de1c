"""Markovianization of joint channels, noise strength and Clifford twirling."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from nonmarkov_rb.channels.env_maps import kraus_tensor, split_dims
from nonmarkov_rb.channels.kraus import KrausChannel, compress
from nonmarkov_rb.config import Config
from nonmarkov_rb.core.clifford import is_unitary_2design, single_qubit_cliffords
from nonmarkov_rb.core.linalg import check_state

logger = logging.getLogger(__name__)


def eigen_mixture(eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights and eigenvectors (as columns) of an environment state, dropping null weight."""
    w, v = np.linalg.eigh((eps + eps.conj().T) / 2)
    keep = w > Config.PSD_TOL
    return w[keep], v[:, keep]


def markovianize(ch: KrausChannel, eps: np.ndarray, pure: bool = False) -> KrausChannel:
    """Kraus form of σ ↦ tr_E[Λ(ε ⊗ σ)] on the system.

    Parameters
    ----------
    ch : KrausChannel
        Joint channel on E⊗S.
    eps : np.ndarray
        Environment state ε. Mixed states are expanded in their eigenbasis.
    pure : bool
        Require ε to be pure.

    Returns
    -------
    KrausChannel
        Operators √w_k ⟨e_i| λ_μ |φ_k⟩ for ε = Σ_k w_k |φ_k⟩⟨φ_k|, compressed.
    """
    eps = check_state(eps, name="eps")
    d_E = eps.shape[0]
    d_S = split_dims(ch, d_E)
    weights, vectors = eigen_mixture(eps)
    if pure and (len(weights) != 1 or abs(weights[0] - 1.0) > Config.TRACE_TOL):
        raise ValueError("markovianize was asked for a pure environment state but eps is mixed")

    k = kraus_tensor(ch, d_E, d_S)
    # ops[n, k, i, a, b] = √w_k Σ_f K[n, i, a, f, b] φ_k[f]
    ops = np.einsum("niafb,fk->nkiab", k, vectors) * np.sqrt(weights)[None, :, None, None, None]
    markov = KrausChannel(ops.reshape(-1, d_S, d_S), ch.tp_flag)
    return compress(markov) if markov.n_kraus > d_S**2 else markov


def channel_trace(ch: KrausChannel) -> float:
    """tr[Λ] = Σ_μ |tr λ_μ|², the trace of the channel as a superoperator."""
    return float(np.sum(np.abs(np.trace(ch.kraus, axis1=1, axis2=2)) ** 2))


@dataclass(frozen=True)
class NoiseStrength:
    value: float
    out_of_range: bool

    def __float__(self) -> float:
        return self.value


def noise_strength(ch: KrausChannel) -> NoiseStrength:
    """p = (tr[Λ] − 1)/(d² − 1) for a system-only channel.

    Values outside [0, 1] are returned unclamped and flagged.
    """
    d = ch.dim
    p = (channel_trace(ch) - 1.0) / (d * d - 1)
    out_of_range = not (-1e-12 <= p <= 1 + 1e-12)
    if out_of_range:
        logger.warning(f"Noise strength {p:.6g} lies outside [0, 1]")
    return NoiseStrength(p, out_of_range)


@dataclass(frozen=True)
class TwirlResult:
    p: float
    residual: float


def _superoperator(kraus: np.ndarray) -> np.ndarray:
    """Row-major superoperator Σ_μ λ_μ ⊗ conj(λ_μ)."""
    return np.einsum("kij,kab->iajb", kraus, kraus.conj()).reshape(
        kraus.shape[1] ** 2, kraus.shape[2] ** 2
    )


def clifford_twirl(ch: KrausChannel, group=None) -> TwirlResult:
    """Average G†Λ(G · G†)G over ``group`` and fit x ↦ a·x + b·tr(x)·I.

    ``p`` is the coefficient ``a``: the eigenvalue of the twirled map on
    traceless operators. ``residual`` is the largest entry of the part of the
    twirled superoperator that the depolarizing form does not explain.
    """
    gates = single_qubit_cliffords() if group is None else tuple(group)
    if not is_unitary_2design(gates):
        raise ValueError("clifford_twirl requires a unitary 2-design gate set")
    d = ch.dim
    if gates[0].shape[0] != d:
        raise ValueError(f"Gate dimension {gates[0].shape[0]} does not match channel dimension {d}")

    channel_super = _superoperator(ch.kraus)
    twirled = np.zeros((d * d, d * d), dtype=complex)
    for g in gates:
        g_super = _superoperator(g[np.newaxis])
        g_dag_super = _superoperator(g.conj().T[np.newaxis])
        twirled += g_dag_super @ channel_super @ g_super
    twirled /= len(gates)

    vec_identity = np.eye(d, dtype=complex).reshape(-1)
    basis = np.stack([np.eye(d * d, dtype=complex).ravel(), np.outer(vec_identity, vec_identity).ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(basis, twirled.ravel(), rcond=None)
    fitted = (basis @ coef).reshape(d * d, d * d)
    residual = float(np.max(np.abs(twirled - fitted)))
    return TwirlResult(p=float(coef[0].real), residual=residual)
