"""Single-qubit Clifford group and unitary 2-design checks."""

from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np

from nonmarkov_rb.core.linalg import dagger

logger = logging.getLogger(__name__)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=complex)

_PHASE_TOL = 1e-9


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    """Remove the global phase so the first nonzero entry is real positive."""
    flat = u.ravel()
    pivot = flat[np.argmax(np.abs(flat) > _PHASE_TOL)]
    return u * (abs(pivot) / pivot)


def _phase_key(u: np.ndarray) -> tuple[float, ...]:
    canon = _canonical_phase(u)
    return tuple(np.round(np.concatenate([canon.real.ravel(), canon.imag.ravel()]), 8) + 0.0)


@lru_cache(maxsize=1)
def single_qubit_cliffords() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Cliffords as the {H, S} closure modulo global phase.

    Elements come out in breadth-first order starting from the identity, which
    makes index-based sampling reproducible.
    """
    identity = np.eye(2, dtype=complex)
    group = [identity]
    seen = {_phase_key(identity)}
    frontier = [identity]
    while frontier:
        next_frontier = []
        for g in frontier:
            for generator in (HADAMARD, PHASE_S):
                candidate = _canonical_phase(generator @ g)
                key = _phase_key(candidate)
                if key not in seen:
                    seen.add(key)
                    group.append(candidate)
                    next_frontier.append(candidate)
        frontier = next_frontier
    if len(group) != 24:
        raise RuntimeError(f"Clifford closure produced {len(group)} elements, expected 24")
    for g in group:
        g.setflags(write=False)
    logger.debug("Generated single-qubit Clifford group with 24 elements")
    return tuple(group)


def frame_potential(gates: tuple[np.ndarray, ...] | list[np.ndarray], t: int = 2) -> float:
    """(1/|G|²) Σ_{G,H} |tr(G†H)|^{2t}."""
    stack = np.asarray(gates)
    overlaps = np.einsum("gji,hji->gh", stack.conj(), stack)
    return float(np.mean(np.abs(overlaps) ** (2 * t)))


def is_unitary_2design(gates, tol: float = 1e-9) -> bool:
    """True when the uniform distribution over ``gates`` matches Haar to second order.

    For d ≥ 2 the t=2 frame potential of any ensemble is at least 2, with
    equality exactly for 2-designs.
    """
    stack = np.asarray(gates)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2] or stack.shape[1] < 2:
        return False
    for g in stack:
        if not np.allclose(dagger(g) @ g, np.eye(g.shape[0]), atol=1e-10):
            return False
    return abs(frame_potential(stack, t=2) - 2.0) <= tol
