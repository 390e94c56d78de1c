"""Spin Hamiltonians generating the unitary noise models.

Qubit 1 in the formulas below is the environment and qubit 2 the system,
matching the E⊗S ordering used throughout.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z

_PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def pauli_string(labels: str) -> np.ndarray:
    """Tensor product of Paulis, leftmost label first, e.g. ``"XI"``."""
    try:
        factors = [_PAULIS[c] for c in labels.upper()]
    except KeyError as exc:
        raise ValueError(f"Unknown Pauli label in {labels!r}") from exc
    return reduce(np.kron, factors)


def two_spin_hamiltonian(
    J: float = Config.TWO_SPIN_J,
    h_x: float = Config.TWO_SPIN_HX,
    h_y: float = Config.TWO_SPIN_HY,
) -> np.ndarray:
    """H = J X₁X₂ + h_x(X₁ + X₂) + h_y(Y₁ + Y₂)."""
    return (
        J * pauli_string("XX")
        + h_x * (pauli_string("XI") + pauli_string("IX"))
        + h_y * (pauli_string("YI") + pauli_string("IY"))
    )


def xx_spin_hamiltonian(J_x: float = Config.XX_JX, J_y: float = Config.XX_JY) -> np.ndarray:
    """H = J_x X₁X₂ + J_y Y₁Y₂."""
    return J_x * pauli_string("XX") + J_y * pauli_string("YY")


def ising_chain_hamiltonian(
    n_sites: int,
    J: float = Config.ISING_J,
    h_x: float = Config.ISING_HX,
    h_y: float = Config.ISING_HY,
) -> np.ndarray:
    """Closed chain H = Σ_i (J/2) X_i X_{i+1} + h_x X_i + h_y Y_i.

    The chain is translation invariant, so the system can sit on the last
    tensor factor while the preceding ``n_sites - 1`` factors form the
    environment. For two sites both bonds coincide and this reduces to
    ``two_spin_hamiltonian``.
    """
    if n_sites < 2:
        raise ValueError(f"Ising chain needs at least 2 sites, got {n_sites}")
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n_sites):
        bond = ["I"] * n_sites
        bond[i] = "X"
        bond[(i + 1) % n_sites] = "X"
        field_x = ["I"] * n_sites
        field_x[i] = "X"
        field_y = ["I"] * n_sites
        field_y[i] = "Y"
        h += (J / 2) * pauli_string("".join(bond))
        h += h_x * pauli_string("".join(field_x)) + h_y * pauli_string("".join(field_y))
    return h
