"""Dense complex linear algebra on system-environment operators.

Every composite operator uses the environment-first ordering E⊗S: for a
matrix on the joint space, row index ``e * d_S + s`` addresses environment
level ``e`` and system level ``s``. Matrices are small (at most 64×64), so
everything here is plain numpy on dense arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from nonmarkov_rb.config import Config
from nonmarkov_rb.exceptions import DimensionError, InvalidStateError

logger = logging.getLogger(__name__)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(x: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError(f"{name} contains NaN or Inf entries")
    return arr


def as_square(x: np.ndarray, dim: int | None = None, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(x, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conjugate(np.transpose(x))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with index ``(i_a * rows_b + i_b, j_a * cols_b + j_b)``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def matrices_close(a: np.ndarray, b: np.ndarray, atol: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= atol)


def is_hermitian(x: np.ndarray, tol: float = Config.HERMITIAN_TOL) -> bool:
    x = np.asarray(x)
    return x.ndim == 2 and x.shape[0] == x.shape[1] and matrices_close(x, dagger(x), tol)


def is_unitary(u: np.ndarray, tol: float = Config.UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return matrices_close(dagger(u) @ u, np.eye(u.shape[0]), tol)


def partial_trace(x: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one factor of an E⊗S operator.

    Parameters
    ----------
    x : np.ndarray
        Square operator of dimension ``d_E * d_S``.
    dims : tuple[int, int]
        ``(d_E, d_S)``.
    keep : str
        ``"E"`` or ``"S"``: the subsystem that survives.
    """
    d_E, d_S = dims
    x = as_square(x, d_E * d_S, "x")
    x4 = x.reshape(d_E, d_S, d_E, d_S)
    if keep == "S":
        return np.einsum("esea->sa", x4)
    if keep == "E":
        return np.einsum("esfs->ef", x4)
    raise ValueError(f"keep must be 'E' or 'S', got {keep!r}")


def hermitian_expm(h: np.ndarray, scale: float) -> np.ndarray:
    """Return exp(-i * scale * h) for Hermitian ``h`` via eigendecomposition."""
    h = as_square(h, name="h")
    if not is_hermitian(h):
        raise ValueError("hermitian_expm requires a Hermitian generator")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * scale * w)) @ dagger(v)


def ket(index: int, dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return vec


def projector(index: int, dim: int) -> np.ndarray:
    vec = ket(index, dim)
    return np.outer(vec, vec.conj())


def check_state(matrix: np.ndarray, dim: int | None = None, name: str = "state") -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity within Config tolerances."""
    matrix = as_square(matrix, dim, name)
    if not is_hermitian(matrix, Config.HERMITIAN_TOL):
        raise InvalidStateError(f"{name} is not Hermitian within {Config.HERMITIAN_TOL}")
    trace = np.trace(matrix)
    if abs(trace - 1.0) > Config.TRACE_TOL:
        raise InvalidStateError(f"{name} has trace {trace.real:.12g}, expected 1")
    min_eig = np.linalg.eigvalsh((matrix + dagger(matrix)) / 2).min()
    if min_eig < -Config.PSD_TOL:
        raise InvalidStateError(f"{name} has negative eigenvalue {min_eig:.3e}")
    return matrix


def check_povm(matrix: np.ndarray, dim: int | None = None) -> np.ndarray:
    matrix = as_square(matrix, dim, "povm")
    if not is_hermitian(matrix, Config.HERMITIAN_TOL):
        raise InvalidStateError("povm element is not Hermitian")
    eigs = np.linalg.eigvalsh((matrix + dagger(matrix)) / 2)
    if eigs.min() < -Config.POVM_TOL or eigs.max() > 1 + Config.POVM_TOL:
        raise InvalidStateError(
            f"povm eigenvalues [{eigs.min():.3e}, {eigs.max():.3e}] outside [0, 1]"
        )
    return matrix


def _frozen(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DensityOperator:
    """Valid quantum state on E⊗S with an explicit dimension split.

    An environment-only state is represented with ``d_S = 1``.
    """

    matrix: np.ndarray
    d_S: int
    d_E: int

    def __post_init__(self) -> None:
        if self.d_S < 1 or self.d_E < 1:
            raise DimensionError(f"dimensions must be positive, got d_S={self.d_S}, d_E={self.d_E}")
        if self.d_S * self.d_E > Config.MAX_DIM:
            raise DimensionError(f"total dimension {self.d_S * self.d_E} exceeds {Config.MAX_DIM}")
        checked = check_state(self.matrix, self.d_S * self.d_E, "rho")
        object.__setattr__(self, "matrix", _frozen(checked))

    @property
    def dim(self) -> int:
        return self.d_S * self.d_E

    @property
    def rho_E(self) -> np.ndarray:
        return partial_trace(self.matrix, (self.d_E, self.d_S), keep="E")

    @property
    def rho_S(self) -> np.ndarray:
        return partial_trace(self.matrix, (self.d_E, self.d_S), keep="S")

    @classmethod
    def zeros(cls, d_S: int, d_E: int) -> DensityOperator:
        """|0…0⟩⟨0…0| on E⊗S."""
        return cls(projector(0, d_S * d_E), d_S, d_E)

    @classmethod
    def product(cls, rho_E: np.ndarray, rho_S: np.ndarray) -> DensityOperator:
        rho_E = as_square(rho_E, name="rho_E")
        rho_S = as_square(rho_S, name="rho_S")
        return cls(np.kron(rho_E, rho_S), rho_S.shape[0], rho_E.shape[0])

    @classmethod
    def environment(cls, eps: np.ndarray) -> DensityOperator:
        eps = as_square(eps, name="eps")
        return cls(eps, 1, eps.shape[0])


def von_neumann_entropy(matrix: np.ndarray) -> float:
    """Entropy in nats; eigenvalues below zero from round-off are clipped."""
    eigs = np.clip(np.linalg.eigvalsh(as_square(matrix)), 0.0, None)
    return float(-np.sum(xlogy(eigs, eigs)))


def mutual_information(state: DensityOperator) -> float:
    """I(E:S) = S(ρ_E) + S(ρ_S) − S(ρ)."""
    return (
        von_neumann_entropy(state.rho_E)
        + von_neumann_entropy(state.rho_S)
        - von_neumann_entropy(state.matrix)
    )
