"""Seeded random streams and Haar-distributed sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nonmarkov_rb.config import Config
from nonmarkov_rb.core.linalg import DensityOperator, dagger


@dataclass(frozen=True)
class SeededRng:
    """Reproducible generator factory.

    ``derive`` appends to the SeedSequence spawn key, so a worker handed
    ``rng.derive(m, i)`` draws the same stream no matter which process or
    in what order it runs.
    """

    seed: int
    algorithm: str = Config.RNG_ALGORITHM
    spawn_key: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not hasattr(np.random, self.algorithm):
            raise ValueError(f"Unknown bit generator {self.algorithm!r}")

    def derive(self, *key: int) -> SeededRng:
        return SeededRng(self.seed, self.algorithm, self.spawn_key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        bit_generator = getattr(np.random, self.algorithm)(sequence)
        return np.random.Generator(bit_generator)


def _as_generator(rng: np.random.Generator | SeededRng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, SeededRng) else rng


def ginibre(d: int, rng: np.random.Generator | SeededRng, cols: int | None = None) -> np.ndarray:
    gen = _as_generator(rng)
    shape = (d, cols or d)
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)


def haar_random_unitary(d: int, rng: np.random.Generator | SeededRng) -> np.ndarray:
    """Haar-distributed d×d unitary.

    QR of a Ginibre matrix, with each column of Q rescaled by the phase of the
    matching diagonal entry of R so the result is uniform.
    """
    if d < 1:
        raise ValueError(f"d must be at least 1, got {d}")
    q, r = np.linalg.qr(ginibre(d, rng))
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def random_density_operator(
    d_S: int,
    d_E: int,
    rng: np.random.Generator | SeededRng,
) -> DensityOperator:
    """Random full-rank mixed state on E⊗S (Hilbert–Schmidt measure)."""
    g = ginibre(d_S * d_E, rng)
    rho = g @ dagger(g)
    rho = (rho + dagger(rho)) / 2
    return DensityOperator(rho / np.trace(rho).real, d_S, d_E)


def random_pure_state(dim: int, rng: np.random.Generator | SeededRng) -> np.ndarray:
    vec = ginibre(dim, rng, cols=1)[:, 0]
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())
