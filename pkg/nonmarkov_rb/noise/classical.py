"""Classically averaged dephasing: Gaussian angle noise and the shallow-pocket model.

Each step applies exp(−iδZ) to the system, whose noise strength is
p(δ) = (4cos²δ − 1)/3. The ASF is then an average of products of p over the
distribution of angles.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss

from nonmarkov_rb.config import Config
from nonmarkov_rb.engine.curve import ASFCurve, Engine
from nonmarkov_rb.exceptions import QuadratureError

logger = logging.getLogger(__name__)


class AveragingMode(str, Enum):
    MARKOVIAN = "markovian"   # fresh angle every step
    DC = "dc"                 # one angle per sequence


def dephasing_strength(delta: np.ndarray | float) -> np.ndarray:
    """p(δ) = (4cos²δ − 1)/3."""
    return (4.0 * np.cos(delta) ** 2 - 1.0) / 3.0


def markovian_dephasing_rate(sigma: float) -> float:
    """Closed form of E[p(δ)] for δ ~ N(0, σ²): (1 + 2e^{−2σ²})/3."""
    return (1.0 + 2.0 * np.exp(-2.0 * sigma**2)) / 3.0


def _converge(
    rule: Callable[[int], np.ndarray],
    nodes: int,
    tol: float,
    max_nodes: int,
    label: str,
) -> np.ndarray:
    previous = rule(nodes)
    while 2 * nodes <= max_nodes:
        nodes *= 2
        current = rule(nodes)
        change = float(np.max(np.abs(current - previous)))
        if change <= tol:
            logger.debug(f"{label}: converged at {nodes} nodes (change {change:.2e})")
            return current
        previous = current
    raise QuadratureError(f"{label} did not converge to {tol:.1e} within {max_nodes} nodes")


def gaussian_expectation(
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float,
    nodes: int = Config.GAUSS_HERMITE_NODES,
    tol: float = Config.QUADRATURE_TOL,
    max_nodes: int = Config.QUADRATURE_MAX_NODES,
) -> np.ndarray:
    """E[f(δ)] for δ ~ N(0, σ²) by Gauss–Hermite quadrature with node doubling.

    ``f`` maps an array of angles to an array whose last axis runs over the
    angles; the result drops that axis.
    """

    def rule(n: int) -> np.ndarray:
        x, w = hermgauss(n)
        return f(np.sqrt(2.0) * sigma * x) @ w / np.sqrt(np.pi)

    return _converge(rule, nodes, tol, max_nodes, "Gauss–Hermite average")


def classical_dephasing_asf(
    sigma: float,
    m_max: int,
    mode: AveragingMode | str = AveragingMode.MARKOVIAN,
) -> ASFCurve:
    """ASF for Gaussian dephasing angles, m = 1..m_max.

    Markovian mode averages p per step, F_m = E[p]^m. DC mode draws one angle
    for the whole sequence, F_m = E[p^m].
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if m_max < 1:
        raise ValueError(f"m_max must be at least 1, got {m_max}")
    mode = AveragingMode(mode)
    m = np.arange(1, m_max + 1)

    if mode is AveragingMode.MARKOVIAN:
        rate = float(gaussian_expectation(dephasing_strength, sigma))
        values = rate**m
    else:
        values = gaussian_expectation(lambda d: dephasing_strength(d)[None, :] ** m[:, None], sigma)

    return ASFCurve.from_arrays(
        m, values, model_id="classical_dephasing", engine=Engine.ANALYTICAL,
        extra={"sigma": sigma, "mode": mode.value},
    )


# -- Shallow pocket ------------------------------------------------------------

def negative_support_mass(gamma: float, taus: Sequence[float]) -> float:
    """Cauchy probability of the region where some factor p_τ(x) is negative."""
    tau_max = max((abs(t) for t in taus), default=0.0)
    if tau_max == 0:
        return 0.0
    # p_τ(x) < 0 first when |x| > π/(3τ)
    return 1.0 - 2.0 / np.pi * np.arctan(np.pi / (3.0 * tau_max * gamma))


def _shallow_pocket_spectral(gamma: float, taus: Sequence[float]) -> float:
    # p_τ(x) = (1 + e^{2iτx} + e^{−2iτx})/3 and the Cauchy characteristic
    # function is E[e^{iωx}] = e^{−γ|ω|}, so the average is a finite sum.
    spectrum: dict[float, float] = {0.0: 1.0}
    for tau in taus:
        shifted: dict[float, float] = defaultdict(float)
        for omega, weight in spectrum.items():
            for sign in (-1.0, 0.0, 1.0):
                shifted[round(omega + 2.0 * sign * tau, 12)] += weight / 3.0
        spectrum = shifted
    omegas = np.fromiter(spectrum.keys(), dtype=float)
    weights = np.fromiter(spectrum.values(), dtype=float)
    return float(weights @ np.exp(-gamma * np.abs(omegas)))


def _shallow_pocket_quadrature(
    gamma: float,
    taus: Sequence[float],
    nodes: int,
    tol: float,
    max_nodes: int,
) -> float:
    taus_arr = np.asarray(taus, dtype=float)

    def rule(n: int) -> np.ndarray:
        x, w = leggauss(n)
        theta = 0.5 * np.pi * x
        points = gamma * np.tan(theta)
        integrand = np.prod(dephasing_strength(np.outer(taus_arr, points)), axis=0)
        # (γ/π) dx/(x² + γ²) = dθ/π on θ ∈ (−π/2, π/2)
        return np.asarray(0.5 * (w @ integrand))

    return float(_converge(rule, nodes, tol, max_nodes, "Cauchy quadrature"))


def shallow_pocket_asf(
    gamma: float,
    taus: Sequence[float],
    m: int,
    method: str = "spectral",
    nodes: int = Config.CAUCHY_NODES,
    tol: float = Config.QUADRATURE_TOL,
    max_nodes: int = Config.QUADRATURE_MAX_NODES,
) -> float:
    """(γ/π)∫ Π_{n≤m} p_{τ_n}(x)/(x² + γ²) dx for Lorentzian-distributed x.

    ``method="spectral"`` sums the expansion in Cauchy characteristic
    functions exactly. ``method="quadrature"`` integrates on x = γ·tan θ with
    Gauss–Legendre nodes and doubles until the change is below ``tol``; it
    only converges tightly when γ·max τ is small.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if m < 0 or m > len(taus):
        raise ValueError(f"m={m} needs at least m dephasing times, got {len(taus)}")
    used = list(taus[:m])
    mass = negative_support_mass(gamma, used)
    if mass > 1e-3:
        logger.warning(f"Shallow-pocket factors are negative on {mass:.3%} of the Cauchy weight")
    if method == "spectral":
        return _shallow_pocket_spectral(gamma, used)
    if method == "quadrature":
        return _shallow_pocket_quadrature(gamma, used, nodes, tol, max_nodes)
    raise ValueError(f"method must be 'spectral' or 'quadrature', got {method!r}")


def shallow_pocket_curve(gamma: float, taus: Sequence[float], method: str = "spectral") -> ASFCurve:
    m = np.arange(1, len(taus) + 1)
    values = [shallow_pocket_asf(gamma, taus, int(k), method=method) for k in m]
    return ASFCurve.from_arrays(
        m, values, model_id="shallow_pocket", engine=Engine.ANALYTICAL,
        extra={"gamma": gamma, "method": method},
    )


def shallow_pocket_markovian_curve(gamma: float, taus: Sequence[float]) -> ASFCurve:
    """Per-step averaged reference Π_n E[p_{τ_n}(x)] = Π_n (1 + 2e^{−2γτ_n})/3."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    factors = (1.0 + 2.0 * np.exp(-2.0 * gamma * np.abs(np.asarray(taus, dtype=float)))) / 3.0
    return ASFCurve.from_arrays(
        np.arange(1, len(factors) + 1), np.cumprod(factors), model_id="shallow_pocket_markovian",
        engine=Engine.ANALYTICAL, extra={"gamma": gamma},
    )
