"""Coherent versus dissipative memory from interleaved-identity curves."""

from __future__ import annotations

import logging
from enum import Enum
from typing import Sequence

import numpy as np

from nonmarkov_rb.analysis.fitting import ExpFit, fit_exponential
from nonmarkov_rb.config import Config
from nonmarkov_rb.engine.curve import ASFCurve

logger = logging.getLogger(__name__)


class CoherenceVerdict(str, Enum):
    COHERENT = "coherent"
    DISSIPATIVE = "dissipative"
    INCONCLUSIVE = "inconclusive"


def excess_residual(curve: ASFCurve, fit: ExpFit | None = None, config: Config = Config) -> float:
    """Largest deviation from the best exponential beyond the sampling error.

    With standard errors present each point's deviation is reduced by
    ``COHERENCE_STDERR_MULTIPLE`` stderr before taking the maximum.
    """
    fit = fit or fit_exponential(curve, config=config)
    deviation = np.abs(fit.predict(curve.m_values) - curve.values)
    if curve.has_stderr:
        noise = np.nan_to_num(curve.stderrs, nan=0.0)
        deviation = np.clip(deviation - config.COHERENCE_STDERR_MULTIPLE * noise, 0.0, None)
    return float(deviation.max())


def default_residual_threshold(markovianized: ASFCurve, config: Config = Config) -> float:
    """5× the fit residual of the Markovianized curve, floored."""
    baseline = excess_residual(markovianized, config=config)
    return max(config.COHERENCE_RESIDUAL_FACTOR * baseline, config.COHERENCE_RESIDUAL_FLOOR)


def coherence_diagnosis(
    scan: Sequence[ASFCurve],
    residual_threshold: float,
    config: Config = Config,
) -> CoherenceVerdict:
    """Classify memory from curves ordered by interleaving depth, baseline first.

    Coherent memory keeps every interleaved curve non-exponential however many
    identities are inserted; the baseline curve need not clear the threshold.
    Dissipative memory washes out: the residuals shrink with depth and end
    below the threshold.
    """
    if len(scan) < 3:
        logger.info(f"Coherence diagnosis needs a baseline and two interleavings, got {len(scan)} curves")
        return CoherenceVerdict.INCONCLUSIVE

    residuals = [excess_residual(curve, config=config) for curve in scan]
    logger.info(
        "Interleaving residuals: " + ", ".join(f"{r:.3e}" for r in residuals)
        + f" (threshold {residual_threshold:.3e})"
    )
    if all(r > residual_threshold for r in residuals[1:]):
        return CoherenceVerdict.COHERENT
    if all(r <= residual_threshold for r in residuals):
        return CoherenceVerdict.DISSIPATIVE
    non_increasing = all(b <= a for a, b in zip(residuals, residuals[1:]))
    if non_increasing and residuals[-1] <= residual_threshold:
        return CoherenceVerdict.DISSIPATIVE
    return CoherenceVerdict.INCONCLUSIVE
