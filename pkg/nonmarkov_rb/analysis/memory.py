"""Memory-length estimation by identity fixing, and Markovianized baselines."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from nonmarkov_rb.analysis.fitting import DegenerateWindowError, ExpFit, auto_reference_window, fit_exponential
from nonmarkov_rb.config import Config
from nonmarkov_rb.engine.curve import ASFCurve, Engine

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MemoryScanReport:
    """Outcome of matching identity-fixed decay rates to the reference tail.

    ``candidates`` has one row per prefix length k (k = 0 is the unmodified
    curve) with the fitted decay rate and the fit window.
    """

    ell_hat: int
    matched_pattern: tuple[int, ...]
    p_reference: float
    p_matched: float
    tolerance_used: float
    candidates: pd.DataFrame
    reference_fit: ExpFit
    reference_window: tuple[int, int]
    converged: bool

    def to_dict(self) -> dict:
        return {
            "ell_hat": self.ell_hat,
            "matched_pattern": list(self.matched_pattern),
            "p_reference": self.p_reference,
            "p_matched": self.p_matched,
            "tolerance_used": self.tolerance_used,
            "reference_window": list(self.reference_window),
            "reference_fit": self.reference_fit.to_dict(),
            "converged": self.converged,
            "candidates": self.candidates.to_dict(orient="records"),
        }


def _prefix_length(pattern: tuple[int, ...]) -> int:
    ids = tuple(sorted(pattern))
    if ids != tuple(range(1, len(ids) + 1)):
        raise ValueError(f"Memory scan patterns must be prefixes {{1..k}}, got {ids}")
    return len(ids)


def memory_length_scan(
    curves: Mapping[tuple[int, ...], ASFCurve],
    reference_window: tuple[int, int] | None = None,
    rel_tol: float | None = None,
    config: Config = Config,
) -> MemoryScanReport:
    """Estimate the memory length ℓ from prefix-fixed ASF curves.

    Parameters
    ----------
    curves : Mapping[tuple[int, ...], ASFCurve]
        Keyed by the fixed step indices: ``()`` for the unmodified curve and
        ``(1, …, k)`` for the curve with gates 1..k fixed to the identity.
    reference_window : tuple[int, int] | None
        m range of the exponential tail of the unmodified curve. Chosen
        automatically when omitted.
    rel_tol : float | None
        Relative tolerance on decay-rate agreement, ``config.MEMORY_REL_TOL``
        when omitted.
    config : Config
        Fit and window settings.

    Returns
    -------
    MemoryScanReport
        ``ell_hat = k + 1`` for the smallest k whose fitted decay rate is
        within ``rel_tol`` of the reference rate.
    """
    rel_tol = config.MEMORY_REL_TOL if rel_tol is None else rel_tol
    by_k = {_prefix_length(pattern): curve for pattern, curve in curves.items()}
    if 0 not in by_k:
        raise ValueError("Memory scan needs the unmodified curve under the empty pattern ()")
    baseline = by_k[0]
    window = tuple(reference_window) if reference_window else auto_reference_window(baseline, config=config)
    reference = fit_exponential(baseline, window, config=config)
    p_ref = reference.p
    logger.info(f"Reference decay p={p_ref:.6f} on m ∈ [{window[0]}, {window[1]}]")

    rows = []
    for k in sorted(by_k):
        start = max(k + 1, baseline.m_values[0])
        try:
            fit = fit_exponential(by_k[k], (start, window[1]), config=config)
        except DegenerateWindowError:
            logger.debug(f"Skipping prefix {k}: too few points before m={window[1]}")
            continue
        rows.append({
            "k": k,
            "pattern": "none" if k == 0 else f"1..{k}",
            "p": fit.p,
            "rel_diff": abs(fit.p - p_ref) / abs(p_ref),
            "m_start": fit.m_window[0],
            "m_end": fit.m_window[1],
            "max_residual": fit.max_residual,
        })
    candidates = pd.DataFrame(rows, columns=["k", "pattern", "p", "rel_diff", "m_start", "m_end", "max_residual"])
    if candidates.empty:
        raise DegenerateWindowError("No identity-fixed curve has enough points inside the reference window")

    within = candidates[candidates["rel_diff"] <= rel_tol]
    if not within.empty:
        best = within.iloc[0]
        converged = True
    else:
        best = candidates.loc[candidates["rel_diff"].idxmin()]
        converged = False
        logger.warning(
            f"No prefix within rel_tol={rel_tol}; closest is k={int(best['k'])} "
            f"(relative difference {best['rel_diff']:.4f})"
        )
    k = int(best["k"])
    return MemoryScanReport(
        ell_hat=k + 1,
        matched_pattern=tuple(range(1, k + 1)),
        p_reference=p_ref,
        p_matched=float(best["p"]),
        tolerance_used=rel_tol,
        candidates=candidates,
        reference_fit=reference,
        reference_window=(int(window[0]), int(window[1])),
        converged=converged,
    )


class BaselineConstraint(str, Enum):
    A_EQ_B = "A_eq_B"
    A_PLUS_B_EQ_1 = "A_plus_B_eq_1"
    CUSTOM = "custom"


def markovianized_baseline(
    fit: ExpFit,
    constraint: BaselineConstraint | str,
    m_values: Iterable[int],
    A: float | None = None,
    B: float | None = None,
) -> ASFCurve:
    """A·p^m + B with the fitted p and SPAM constants fixed by ``constraint``.

    ``A_eq_B`` keeps the fitted asymptote B and sets A = 1 − B, so A ≈ B and
    the curve starts from unit fidelity. ``A_plus_B_eq_1`` keeps the fitted A
    and sets B = 1 − A. ``custom`` takes both from the arguments.
    """
    constraint = BaselineConstraint(constraint)
    if not np.isfinite(fit.p):
        raise ValueError("Baseline needs a finite fitted decay rate")
    if constraint is BaselineConstraint.A_EQ_B:
        b = fit.B
        a = 1.0 - b
    elif constraint is BaselineConstraint.A_PLUS_B_EQ_1:
        a = fit.A
        b = 1.0 - a
    else:
        if A is None or B is None:
            raise ValueError("custom baseline needs both A and B")
        a, b = float(A), float(B)
    m = np.asarray(sorted(int(v) for v in m_values))
    return ASFCurve.from_arrays(
        m, a * np.power(fit.p, m) + b, model_id="markovianized_baseline", engine=Engine.ANALYTICAL,
        extra={"constraint": constraint.value, "A": a, "B": b, "p": fit.p},
    )
