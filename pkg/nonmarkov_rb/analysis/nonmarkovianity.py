"""RB non-Markovianity: ℓ_q distance between an ASF curve and its Markovian reference."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
import pandas as pd

from nonmarkov_rb.engine.curve import ASFCurve
from nonmarkov_rb.exceptions import GridMismatchError


def _parse_q(q: float | str) -> float:
    if isinstance(q, str):
        if q.lower() in ("inf", "infinity", "∞"):
            return math.inf
        q = float(q)
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    return float(q)


def rb_nonmarkovianity(curve: ASFCurve, reference: ASFCurve, q: float | str) -> float:
    """N_q = ‖F − F^(M)‖_q over the shared m grid."""
    if not np.array_equal(curve.m_values, reference.m_values):
        raise GridMismatchError(
            f"Curves use different m grids ({len(curve)} vs {len(reference)} points)"
        )
    q = _parse_q(q)
    diff = np.abs(curve.values - reference.values)
    if diff.size == 0:
        return 0.0
    if math.isinf(q):
        return float(diff.max())
    return float(np.sum(diff**q) ** (1.0 / q))


def nonmarkovianity_table(
    curve: ASFCurve,
    reference: ASFCurve,
    qs: Iterable[float | str] = (1, 2, "inf"),
) -> pd.DataFrame:
    rows = [{"q": str(q), "N_q": rb_nonmarkovianity(curve, reference, q)} for q in qs]
    return pd.DataFrame(rows, columns=["q", "N_q"])
