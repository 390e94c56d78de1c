"""Exact Clifford average by exhaustive enumeration of gate tuples."""

from __future__ import annotations

import itertools
import logging

import numpy as np

from nonmarkov_rb.config import Config
from nonmarkov_rb.core.clifford import single_qubit_cliffords
from nonmarkov_rb.exceptions import DimensionError, OracleCostError
from nonmarkov_rb.noise.process import NoiseProcess
from nonmarkov_rb.sim.sequence import sequence_fidelity

logger = logging.getLogger(__name__)


def asf_oracle_clifford_enum(process: NoiseProcess, m: int, max_m: int = Config.ORACLE_MAX_M) -> float:
    """Mean sequence fidelity over all 24^m single-qubit Clifford tuples."""
    if process.d_S != 2:
        raise DimensionError(f"Clifford enumeration needs a qubit system, got d_S={process.d_S}")
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if m > max_m:
        raise OracleCostError(f"Enumerating 24^{m} sequences exceeds the limit m <= {max_m}")
    cliffords = single_qubit_cliffords()
    total = 0.0
    count = 0
    for gates in itertools.product(cliffords, repeat=m):
        total += sequence_fidelity(process, gates, m)
        count += 1
    logger.debug(f"Enumerated {count} Clifford sequences at m={m}")
    return float(np.float64(total) / count)
