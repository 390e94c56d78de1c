"""ASF curves: (m, value, stderr) points plus run metadata."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
import pandas as pd


class Engine(str, Enum):
    ANALYTICAL = "analytical"
    MONTE_CARLO = "monte-carlo"
    ORACLE = "oracle"


@dataclass(frozen=True)
class CurvePoint:
    m: int
    value: float
    stderr: float | None = None


@dataclass(frozen=True)
class ASFCurve:
    """Average sequence fidelity as a function of sequence length."""

    points: tuple[CurvePoint, ...]
    model_id: str = "custom"
    engine: Engine = Engine.ANALYTICAL
    seed: int | None = None
    samples: int | None = None
    identity_pattern: tuple[int, ...] = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        points = tuple(self.points)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "engine", Engine(self.engine))
        object.__setattr__(self, "identity_pattern", tuple(int(i) for i in self.identity_pattern))
        ms = [p.m for p in points]
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError(f"Curve m values must be strictly increasing, got {ms}")
        if not all(np.isfinite(p.value) for p in points):
            raise ValueError("Curve values must be finite")
        if self.engine is Engine.ANALYTICAL and any(p.stderr is not None for p in points):
            raise ValueError("Analytical curves carry no standard errors")

    @classmethod
    def from_arrays(
        cls,
        m_values: Sequence[int],
        values: Sequence[float],
        stderr: Sequence[float] | None = None,
        **meta,
    ) -> ASFCurve:
        if len(m_values) != len(values):
            raise ValueError(f"{len(m_values)} m values but {len(values)} curve values")
        errs = [None] * len(values) if stderr is None else [
            None if (e is None or not np.isfinite(e)) else float(e) for e in stderr
        ]
        points = tuple(CurvePoint(int(m), float(v), e) for m, v, e in zip(m_values, values, errs))
        return cls(points, **meta)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def m_values(self) -> np.ndarray:
        return np.array([p.m for p in self.points], dtype=int)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=float)

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([np.nan if p.stderr is None else p.stderr for p in self.points], dtype=float)

    @property
    def has_stderr(self) -> bool:
        return any(p.stderr is not None for p in self.points)

    def window(self, m_min: int | None = None, m_max: int | None = None) -> ASFCurve:
        lo = -np.inf if m_min is None else m_min
        hi = np.inf if m_max is None else m_max
        return replace(self, points=tuple(p for p in self.points if lo <= p.m <= hi))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"m": self.m_values, "value": self.values, "stderr": self.stderrs}
        ).set_index("m")

    def meta(self) -> dict:
        return {
            "model_id": self.model_id,
            "engine": self.engine.value,
            "seed": self.seed,
            "samples": self.samples,
            "identity_pattern": list(self.identity_pattern),
            **self.extra,
        }

    def to_dict(self) -> dict:
        return {
            "meta": self.meta(),
            "points": [
                {"m": p.m, "value": p.value, "stderr": p.stderr} for p in self.points
            ],
        }
