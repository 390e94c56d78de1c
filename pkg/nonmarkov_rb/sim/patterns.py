"""Identity-gate patterns for identity-fixing and interleaving experiments."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class PatternKind(str, Enum):
    NONE = "none"
    PREFIX = "prefix"           # gates 1..k fixed
    INTERLEAVE = "interleave"   # k identities after every random gate
    PERIODIC = "periodic"       # within each period only the listed offsets are random
    EXPLICIT = "explicit"       # a fixed set of step indices


@dataclass(frozen=True)
class IdentityPattern:
    kind: PatternKind = PatternKind.NONE
    k: int = 0
    period: int = 0
    random_offsets: tuple[int, ...] = ()
    ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PatternKind(self.kind))
        object.__setattr__(self, "random_offsets", tuple(sorted(int(o) for o in self.random_offsets)))
        object.__setattr__(self, "ids", tuple(sorted({int(i) for i in self.ids})))
        if self.kind in (PatternKind.PREFIX, PatternKind.INTERLEAVE) and self.k < 0:
            raise ValueError(f"{self.kind.value} pattern needs k >= 0, got {self.k}")
        if self.kind is PatternKind.PERIODIC:
            if self.period < 1 or not self.random_offsets:
                raise ValueError("periodic pattern needs a period and at least one random offset")
            if any(o < 1 or o > self.period for o in self.random_offsets):
                raise ValueError(f"random offsets must lie in 1..{self.period}, got {self.random_offsets}")
        if self.kind is PatternKind.EXPLICIT and any(i < 1 for i in self.ids):
            raise ValueError(f"step indices start at 1, got {self.ids}")

    # -- Constructors ------------------------------------------------------

    @classmethod
    def none(cls) -> IdentityPattern:
        return cls()

    @classmethod
    def prefix(cls, k: int) -> IdentityPattern:
        return cls(PatternKind.PREFIX, k=k)

    @classmethod
    def interleave(cls, k: int) -> IdentityPattern:
        return cls(PatternKind.INTERLEAVE, k=k)

    @classmethod
    def periodic(cls, period: int, random_offsets: tuple[int, ...]) -> IdentityPattern:
        """E.g. ``periodic(2, (2,))`` fixes {1, 3, 5, …}; ``periodic(7, (7,))`` fixes {1..6, 8..13, …}."""
        return cls(PatternKind.PERIODIC, period=period, random_offsets=random_offsets)

    @classmethod
    def explicit(cls, ids) -> IdentityPattern:
        return cls(PatternKind.EXPLICIT, ids=tuple(ids))

    # -- Queries -----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return (
            self.kind is PatternKind.NONE
            or (self.kind in (PatternKind.PREFIX, PatternKind.INTERLEAVE) and self.k == 0)
            or (self.kind is PatternKind.EXPLICIT and not self.ids)
        )

    @property
    def label(self) -> str:
        if self.is_empty:
            return "none"
        if self.kind is PatternKind.PREFIX:
            return f"prefix_{self.k}"
        if self.kind is PatternKind.INTERLEAVE:
            return f"interleave_{self.k}"
        if self.kind is PatternKind.PERIODIC:
            return f"periodic_{self.period}_{'-'.join(map(str, self.random_offsets))}"
        return "explicit_" + "-".join(map(str, self.ids))

    def sequence_length(self, m: int) -> int:
        """Number of protocol steps for a point at ``m`` on this pattern's axis."""
        if self.kind is PatternKind.INTERLEAVE:
            return m * (self.k + 1)
        return m

    def fixed_ids(self, m: int) -> frozenset[int]:
        length = self.sequence_length(m)
        if self.is_empty:
            return frozenset()
        if self.kind is PatternKind.PREFIX:
            return frozenset(range(1, min(self.k, length) + 1))
        if self.kind is PatternKind.INTERLEAVE:
            return frozenset(n for n in range(1, length + 1) if (n - 1) % (self.k + 1) != 0)
        if self.kind is PatternKind.PERIODIC:
            return frozenset(
                n for n in range(1, length + 1)
                if ((n - 1) % self.period) + 1 not in self.random_offsets
            )
        return frozenset(i for i in self.ids if i <= length)

    def recorded_ids(self, m: int) -> tuple[int, ...]:
        """Fixed step indices at the largest sequence length, for curve metadata."""
        return tuple(sorted(self.fixed_ids(m)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "period": self.period,
            "random_offsets": list(self.random_offsets),
            "ids": list(self.ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> IdentityPattern:
        return cls(
            kind=data.get("kind", "none"),
            k=int(data.get("k", 0)),
            period=int(data.get("period", 0)),
            random_offsets=tuple(data.get("random_offsets", ())),
            ids=tuple(data.get("ids", ())),
        )
