"""Exception hierarchy shared by every stage of the toolkit."""


class NonMarkovRBError(Exception):
    """Base class for all errors raised by nonmarkov_rb."""


class DimensionError(NonMarkovRBError, ValueError):
    """Operator shapes do not match the declared E⊗S split."""


class InvalidStateError(NonMarkovRBError, ValueError):
    """A matrix fails the density-operator or POVM invariants."""


class ChannelError(NonMarkovRBError, ValueError):
    """Kraus operators violate the declared trace-preservation flag."""


class StructureError(NonMarkovRBError, ValueError):
    """A noise schedule does not have the shape a closed form expects."""


class ScheduleExhaustedError(NonMarkovRBError, IndexError):
    """A step schedule has no entry for the requested step index."""


class GridMismatchError(NonMarkovRBError, ValueError):
    """Two curves are compared on different m grids."""


class OracleCostError(NonMarkovRBError, ValueError):
    """Exhaustive enumeration requested beyond its cost guard."""


class ConfigError(NonMarkovRBError, ValueError):
    """Experiment configuration is malformed; carries the offending field path."""

    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class NumericalError(NonMarkovRBError, RuntimeError):
    """A computation produced an unphysical or non-finite intermediate."""


class QuadratureError(NumericalError):
    """Quadrature failed to converge under node doubling."""
