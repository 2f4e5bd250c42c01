"""Exception types raised across the package."""


class ToricUFError(Exception):
    """Base class for all package errors."""


class DomainError(ToricUFError, ValueError):
    """An argument lies outside the domain of the operation."""


class ScheduleError(ToricUFError):
    """The extraction schedule violates a layer-disjointness invariant."""


class InvalidSite(ToricUFError, ValueError):
    """A fault site does not exist in the schedule."""


class GraphBuildError(ToricUFError):
    """Fault enumeration produced an inconsistent decoder graph."""


class OddSyndromeError(ToricUFError, ValueError):
    """A detection-event set has odd cardinality."""


class NonTerminationGuard(ToricUFError, RuntimeError):
    """Cluster growth exceeded its iteration budget."""


class ParityError(ToricUFError, RuntimeError):
    """Peeling met an erasure component with odd excitation parity."""


class TooManyEvents(ToricUFError, ValueError):
    """Too many detection events for exhaustive matching."""


class InsufficientData(ToricUFError, ValueError):
    """Not enough failures to form an estimate."""


class NoCrossing(ToricUFError, ValueError):
    """Fitted logical-error curves do not cross inside the grid."""


class ShotError(ToricUFError):
    """Wraps a decoder error with the index of the offending shot."""

    def __init__(self, shot_index: int, cause: Exception):
        super().__init__(f"shot {shot_index}: {cause!r}")
        self.shot_index = shot_index
        self.cause = cause
