"""Exception hierarchy shared by all pwmcycle modules."""


class PwmCycleError(Exception):
    """Base class for every error raised by this package."""


class ModelError(PwmCycleError):
    """Invalid converter description (bad parameter, inconsistent dimensions)."""


class ConfigError(PwmCycleError):
    """Configuration file cannot be parsed or violates the schema."""


class PropagationOverflowError(PwmCycleError):
    """Matrix exponential produced a non-finite result for a segment."""


class SingularMapError(PwmCycleError):
    """(I - Pi) is singular or near-singular: periodic solution not unique or marginal."""


class SolverError(PwmCycleError):
    """Periodic-operating-point solve failed to converge or saturated."""


class ModulatorError(PwmCycleError):
    """Uncompensated modulator: a K/Se division was requested with Se ~ 0."""


class DegenerateEliminationError(PwmCycleError):
    """The timing-elimination operator is singular at this operating point."""


class PoleError(PwmCycleError):
    """Evaluation requested exactly at a pole of the operator."""


class EventNotReachedError(PwmCycleError):
    """No comparator crossing inside the allowed interval (pulse skipping)."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class DivergenceError(PwmCycleError):
    """Simulated state norm exceeded the divergence threshold."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class EdgeCollisionError(PwmCycleError):
    """Edge shifts violate the pulse ordering (edges crossing)."""
