"""Exception types shared across the package."""


class ConstraintViolation(ValueError):
    """A parameter bundle violates one of its admissibility constraints."""


class DomainError(ValueError):
    """A barrier was evaluated outside its space-time domain of definition."""


class LinearSolveFailure(RuntimeError):
    """The implicit diffusion system could not be solved."""


class IterateBelowFloor(RuntimeError):
    """A fixed-point iterate dipped below its guaranteed lower bound."""


class SimulationFailed(RuntimeError):
    """A simulation aborted before reaching its target time."""


class ParseError(ValueError):
    """A run-configuration file could not be parsed or validated."""
