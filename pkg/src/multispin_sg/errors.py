"""Exception hierarchy shared by all modules.

The CLI maps :class:`InvalidScenarioError` to exit status 2 and every other
:class:`SimulationError` to exit status 3.
"""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(SimulationError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class InvalidScenarioError(SimulationError, ValueError):
    """A scenario or data file fails schema or physical validation."""


class CapacityError(SimulationError):
    """A problem size exceeds what a dense or brute-force routine supports."""


class ConsistencyError(SimulationError):
    """An internal self-check (linearity, recombination, ...) failed."""


class NumericError(SimulationError):
    """A numerical procedure (quadrature, root bracketing) did not converge."""


class RangeError(SimulationError, ValueError):
    """An input lies outside the validity range of an empirical fit or table."""
