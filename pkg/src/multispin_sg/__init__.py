"""Multi-spin Stern-Gerlach interferometry with levitated diamagnetic nanoparticles.

Spin-motion dynamics, collapse-model decoherence observables, exclusion scans,
noise budget, magic-angle-spinning feasibility and position readout.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConsistencyError,
    InvalidArgumentError,
    InvalidScenarioError,
    NumericError,
    RangeError,
    SimulationError,
)

__all__ = [
    "__version__",
    "SimulationError",
    "InvalidArgumentError",
    "InvalidScenarioError",
    "CapacityError",
    "ConsistencyError",
    "NumericError",
    "RangeError",
]
