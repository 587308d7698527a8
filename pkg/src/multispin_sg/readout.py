"""Mapping ensemble polarisation to centre-of-mass displacement and to triplet Zeeman shifts."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError, NumericError

NODE_THRESHOLD = 1e-3
# reproduces a shift of 1.8e13 rad/s per metre at B' = 1e5 T/m
EFFECTIVE_GAMMA = 1.8e8
TRIPLET_LIFETIME = 50e-6


def heisenberg_position(t: float, derived, Z: float) -> float:
    """Deterministic shift of the dimensionless position after time ``t`` for polarisation ``Z``."""
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    return 4.0 * derived.lambda_coupling * Z / derived.Omega * math.sin(derived.Omega * t / 2.0) ** 2


def extract_Z(dX: float, t: float, derived, threshold: float = NODE_THRESHOLD) -> float:
    s2 = math.sin(derived.Omega * t / 2.0) ** 2
    if s2 < threshold:
        raise NumericError(f"sin^2(Omega t / 2) = {s2:.3g} below {threshold}; Z is ill-conditioned")
    return derived.Omega * dX / (4.0 * derived.lambda_coupling * s2)


def displacement_signal(derived, N: int, ratio: float) -> float:
    """Difference in final displacement between ideal and measured magnetisation ratio (m).

    Carries the factor N so that the result refers to the whole ensemble polarisation.
    """
    if not 0.0 <= ratio <= 1.0:
        raise InvalidArgumentError("ratio must lie in [0, 1]")
    return derived.x0 * 4.0 * derived.lambda_coupling / derived.Omega * N * (1.0 - ratio)


@dataclass(frozen=True)
class ZeemanReadout:
    shift: float
    linewidth: float
    resolvable: bool


def zeeman_readout(dx: float, B_prime: float, effective_gamma: float = EFFECTIVE_GAMMA,
                   triplet_lifetime: float = TRIPLET_LIFETIME) -> ZeemanReadout:
    if dx < 0 or not (B_prime > 0 and effective_gamma > 0 and triplet_lifetime > 0):
        raise InvalidArgumentError("zeeman_readout needs dx >= 0 and positive field, gamma and lifetime")
    shift = effective_gamma * B_prime * dx
    width = 1.0 / triplet_lifetime
    return ZeemanReadout(shift, width, shift > width)


def resolvable_ratio(derived, N: int, effective_gamma: float = EFFECTIVE_GAMMA,
                     triplet_lifetime: float = TRIPLET_LIFETIME) -> float:
    """Largest magnetisation ratio whose displacement signal still exceeds one Zeeman linewidth.

    Serves as the experimental ratio for exclusion scans: any collapse model
    predicting a ratio below this value would be detected.
    """
    dx_min = 1.0 / (triplet_lifetime * effective_gamma * derived.B_prime)
    full = displacement_signal(derived, N, 0.0)
    return max(0.0, 1.0 - dx_min / full)


@dataclass(frozen=True)
class ReadoutResult:
    X_shift: float
    Z_estimate: float
    dx_dis: float
    zeeman_shift: float
    resolvable: bool


def readout(derived, N: int, ratio: float, t: float, effective_gamma: float = EFFECTIVE_GAMMA,
            triplet_lifetime: float = TRIPLET_LIFETIME) -> ReadoutResult:
    """Chain the three mappings for a fully polarised ensemble scaled by ``ratio``."""
    Z = N * ratio
    dX = heisenberg_position(t, derived, Z)
    dx = displacement_signal(derived, N, ratio)
    z = zeeman_readout(dx, derived.B_prime, effective_gamma, triplet_lifetime)
    return ReadoutResult(dX, extract_Z(dX, t, derived), dx, z.shift, z.resolvable)
