"""CODATA physical constants used throughout the package."""

from __future__ import annotations

from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar
    mu0: float = _sc.mu_0
    k_B: float = _sc.k
    c: float = _sc.c
    g: float = _sc.g
    # reference mass of the collapse model
    m_nucleon: float = _sc.m_u
    amu: float = _sc.m_u

    def __post_init__(self) -> None:
        for name in ("hbar", "mu0", "k_B", "c", "g", "m_nucleon", "amu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"physical constant {name} must be positive")


CONST = PhysicalConstants()

HBAR = CONST.hbar
MU0 = CONST.mu0
KB = CONST.k_B
C_LIGHT = CONST.c
G_EARTH = CONST.g
M0 = CONST.m_nucleon
AMU = CONST.amu

# Riemann zeta(9), 20 significant digits
ZETA9 = 1.0020083928260822144
