"""Trap and coupling parameters derived from a scenario and a material."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import G_EARTH, HBAR, KB, MU0
from .errors import InvalidArgumentError, InvalidScenarioError
from .materials import MaterialParams

RWA_FACTOR = 100.0


@dataclass(frozen=True)
class DerivedParams:
    """Everything the dynamics needs, computed once from a scenario.

    ``chi`` is the equilibrium shift per unit of collective spin, ``eta`` the
    spin-spin energy scale of the trap Hamiltonian and ``lambda_coupling`` the
    spin-motion coupling rate in units of the zero-point width.
    """

    Omega: float
    chi: float
    eta: float
    x0: float
    p0: float
    lambda_coupling: float
    mass: float
    volume: float
    N_spins: int
    n_bar: float
    B_prime: float
    radius: float
    gamma_p: float

    @property
    def g(self) -> float:
        """Dimensionless displacement per unit label, chi / (2 x0)."""
        return self.chi / (2.0 * self.x0)

    @property
    def omega_over_4lambda(self) -> float:
        return self.Omega / (4.0 * self.lambda_coupling)

    def with_chi_scaled(self, factor: float) -> "DerivedParams":
        """Same trap with the spin gyromagnetic ratio scaled by ``factor``.

        chi, eta and the coupling follow gamma; Omega, x0 and the mass do not.
        """
        from dataclasses import replace

        return replace(
            self,
            chi=self.chi * factor,
            eta=self.eta * factor**2,
            lambda_coupling=self.lambda_coupling * factor,
            gamma_p=self.gamma_p * factor,
        )


def sphere_volume(radius: float) -> float:
    return 4.0 / 3.0 * math.pi * radius**3


def bose_occupation(Omega: float, T_cm: float) -> float:
    if T_cm < 0:
        raise InvalidScenarioError("centre-of-mass temperature must be non-negative")
    if T_cm == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * Omega / (KB * T_cm))


def derive_from_values(
    radius: float,
    B_prime: float,
    material: MaterialParams,
    T_cm: float = 0.0,
) -> DerivedParams:
    if not radius > 0:
        raise InvalidScenarioError(f"radius must be positive, got {radius!r}")
    if not B_prime > 0:
        raise InvalidScenarioError(f"gradient must be positive, got {B_prime!r}")
    chiV = abs(material.chi_V)
    if chiV == 0:
        raise InvalidScenarioError("material susceptibility must be non-zero")
    gam = material.gamma_p
    V = sphere_volume(radius)
    m = material.rho * V
    Omega = math.sqrt(chiV / (material.rho * MU0)) * B_prime
    chi = HBAR * gam * MU0 / (2.0 * chiV * V * B_prime)
    eta = HBAR**2 * gam**2 * MU0 / (8.0 * chiV * V)
    x0 = math.sqrt(HBAR / (2.0 * m * Omega))
    return DerivedParams(
        Omega=Omega,
        chi=chi,
        eta=eta,
        x0=x0,
        p0=HBAR / (2.0 * x0),
        lambda_coupling=0.5 * gam * B_prime * x0,
        mass=m,
        volume=V,
        N_spins=int(round(material.hydrogen_density * V)),
        n_bar=bose_occupation(Omega, T_cm),
        B_prime=B_prime,
        radius=radius,
        gamma_p=gam,
    )


def derive_params(config, material: MaterialParams) -> DerivedParams:
    """Derived trap parameters for a :class:`~multispin_sg.scenario.ScenarioConfig`."""
    return derive_from_values(config.radius, config.B_prime, material, config.T_cm)


def levitation_field_product(material: MaterialParams) -> float:
    """Minimum B*B' (T^2/m) that balances gravity: mu0 g rho / |chi_V|."""
    if material.chi_V >= 0:
        raise InvalidArgumentError("levitation requires a diamagnetic material (chi_V < 0)")
    return MU0 * G_EARTH * material.rho / abs(material.chi_V)


def fringe_gradient(l: int, volume: float, material: MaterialParams) -> float:
    """Gradient at which the phase unit equals l*pi for the t1 = pi/Omega timing."""
    if int(l) != l or l < 1:
        raise InvalidArgumentError(f"fringe order l must be a positive integer, got {l!r}")
    if not volume > 0:
        raise InvalidArgumentError("volume must be positive")
    chiV = abs(material.chi_V)
    return HBAR * material.gamma_p**2 / (l * volume) * math.sqrt(MU0**3 * material.rho / chiV**3)


def geometric_phase_unit(derived: DerivedParams, t1: float, T_tot: float) -> float:
    """Per-(2 kappa - N)^2 phase in the printed convention g^2 sin(Omega t1) + eta T/hbar.

    :func:`phase_unit_exact` gives the value that the segment propagators
    actually accumulate; the two differ, see the decisions ledger.
    """
    if not (T_tot >= t1 > 0):
        raise InvalidArgumentError("need T_tot >= t1 > 0")
    return derived.g**2 * math.sin(derived.Omega * t1) + derived.eta * T_tot / HBAR


def phase_unit_exact(derived: DerivedParams, t1: float, T_tot: float) -> float:
    """Phase per unit label squared accumulated by the minimal protocol.

    Equals 4 g^2 sin(Omega t1) - eta T_tot / hbar for recombining times; the
    trajectory module composes segment propagators to the same value.
    """
    if not (T_tot >= t1 > 0):
        raise InvalidArgumentError("need T_tot >= t1 > 0")
    return 4.0 * derived.g**2 * math.sin(derived.Omega * t1) - derived.eta * T_tot / HBAR


def phase_mod_pi(phi: float) -> float:
    """Distance of phi from the nearest multiple of pi, in (-pi/2, pi/2]."""
    r = math.remainder(phi, math.pi)
    return r


@dataclass(frozen=True)
class RWACheck:
    Omega: float
    Gamma: float
    omega0: float
    rwa_ok: bool


def quadrupole_rwa_check(derived: DerivedParams, B0: float, factor: float = RWA_FACTOR) -> RWACheck:
    if B0 < 0:
        raise InvalidArgumentError("bias field must be non-negative")
    Gamma = derived.gamma_p * derived.B_prime * derived.x0
    omega0 = derived.gamma_p * B0
    ok = B0 > 0 and omega0 >= factor * max(Gamma, derived.Omega)
    return RWACheck(derived.Omega, Gamma, omega0, bool(ok))


@dataclass(frozen=True)
class Micromotion:
    displacement_amp: float
    momentum_amp_as_position: float
    field_excursion_displacement: float
    field_excursion_momentum: float

    @property
    def field_excursions(self) -> tuple[float, float]:
        return (self.field_excursion_displacement, self.field_excursion_momentum)


def micromotion(derived: DerivedParams, Omega_M: float, N: int | None = None) -> Micromotion:
    """Steady-state response to a continuous spin drive at Rabi rate Omega_M.

    Amplitudes are single-sided; double them for peak-to-peak extents.
    """
    Om = derived.Omega
    if not Omega_M > Om:
        raise InvalidArgumentError("drive must be faster than the trap (Omega_M > Omega)")
    n = derived.N_spins if N is None else N
    shift = n * derived.chi
    disp = abs(shift * Om**2 / (Om**2 - Omega_M**2))
    p_init = derived.mass * shift * Om**2 / Omega_M
    mom = p_init / (derived.mass * Om)
    return Micromotion(disp, mom, derived.B_prime * disp, derived.B_prime * mom)
