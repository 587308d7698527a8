"""Decoherence channels other than spontaneous collapse, and the temperatures they allow."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.optimize import brentq

from .constants import AMU, C_LIGHT, HBAR, KB, ZETA9
from .errors import InvalidArgumentError, RangeError
from .materials import MaterialParams

H2_MASS = 2.0 * AMU
TEMP_BRACKET = (0.1, 300.0)
TEMP_TOL = 0.01
GAS_SURVIVAL_DIVISOR = 3.0


@dataclass(frozen=True)
class FlipStats:
    p_flip: float
    dzeta_bound: float


def flip_stats(N: int, T1: float, T_tot: float, chi: float, x0: float) -> FlipStats:
    """Probability of at least one longitudinal flip, and the worst recombination offset."""
    if not T1 > 0:
        raise InvalidArgumentError("T1 must be positive")
    return FlipStats(p_flip=-math.expm1(-T_tot * N / T1), dzeta_bound=4.0 * chi / x0)


@dataclass(frozen=True)
class DephasingRatio:
    full: float
    large_motion_limit: float


def dephasing_ratio_closed(Gamma: float, T_tot: float, chi_over_x0: float, n_bar: float) -> DephasingRatio:
    """Reference closed form for the magnetisation ratio under pure dephasing.

    The large-motion limit drops the motional Gaussian and lower-bounds the
    full expression. See :func:`dephasing_ratio_derived` for the form that the
    dense reference actually reproduces.
    """
    if Gamma < 0:
        raise InvalidArgumentError("Gamma must be non-negative")
    a = math.exp(-4.0 * Gamma * T_tot)
    b = math.exp(-2.0 * Gamma * T_tot)
    e = math.exp(-64.0 * (0.5 + n_bar) * chi_over_x0**2)
    return DephasingRatio(0.5 * (a - a * e + b + b * e), 0.5 * (a + b))


def dephasing_ratio_derived(Gamma: float, T_tot: float, chi_over_x0: float, n_bar: float) -> DephasingRatio:
    """Closed form matching the Kraus evolution for the short modified timing.

    Coherent spin components spend a quarter of ``T_tot`` (one branch) or half
    of it (the other) exposed to dephasing. Branches whose endpoints differ by
    four displacement units, i.e. 4 chi/x0 in the convention x0 = sqrt(hbar/2 m Omega),
    lose their cross term to the thermal Gaussian.
    """
    if Gamma < 0:
        raise InvalidArgumentError("Gamma must be non-negative")
    a = math.exp(-Gamma * T_tot)
    b = math.exp(-0.5 * Gamma * T_tot)
    e = math.exp(-16.0 * (0.5 + n_bar) * chi_over_x0**2)
    return DephasingRatio(0.5 * (a - a * e + b + b * e), 0.5 * (a + b))


def dephasing_oracle(N: int, Gamma: float, times, derived) -> float:
    """Dense 2^N Kraus evolution for the short modified timing (t1 = t21 = pi/Omega, t22 = 0)."""
    from .oracles import dephasing_ratio_dense

    ref = math.pi / derived.Omega
    ok = (math.isclose(times.t1, ref, rel_tol=1e-9) and math.isclose(times.t21, ref, rel_tol=1e-9)
          and abs(times.t22) <= 1e-9 * ref)
    if not ok:
        raise InvalidArgumentError("dephasing oracle needs t1 = t21 = pi/Omega and t22 = 0")
    return dephasing_ratio_dense(N, Gamma, derived.Omega, derived.chi / derived.x0, derived.n_bar)


@dataclass(frozen=True)
class GasSurvival:
    rate: float
    p_none: float


def gas_survival(P: float, r: float, T_g: float, T_tot: float, m_g: float = H2_MASS) -> GasSurvival:
    """Collision rate with residual gas and the probability of no collision during a run."""
    if P < 0 or not (r > 0 and T_g > 0 and m_g > 0 and T_tot >= 0):
        raise InvalidArgumentError("gas_survival needs P >= 0 and positive r, T_g, m_g")
    v_mean = math.sqrt(8.0 * KB * T_g / (math.pi * m_g))
    rate = 8.0 * math.pi * P * r * r / (m_g * v_mean)
    return GasSurvival(rate, math.exp(-rate * T_tot / GAS_SURVIVAL_DIVISOR))


# ---------------------------------------------------------------------------
# thermal photons


def r_bb(T: float) -> float:
    """Localisation distance of thermal photons, half the thermal wavelength."""
    if not T > 0:
        raise InvalidArgumentError("temperature must be positive")
    return math.pi ** (2.0 / 3.0) * HBAR * C_LIGHT / (2.0 * KB * T)


def _clausius(eps: complex) -> complex:
    return (eps - 1.0) / (eps + 2.0)


def xi_scatter(T_env: float, r: float, eps: complex) -> float:
    strength = (math.factorial(8) * 8.0 * ZETA9 * C_LIGHT * r**6 / (9.0 * math.pi)
                * (KB * T_env / (HBAR * C_LIGHT)) ** 9 * _clausius(eps).real ** 2)
    return 4.0 * r_bb(T_env) ** 2 * strength


def xi_emission(T: float, r: float, eps: complex) -> float:
    """Localisation rate from emission (bulk temperature) or absorption (environment temperature)."""
    strength = (16.0 * math.pi**5 * C_LIGHT * r**3 / 189.0
                * (KB * T / (HBAR * C_LIGHT)) ** 6 * _clausius(eps).imag)
    return 4.0 * r_bb(T) ** 2 * strength


@dataclass(frozen=True)
class BlackbodyRates:
    r_bb_bulk: float
    r_bb_env: float
    xi_scatter: float
    xi_emission: float
    xi_absorption: float

    @property
    def xi_total(self) -> float:
        return self.xi_scatter + self.xi_emission + self.xi_absorption


def blackbody(T_bulk: float, T_env: float, r: float, eps: complex) -> BlackbodyRates:
    return BlackbodyRates(
        r_bb_bulk=r_bb(T_bulk),
        r_bb_env=r_bb(T_env),
        xi_scatter=xi_scatter(T_env, r, eps),
        xi_emission=xi_emission(T_bulk, r, eps),
        xi_absorption=xi_emission(T_env, r, eps),
    )


@dataclass(frozen=True)
class TemperatureLimit:
    T: float
    at_boundary: bool


def max_internal_temperature(xi_csl: float, r: float, eps: complex,
                             T_env: float | None = None) -> TemperatureLimit:
    """Highest temperature with thermal-photon localisation below ``xi_csl``.

    With ``T_env`` omitted, bulk and environment share the temperature and the
    criterion is 2 xi_em(T) < xi_csl. Otherwise absorption is fixed by ``T_env``
    and emission alone is solved for.
    """
    if not xi_csl > 0:
        raise InvalidArgumentError("xi_csl must be positive")
    lo, hi = TEMP_BRACKET
    if T_env is None:
        def excess(T):
            return 2.0 * xi_emission(T, r, eps) - xi_csl
    else:
        absorbed = xi_emission(T_env, r, eps)

        def excess(T):
            return xi_emission(T, r, eps) + absorbed - xi_csl

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo >= 0:
        return TemperatureLimit(lo, True)
    if f_hi <= 0:
        return TemperatureLimit(hi, True)
    return TemperatureLimit(brentq(excess, lo, hi, xtol=TEMP_TOL), False)


# ---------------------------------------------------------------------------
# sublimation


def vapor_pressure(T: float, material: MaterialParams) -> float:
    lo, hi = material.vapor_range
    if not lo <= T <= hi:
        raise RangeError(f"vapour-pressure fit valid for {lo} K <= T <= {hi} K, got {T} K")
    T0, p0 = material.vapor_anchor
    poly = sum(a * T**i for i, a in enumerate(material.vapor_A))
    return p0 * math.exp((1.0 - T0 / T) * math.exp(poly))


@dataclass(frozen=True)
class Sublimation:
    rate: float
    mass_drift: float
    vapor_pressure: float


def sublimation_stats(r: float, T: float, material: MaterialParams) -> Sublimation:
    """Molecule emission rate and the fractional mass-loss rate (negative)."""
    p = vapor_pressure(T, material)
    m = material.m_molecule
    rate = 4.0 * math.pi * r * r * p / math.sqrt(2.0 * math.pi * m * KB * T)
    drift = -math.sqrt(m / (2.0 * math.pi * KB * T)) * 3.0 * p / (material.rho * r)
    return Sublimation(rate, drift, p)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseBudgetReport:
    p_flip: float
    flip_dzeta_bound: float
    dephasing_ratio: float
    gas_rate: float
    p_no_collision: float
    r_bb: float
    xi_bb_scatter: float
    xi_bb_emission: float
    xi_bb_absorption: float
    T_i_max: float
    sublimation_rate: float
    vapor_pressure: float
    mass_drift_rate: float

    def __post_init__(self) -> None:
        for name in ("p_flip", "dephasing_ratio", "p_no_collision"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise RangeError(f"{name} = {v} is not a probability")
        for name in ("gas_rate", "xi_bb_scatter", "xi_bb_emission", "xi_bb_absorption", "sublimation_rate"):
            if getattr(self, name) < 0:
                raise RangeError(f"{name} must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)


def noise_budget(N: int, T_tot: float, derived, material: MaterialParams, xi_csl: float, *,
                 T1: float, T2: float, pressure: float, T_gas: float, T_env: float, T_bulk: float,
                 T_sublimation: float, eps: complex | None = None) -> NoiseBudgetReport:
    """Evaluate every channel for one scenario."""
    eps = material.epsilon_thermal if eps is None else eps
    fl = flip_stats(N, T1, T_tot, derived.chi, derived.x0)
    deph = dephasing_ratio_closed(1.0 / T2, T_tot, derived.chi / derived.x0, derived.n_bar)
    gas = gas_survival(pressure, derived.radius, T_gas, T_tot)
    bb = blackbody(T_bulk, T_env, derived.radius, eps)
    tmax = max_internal_temperature(xi_csl, derived.radius, eps)
    sub = sublimation_stats(derived.radius, T_sublimation, material)
    return NoiseBudgetReport(
        p_flip=fl.p_flip, flip_dzeta_bound=fl.dzeta_bound, dephasing_ratio=deph.full,
        gas_rate=gas.rate, p_no_collision=gas.p_none, r_bb=bb.r_bb_env,
        xi_bb_scatter=bb.xi_scatter, xi_bb_emission=bb.xi_emission, xi_bb_absorption=bb.xi_absorption,
        T_i_max=tmax.T, sublimation_rate=sub.rate, vapor_pressure=sub.vapor_pressure,
        mass_drift_rate=abs(sub.mass_drift),
    )
