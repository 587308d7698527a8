"""Magic-angle spinning: dipolar couplings, coherence times, optical spin-up and laser heating."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import epsilon_0
from scipy.optimize import brentq

from .constants import C_LIGHT, HBAR, MU0
from .errors import InvalidArgumentError, InvalidScenarioError, RangeError
from .materials import MaterialParams

G_DEFAULT = 0.11
SPIN_UP_CONSTANT = 8.15e-11  # m^4 / (W s^2)
GEOMETRY_FACTOR = 0.1
MAGIC_ANGLE = math.acos(1.0 / math.sqrt(3.0))


# ---------------------------------------------------------------------------
# lattice input


@dataclass(frozen=True)
class LatticeGeometry:
    cell_vectors: np.ndarray  # rows are the three cell vectors, m
    hydrogen_positions: np.ndarray  # fractional coordinates, shape (n, 3)
    neighbor_shell: int = 1

    def __post_init__(self) -> None:
        cell = np.asarray(self.cell_vectors, dtype=float)
        frac = np.asarray(self.hydrogen_positions, dtype=float).reshape(-1, 3)
        if cell.shape != (3, 3) or abs(np.linalg.det(cell)) < 1e-60:
            raise InvalidScenarioError("cell vectors must be three linearly independent 3-vectors")
        if frac.size == 0 or np.any(frac < 0) or np.any(frac >= 1):
            raise InvalidScenarioError("fractional coordinates must lie in [0, 1)")
        if self.neighbor_shell < 0:
            raise InvalidScenarioError("neighbor_shell must be non-negative")
        object.__setattr__(self, "cell_vectors", cell)
        object.__setattr__(self, "hydrogen_positions", frac)

    def cartesian(self) -> np.ndarray:
        return self.hydrogen_positions @ self.cell_vectors

    def rotated(self, R: np.ndarray) -> "LatticeGeometry":
        return LatticeGeometry(self.cell_vectors @ np.asarray(R).T, self.hydrogen_positions, self.neighbor_shell)


def load_lattice(path: str | Path | None = None, neighbor_shell: int = 1) -> LatticeGeometry:
    """Read a lattice CSV with rows ``kind,x,y,z``.

    ``kind`` is ``cell`` for the three cell vectors (metres, in order) and
    ``H`` for hydrogen sites in fractional coordinates. Lines starting with
    ``#`` are ignored. ``None`` loads the bundled two-spin test lattice.
    """
    if path is None:
        text = resources.files("multispin_sg").joinpath("data/two_spin_lattice.csv").read_text()
        source = "two_spin_lattice.csv"
    else:
        text = Path(path).read_text()
        source = str(path)
    cell, sites = [], []
    rows = (ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#"))
    for lineno, row in enumerate(csv.reader(rows), start=1):
        if row[0].strip().lower() == "kind":
            continue
        if len(row) != 4:
            raise InvalidScenarioError(f"{source}: row {lineno} needs kind,x,y,z")
        try:
            vec = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise InvalidScenarioError(f"{source}: row {lineno}: {exc}") from exc
        kind = row[0].strip()
        if kind == "cell":
            cell.append(vec)
        elif kind == "H":
            sites.append(vec)
        else:
            raise InvalidScenarioError(f"{source}: row {lineno}: unknown kind {kind!r}")
    if len(cell) != 3:
        raise InvalidScenarioError(f"{source}: expected three cell rows, found {len(cell)}")
    return LatticeGeometry(np.array(cell), np.array(sites), neighbor_shell)


def pair_coupling(r_vec: np.ndarray, B_direction: np.ndarray, gamma: float) -> np.ndarray:
    """Secular dipolar coupling in rad/s for each row of ``r_vec``."""
    dist = np.linalg.norm(r_vec, axis=-1)
    cos_t = (r_vec @ B_direction) / dist
    return MU0 * gamma**2 * HBAR / (4.0 * math.pi * dist**3) * (1.0 - 3.0 * cos_t**2)


def d_rss(lattice: LatticeGeometry, B_direction, material: MaterialParams) -> float:
    """Root-sum-square dipolar coupling, averaged over the spins of the home cell."""
    b = np.asarray(B_direction, dtype=float)
    b = b / np.linalg.norm(b)
    home = lattice.cartesian()
    s = lattice.neighbor_shell
    shifts = np.array([(i, j, k) for i in range(-s, s + 1) for j in range(-s, s + 1) for k in range(-s, s + 1)],
                      dtype=float) @ lattice.cell_vectors
    partners = (home[None, :, :] + shifts[:, None, :]).reshape(-1, 3)
    scale = float(np.max(np.linalg.norm(lattice.cell_vectors, axis=1)))
    out = []
    for j, rj in enumerate(home):
        diff = partners - rj
        dist = np.linalg.norm(diff, axis=1)
        self_mask = dist < 1e-9 * scale
        if self_mask.sum() != 1:
            raise InvalidScenarioError(f"coincident hydrogen sites near site {j}")
        d = pair_coupling(diff[~self_mask], b, material.gamma_p)
        out.append(math.sqrt(float(np.sum(d * d))))
    return float(np.mean(out))


def mas_t2(nu_mas: float, d_rss_value: float, G: float = G_DEFAULT) -> float:
    if not (nu_mas > 0 and d_rss_value > 0 and G > 0):
        raise InvalidArgumentError("mas_t2 needs positive inputs")
    return nu_mas / (math.pi * G * (d_rss_value / (2.0 * math.pi)) ** 2)


def max_rotation_frequency(r: float, material: MaterialParams) -> float:
    """Tensile-strength limit on the spinning frequency of a sphere, in Hz."""
    if not r > 0:
        raise InvalidArgumentError("radius must be positive")
    return math.sqrt(material.sigma_UTS / (r * r * material.rho)) / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# optical spin-up


def optical_torque(E_amp, n_diag, V: float, wavelength: float) -> np.ndarray:
    """Cycle-averaged torque on a small birefringent particle, principal axes along x, y, z.

    Only the real part of each polarisability is kept.
    """
    if not wavelength > 0:
        raise InvalidArgumentError("wavelength must be positive")
    E = np.asarray(E_amp, dtype=complex)
    eps = np.asarray(n_diag, dtype=float) ** 2
    chi = 3.0 * (eps - 1.0) / (eps + 2.0)
    k = 2.0 * math.pi / wavelength
    Ec = E.conj()
    first = np.cross(chi * Ec, E).real
    second = (np.cross(chi**2 * Ec, E) - np.cross(chi * Ec, chi * E)).imag
    return epsilon_0 * V / 2.0 * first + epsilon_0 * k**3 * V**2 / (12.0 * math.pi) * second


def spin_up_constant(n_diag, rho: float) -> float:
    """Spin-up constant implied by the torque of circular light in the x-y plane.

    Uses I = 2/5 m r^2 and the intensity c eps0 |E0|^2 / 2; the radius cancels.
    """
    r, lam = 1.0, 1.0
    V = 4.0 / 3.0 * math.pi * r**3
    E0 = 1.0
    E = E0 / math.sqrt(2.0) * np.array([1.0, 1j, 0.0])
    tau = abs(optical_torque(E, n_diag, V, lam)[2])
    inertia = 0.4 * rho * V * r * r
    intensity = C_LIGHT * epsilon_0 * E0**2 / 2.0
    return tau / inertia * lam**3 / (r * intensity)


def spin_up(r: float, wavelength: float, intensity: float, t: float, a: float = SPIN_UP_CONSTANT) -> float:
    if not (r > 0 and wavelength > 0 and intensity >= 0 and t >= 0):
        raise InvalidArgumentError("spin_up needs positive r, wavelength and non-negative I, t")
    return a * r / wavelength**3 * intensity * t


# ---------------------------------------------------------------------------
# laser heating


@dataclass(frozen=True)
class HeatCapacityTable:
    T: np.ndarray
    c_m: np.ndarray

    def __post_init__(self) -> None:
        T = np.asarray(self.T, dtype=float)
        c = np.asarray(self.c_m, dtype=float)
        if T.ndim != 1 or T.shape != c.shape or T.size < 2:
            raise InvalidScenarioError("heat-capacity table needs matching T and c_m columns")
        if np.any(np.diff(T) <= 0):
            raise InvalidScenarioError("heat-capacity temperatures must be strictly increasing")
        if np.any(c <= 0):
            raise InvalidScenarioError("heat capacities must be positive")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "c_m", c)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (c[1:] + c[:-1]) * np.diff(T))))
        object.__setattr__(self, "_cumulative", cum)

    def enthalpy(self, T: float) -> float:
        """Trapezoid integral of c_m from the first table point to ``T`` (J/kg)."""
        if not self.T[0] <= T <= self.T[-1]:
            raise RangeError(f"T = {T} K outside heat-capacity table [{self.T[0]}, {self.T[-1]}] K")
        i = min(int(np.searchsorted(self.T, T, side="right")) - 1, self.T.size - 2)
        dT = T - self.T[i]
        slope = (self.c_m[i + 1] - self.c_m[i]) / (self.T[i + 1] - self.T[i])
        return float(self._cumulative[i] + self.c_m[i] * dT + 0.5 * slope * dT * dT)


def load_heat_capacity(path: str | Path | None = None) -> HeatCapacityTable:
    """Two-column CSV ``T_K,c_m_J_per_kgK``; ``None`` loads the bundled placeholder table."""
    if path is None:
        text = resources.files("multispin_sg").joinpath("data/heat_capacity_placeholder.csv").read_text()
    else:
        text = Path(path).read_text()
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    data = []
    for row in csv.reader(rows):
        try:
            data.append((float(row[0]), float(row[1])))
        except ValueError:
            continue  # header
    if not data:
        raise InvalidScenarioError("heat-capacity file has no numeric rows")
    arr = np.array(data)
    return HeatCapacityTable(arr[:, 0], arr[:, 1])


def heating_energy(nu_target: float, r: float, wavelength: float, eps_optical: complex,
                   material: MaterialParams, a: float = SPIN_UP_CONSTANT) -> float:
    """Absorbed energy per unit mass while spinning up to ``nu_target`` (J/kg)."""
    cm = (eps_optical - 1.0) / (eps_optical + 2.0)
    return 6.0 * math.pi * nu_target * wavelength**2 / (a * r * material.rho) * cm.imag


def heating_final_temperature(T_i: float, nu_target: float, r: float, wavelength: float,
                              eps_optical: complex, c_table: HeatCapacityTable,
                              material: MaterialParams) -> float:
    """Internal temperature reached after laser spin-up; independent of the laser intensity."""
    q = heating_energy(nu_target, r, wavelength, eps_optical, material)
    h0 = c_table.enthalpy(T_i)
    if q <= 0:
        return T_i
    top = c_table.enthalpy(c_table.T[-1]) - h0
    if q > top:
        raise RangeError(f"heating needs {q:.6g} J/kg but the table only provides {top:.6g} J/kg above T_i")
    return float(brentq(lambda T: c_table.enthalpy(T) - h0 - q, T_i, c_table.T[-1], xtol=1e-10))


# ---------------------------------------------------------------------------
# pulse bandwidths


@dataclass(frozen=True)
class PulseBandwidths:
    Omega_MAS_max: float
    dB_particle: float
    dOmega_particle: float
    dOmega_wavepacket: float


def pulse_bandwidths(r: float, B_prime: float, material: MaterialParams,
                     geometry_factor: float = GEOMETRY_FACTOR) -> PulseBandwidths:
    """Spectral spreads that RF pulses must cover under rotation and wavepacket expansion (rad/s)."""
    if not (r > 0 and B_prime >= 0 and geometry_factor > 0):
        raise InvalidArgumentError("pulse_bandwidths needs positive r and geometry factor")
    dB = geometry_factor * B_prime * 2.0 * r
    return PulseBandwidths(
        Omega_MAS_max=material.gamma_p * B_prime * r,
        dB_particle=dB,
        dOmega_particle=material.gamma_p * dB,
        dOmega_wavepacket=2.0 * math.pi * 2.0 * r ** (-1.5) * 1e-4,
    )
