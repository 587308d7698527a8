"""Material data records and their JSON loader."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .constants import AMU
from .errors import InvalidScenarioError

_MATERIAL_KEYS = {
    "schema_version",
    "name",
    "chi_V",
    "rho",
    "sigma_UTS",
    "hydrogen_density",
    "gamma_p_hz_per_tesla",
    "m_molecule_amu",
    "refractive_indices",
    "epsilon_thermal",
    "refractive_index_optical",
    "vapor_A",
    "vapor_anchor",
    "vapor_range",
    "triplet_lifetime",
}
_SUPPORTED_SCHEMA = 1


@dataclass(frozen=True)
class MaterialParams:
    """Bulk properties of the levitated particle (SI units throughout).

    ``gamma_p`` is angular, in rad/(s T). ``epsilon_thermal`` is the dielectric
    constant in the thermal-photon band and ``epsilon_optical`` the one at the
    spin-up laser wavelength.
    """

    chi_V: float
    rho: float
    sigma_UTS: float
    hydrogen_density: float
    gamma_p: float
    m_molecule: float
    refractive_indices: tuple[float, float, float]
    epsilon_thermal: complex
    epsilon_optical: complex
    vapor_A: tuple[float, ...]
    vapor_anchor: tuple[float, float]
    vapor_range: tuple[float, float] = (150.0, 353.37)
    triplet_lifetime: float = 50e-6
    name: str = "custom"
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not (self.rho > 0 and self.sigma_UTS > 0 and self.hydrogen_density > 0):
            raise InvalidScenarioError("rho, sigma_UTS and hydrogen_density must be positive")
        if len(self.vapor_A) < 1:
            raise InvalidScenarioError("vapor_A needs at least one coefficient")
        if len(self.refractive_indices) != 3:
            raise InvalidScenarioError("refractive_indices needs three entries")

    @property
    def is_diamagnetic(self) -> bool:
        return self.chi_V < 0

    def with_overrides(self, **kw) -> "MaterialParams":
        return replace(self, **kw)


def _pair(value, key: str) -> tuple[float, float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise InvalidScenarioError(f"material key '{key}' must be a two-element list")
    return float(value[0]), float(value[1])


def material_from_dict(data: dict, source: str = "<dict>") -> MaterialParams:
    unknown = set(data) - _MATERIAL_KEYS
    if unknown:
        raise InvalidScenarioError(f"{source}: unknown material keys {sorted(unknown)}")
    missing = _MATERIAL_KEYS - set(data) - {"name", "vapor_range", "triplet_lifetime"}
    if missing:
        raise InvalidScenarioError(f"{source}: missing material keys {sorted(missing)}")
    if data["schema_version"] != _SUPPORTED_SCHEMA:
        raise InvalidScenarioError(
            f"{source}: unsupported material schema_version {data['schema_version']!r}"
        )
    try:
        eps_re, eps_im = _pair(data["epsilon_thermal"], "epsilon_thermal")
        n_re, n_im = _pair(data["refractive_index_optical"], "refractive_index_optical")
        n_opt = complex(n_re, n_im)
        return MaterialParams(
            chi_V=float(data["chi_V"]),
            rho=float(data["rho"]),
            sigma_UTS=float(data["sigma_UTS"]),
            hydrogen_density=float(data["hydrogen_density"]),
            gamma_p=2.0 * 3.141592653589793 * float(data["gamma_p_hz_per_tesla"]),
            m_molecule=float(data["m_molecule_amu"]) * AMU,
            refractive_indices=tuple(float(v) for v in data["refractive_indices"]),
            epsilon_thermal=complex(eps_re, eps_im),
            epsilon_optical=n_opt * n_opt,
            vapor_A=tuple(float(v) for v in data["vapor_A"]),
            vapor_anchor=_pair(data["vapor_anchor"], "vapor_anchor"),
            vapor_range=_pair(data.get("vapor_range", (150.0, 353.37)), "vapor_range"),
            triplet_lifetime=float(data.get("triplet_lifetime", 50e-6)),
            name=str(data.get("name", "custom")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidScenarioError):
            raise
        raise InvalidScenarioError(f"{source}: {exc}") from exc


def load_material(path: str | Path | None = None) -> MaterialParams:
    """Load a material JSON file; ``None`` loads the bundled naphthalene record."""
    if path is None:
        text = resources.files("multispin_sg").joinpath("data/naphthalene.json").read_text()
        source = "naphthalene.json"
    else:
        text = Path(path).read_text()
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidScenarioError(f"{source}:{exc.lineno}: {exc.msg}") from exc
    return material_from_dict(data, source)


NAPHTHALENE = load_material()
