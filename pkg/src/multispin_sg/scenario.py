"""Scenario files: versioned JSON describing one experimental configuration."""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .constants import AMU
from .csl import CSLParams
from .errors import InvalidScenarioError
from .materials import NAPHTHALENE, MaterialParams, load_material
from .params import derive_params
from .trajectories import ProtocolTimes

SCHEMA_VERSION = 1
BUNDLED = ("scenario_a", "scenario_b", "scenario_c")

# field -> (unit, required)
FIELDS = {
    "schema_version": ("", True),
    "name": ("", False),
    "radius": ("m", True),
    "B_prime": ("T/m", True),
    "B0": ("T", False),
    "T_bulk": ("K", False),
    "T_env": ("K", False),
    "T_cm": ("K", False),
    "pressure": ("Pa", False),
    "gas_mass": ("kg", False),
    "T1": ("s", False),
    "T2": ("s", False),
    "drive_Omega_M": ("rad/s", False),
    "l_fringe": ("", False),
    "times": ("", True),
    "csl": ("", False),
    "N": ("", False),
    "R_exp": ("", False),
    "T_sublimation": ("K", False),
    "nu_mas": ("Hz", False),
    "spinup_wavelength": ("m", False),
    "T_initial": ("K", False),
    "material": ("", False),
}
_TIME_KEYS = {"kind", "t1", "t21", "t22", "omega_t1", "omega_t21", "omega_t22"}
_CSL_KEYS = {"lambda_csl", "r_csl"}


@dataclass(frozen=True)
class ScenarioConfig:
    radius: float
    B_prime: float
    times_spec: dict
    B0: float = 1e-3
    T_bulk: float = 4.0
    T_env: float = 4.0
    T_cm: float = 0.0
    pressure: float = 0.0
    gas_mass: float = 2.0 * AMU
    T1: float = 920.0 * 3600.0
    T2: float = 1.0
    drive_Omega_M: float = 2.0 * math.pi * 1e5
    l_fringe: int = 1
    csl: CSLParams = field(default_factory=lambda: CSLParams(1e-16, 1e-7))
    N: int | None = None
    R_exp: float | None = None
    T_sublimation: float = 150.0
    nu_mas: float = 23e6
    spinup_wavelength: float = 500e-9
    T_initial: float = 5.0
    material: MaterialParams = NAPHTHALENE
    name: str = "scenario"
    source: str = "<dict>"

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise InvalidScenarioError(f"{self.source}: radius must be positive")
        if not self.B_prime > 0:
            raise InvalidScenarioError(f"{self.source}: B_prime must be positive")
        for name in ("T_bulk", "T_env", "T_cm", "pressure"):
            if getattr(self, name) < 0:
                raise InvalidScenarioError(f"{self.source}: {name} must be non-negative")

    def derived(self):
        return derive_params(self, self.material)

    @property
    def times(self) -> ProtocolTimes:
        return build_times(self.times_spec, self.derived().Omega, self.source)

    @property
    def n_spins(self) -> int:
        return self.N if self.N is not None else self.derived().N_spins

    def resolved(self) -> dict:
        """Canonical parameter dictionary used for hashing and manifests."""
        d = {k: v for k, v in asdict(self).items() if k not in ("material", "source", "csl")}
        d["csl"] = {"lambda_csl": self.csl.lambda_csl, "r_csl": self.csl.r_csl}
        d["material"] = self.material.name
        return d


def build_times(spec: dict, Omega: float, source: str = "<dict>") -> ProtocolTimes:
    kind = spec.get("kind")
    if kind not in ("minimal", "modified"):
        raise InvalidScenarioError(f"{source}: times.kind must be 'minimal' or 'modified'")
    phase_keys = [k for k in spec if k.startswith("omega_")]
    sec_keys = [k for k in spec if k in ("t1", "t21", "t22")]
    if phase_keys and sec_keys:
        raise InvalidScenarioError(f"{source}: give times either in seconds or as omega_* phases, not both")
    vals = {k: spec[k] / Omega for k in phase_keys}
    vals = {k.replace("omega_", ""): v for k, v in vals.items()}
    vals.update({k: spec[k] for k in sec_keys})
    if kind == "minimal":
        if "t1" not in vals:
            raise InvalidScenarioError(f"{source}: minimal timing needs t1")
        return ProtocolTimes.minimal(vals["t1"], Omega)
    if "t21" not in vals:
        raise InvalidScenarioError(f"{source}: modified timing needs t21")
    return ProtocolTimes.modified(vals["t21"], Omega, vals.get("t22"), vals.get("t1"))


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def _err(source: str, text: str, key: str, msg: str) -> InvalidScenarioError:
    line = _line_of(text, key)
    where = f"{source}:{line}" if line else source
    return InvalidScenarioError(f"{where}: {msg}")


def _number(data, key, text, source, integer=False):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(source, text, key, f"'{key}' must be a number ({FIELDS[key][0] or 'dimensionless'})")
    if integer and int(v) != v:
        raise _err(source, text, key, f"'{key}' must be an integer")
    return int(v) if integer else float(v)


CLOSURE_WARN_LEVEL = 1e-6


class ClosureWarning(UserWarning):
    """Scenario timing does not bring the recombining branches back together."""


def scenario_from_text(text: str, source: str = "<string>", base_dir: Path | None = None) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidScenarioError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InvalidScenarioError(f"{source}:1: top level must be an object")
    unknown = sorted(set(data) - set(FIELDS))
    if unknown:
        raise _err(source, text, unknown[0], f"unknown key '{unknown[0]}'")
    missing = [k for k, (_, req) in FIELDS.items() if req and k not in data]
    if missing:
        raise InvalidScenarioError(f"{source}: missing required key '{missing[0]}'")
    if data["schema_version"] != SCHEMA_VERSION:
        raise _err(source, text, "schema_version",
                   f"unsupported schema_version {data['schema_version']!r} (expected {SCHEMA_VERSION})")

    kw = {}
    for key in FIELDS:
        if key in ("schema_version", "name", "times", "csl", "material") or key not in data:
            continue
        if key == "R_exp" and data[key] is None:
            continue
        kw[key] = _number(data, key, text, source, integer=key in ("N", "l_fringe"))

    times = data["times"]
    if not isinstance(times, dict):
        raise _err(source, text, "times", "'times' must be an object")
    bad = sorted(set(times) - _TIME_KEYS)
    if bad:
        raise _err(source, text, bad[0], f"unknown times key '{bad[0]}'")
    for k, v in times.items():
        if k != "kind" and (isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0):
            raise _err(source, text, k, f"times.{k} must be a non-negative number")
    if "csl" in data:
        c = data["csl"]
        if not isinstance(c, dict) or set(c) != _CSL_KEYS:
            raise _err(source, text, "csl", "'csl' needs exactly lambda_csl and r_csl")
        kw["csl"] = CSLParams(float(c["lambda_csl"]), float(c["r_csl"]))
    if "material" in data:
        p = Path(data["material"])
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        kw["material"] = load_material(p)
    try:
        cfg = ScenarioConfig(times_spec=dict(times), name=str(data.get("name", "scenario")),
                             source=source, **kw)
        t = cfg.times  # validate timing against the derived trap frequency
        residual = t.recombination_residual(cfg.derived().Omega)
    except InvalidScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise InvalidScenarioError(f"{source}: {exc}") from exc
    if residual > CLOSURE_WARN_LEVEL:
        # rounded timings leave the loop slightly open; reported, not rejected
        warnings.warn(f"{source}: timing leaves |zeta(T_tot)| = {residual:.3g} per unit label",
                      ClosureWarning, stacklevel=2)
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load a scenario file, or a bundled one by name (``scenario_a`` etc.)."""
    if str(path) in BUNDLED:
        text = resources.files("multispin_sg").joinpath(f"data/{path}.json").read_text()
        return scenario_from_text(text, f"{path}.json")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidScenarioError(f"{p}: {exc.strerror}") from exc
    return scenario_from_text(text, str(p), p.parent)
