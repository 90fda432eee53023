"""Physical constants, material/atom/beam parameters and config-file loading.

Internal units are SI, with every energy stored as an angular frequency
(energy / hbar, in rad/s).  The config file uses lab units (nm, um, mW, K,
THz, kHz) and is converted on load.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from scipy import constants as sc

HBAR = sc.hbar
H = sc.h
KB = sc.k
C_LIGHT = sc.c
EPS0 = sc.epsilon_0
MU0 = sc.mu_0
ATOMIC_POLARIZABILITY = 4 * math.pi * EPS0 * sc.physical_constants["Bohr radius"][0] ** 3
"""One atomic unit of polarizability in C m^2 / V."""

TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    """Invalid or unparsable configuration value."""


def hz_to_rad(f_hz: float) -> float:
    return TWO_PI * f_hz


def rad_to_hz(w: float) -> float:
    return w / TWO_PI


@dataclass(frozen=True)
class MaterialParams:
    density: float = 2200.0  # kg/m^3
    young_modulus: float = 72.6e9  # Pa
    permittivity: float = 2.1

    def __post_init__(self):
        _positive("material.density_kg_m3", self.density)
        _positive("material.young_modulus_GPa", self.young_modulus)
        if not self.permittivity > 1:
            raise ConfigError("material.permittivity must exceed 1")


@dataclass(frozen=True)
class AtomParams:
    """Cesium ground-state atom on silica.

    ``c3`` is in rad/s m^3, ``vmin`` in rad/s, ``d12`` in rad/s m^12.  When
    ``d12`` is not given it is inferred from ``c3`` and ``vmin``.
    """

    mass: float = 2.21e-25
    c3: float = hz_to_rad(1.18e12) * 1e-27
    vmin: float = -hz_to_rad(128e12)
    d12: float | None = None
    transition_wavelength: float = 852.347e-9
    natural_linewidth: float = hz_to_rad(5.234e6)
    # exponential-barrier alternative to the x^-12 wall
    exp_c3: float = hz_to_rad(1.56e12) * 1e-27
    exp_amplitude: float = hz_to_rad(1.6e18)
    exp_decay: float = 53e9  # 1/m

    def __post_init__(self):
        _positive("atom.mass_kg", self.mass)
        _positive("atom.c3_THz_nm3", self.c3)
        if not self.vmin < 0:
            raise ConfigError("atom.vmin_THz must be negative")
        if self.d12 is None:
            object.__setattr__(self, "d12", solve_repulsive_amplitude(self.c3, self.vmin))
        _positive("atom.d_kHz_nm12", self.d12)
        _positive("atom.exp_c3_THz_nm3", self.exp_c3)
        _positive("atom.exp_d_THz", self.exp_amplitude)
        _positive("atom.exp_decay_per_nm", self.exp_decay)


@dataclass(frozen=True)
class GeometryParams:
    radius: float = 305e-9
    length: float = 5e-6
    quality_factor: float = 100.0
    temperature: float = 420.0

    def __post_init__(self):
        _positive("fiber.radius_nm", self.radius)
        _positive("fiber.length_um", self.length)
        _positive("fiber.temperature_K", self.temperature)
        if not self.quality_factor >= 1:
            raise ConfigError("fiber.quality_factor must be >= 1")


@dataclass(frozen=True)
class BeamParams:
    """A nanofiber-guided beam.

    ``polarization`` is ``"circular"`` or ``"linear"``; for linear light
    ``plane_angle`` is the azimuth of the polarization plane.  A
    ``"standing"`` configuration means two counterpropagating beams each
    carrying ``power``.
    """

    wavelength: float
    power: float = 0.0
    polarizability: float = 0.0  # C m^2 / V
    polarization: str = "circular"
    plane_angle: float = 0.0
    configuration: str = "running"

    def __post_init__(self):
        _positive("wavelength", self.wavelength)
        if not (self.power >= 0 and math.isfinite(self.power)):
            raise ConfigError("beam power must be >= 0")
        if self.polarization not in ("circular", "linear"):
            raise ConfigError(f"unknown polarization {self.polarization!r}")
        if self.configuration not in ("running", "standing"):
            raise ConfigError(f"unknown beam configuration {self.configuration!r}")


def cesium_scalar_polarizability(wavelength: float) -> float:
    """Scalar ground-state polarizability of Cs in C m^2/V.

    Sum over the D1 and D2 resonances with reduced dipole matrix elements
    4.5097 and 6.3403 e a0, plus a constant remainder (core and higher
    np states) chosen so the static value is 401.0 a.u.
    """
    lines = ((894.593e-9, 4.5097), (852.347e-9, 6.3403))
    hartree = sc.physical_constants["Hartree energy"][0]

    def au(omega_au):
        return sum(
            w * d * d / (3 * (w * w - omega_au**2))
            for w, d in ((H * C_LIGHT / lam / hartree, d) for lam, d in lines)
        )

    remainder = 401.0 - au(0.0)
    omega = H * C_LIGHT / wavelength / hartree
    return (au(omega) + remainder) * ATOMIC_POLARIZABILITY


def _default_beams():
    return {
        # hybrid potential: 1 mW running wave, quasi-circular
        "red": BeamParams(1064e-9, 1e-3, cesium_scalar_polarizability(1064e-9)),
        # two-color trap: 2 x 2 mW standing wave, quasi-linear
        "trap_red": BeamParams(
            1064e-9, 2e-3, cesium_scalar_polarizability(1064e-9),
            polarization="linear", plane_angle=0.0, configuration="standing",
        ),
        "blue": BeamParams(
            840e-9, 4.5e-3, cesium_scalar_polarizability(840e-9),
            polarization="linear", plane_angle=math.pi / 2,
        ),
        "probe": BeamParams(1000e-9, 0.0, cesium_scalar_polarizability(1000e-9)),
    }


@dataclass(frozen=True)
class Params:
    material: MaterialParams = field(default_factory=MaterialParams)
    atom: AtomParams = field(default_factory=AtomParams)
    geometry: GeometryParams = field(default_factory=GeometryParams)
    beams: dict = field(default_factory=_default_beams)

    def with_geometry(self, **kw) -> Params:
        return replace(self, geometry=replace(self.geometry, **kw))

    def with_beam(self, name: str, **kw) -> Params:
        beams = dict(self.beams)
        beams[name] = replace(beams[name], **kw)
        return replace(self, beams=beams)

    def snapshot(self) -> dict:
        """Flat, JSON-serialisable view of the resolved parameters (SI)."""
        out = {}
        for section in ("material", "atom", "geometry"):
            for k, v in asdict(getattr(self, section)).items():
                out[f"{section}.{k}"] = v
        for name, beam in sorted(self.beams.items()):
            for k, v in asdict(beam).items():
                out[f"beams.{name}.{k}"] = v
        return out


def sound_speed(material: MaterialParams) -> float:
    """Effective flexural sound speed sqrt(E / rho) in m/s."""
    return math.sqrt(material.young_modulus / material.density)


def solve_repulsive_amplitude(c3: float, vmin: float) -> float:
    """Amplitude D of the x^-12 wall giving min(-C/x^3 + D/x^12) == vmin.

    Stationarity gives x_min^9 = 4D/C and then vmin = -(3/4) C / x_min^3.
    """
    if not vmin < 0:
        raise ValueError("vmin must be negative")
    if not c3 > 0:
        raise ValueError("c3 must be positive")
    x3 = 0.75 * c3 / -vmin
    return 0.25 * c3 * x3**3


def adsorption_minimum_position(c3: float, d12: float) -> float:
    return (4 * d12 / c3) ** (1 / 9)


# --- config file -----------------------------------------------------------

# key -> (section, field, factor to SI)
_KEYS = {
    "fiber.radius_nm": ("geometry", "radius", 1e-9),
    "fiber.length_um": ("geometry", "length", 1e-6),
    "fiber.quality_factor": ("geometry", "quality_factor", 1.0),
    "fiber.temperature_K": ("geometry", "temperature", 1.0),
    "material.density_kg_m3": ("material", "density", 1.0),
    "material.young_modulus_GPa": ("material", "young_modulus", 1e9),
    "material.permittivity": ("material", "permittivity", 1.0),
    "atom.mass_kg": ("atom", "mass", 1.0),
    "atom.c3_THz_nm3": ("atom", "c3", TWO_PI * 1e12 * 1e-27),
    "atom.vmin_THz": ("atom", "vmin", TWO_PI * 1e12),
    "atom.d_kHz_nm12": ("atom", "d12", TWO_PI * 1e3 * 1e-108),
    "atom.transition_wavelength_nm": ("atom", "transition_wavelength", 1e-9),
    "atom.natural_linewidth_MHz": ("atom", "natural_linewidth", TWO_PI * 1e6),
    "atom.exp_c3_THz_nm3": ("atom", "exp_c3", TWO_PI * 1e12 * 1e-27),
    "atom.exp_d_THz": ("atom", "exp_amplitude", TWO_PI * 1e12),
    "atom.exp_decay_per_nm": ("atom", "exp_decay", 1e9),
}

_BEAM_FIELDS = {
    "wavelength_nm": ("wavelength", 1e-9),
    "power_mW": ("power", 1e-3),
    "polarizability_au": ("polarizability", ATOMIC_POLARIZABILITY),
    "polarization": ("polarization", None),
    "plane_angle_deg": ("plane_angle", math.pi / 180),
    "configuration": ("configuration", None),
}

CONFIG_KEYS = sorted(_KEYS) + sorted(
    f"beams.{b}.{f}" for b in ("red", "trap_red", "blue", "probe") for f in _BEAM_FIELDS
)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _number(key: str, value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: value must be finite")
    return x


def _to_si(x: float, factor: float) -> float:
    # dividing by an exact integer keeps e.g. 305 nm -> 3.05e-7 correctly rounded
    if 0 < factor < 1:
        k = round(-math.log10(factor))
        if abs(factor * 10**k - 1) < 1e-12:
            return x / 10**k
    return x * factor


def _positive(key, value):
    if value is None or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{key} must be a positive finite number")


def params_from_mapping(entries: dict[str, str]) -> Params:
    sections = {"geometry": {}, "material": {}, "atom": {}}
    beams = _default_beams()
    beam_updates: dict[str, dict] = {}
    for key, value in entries.items():
        if key in _KEYS:
            section, name, factor = _KEYS[key]
            x = _number(key, value)
            if key == "atom.vmin_THz":
                if x >= 0:
                    raise ConfigError("atom.vmin_THz must be negative")
            elif x <= 0:
                raise ConfigError(f"{key} must be positive")
            sections[section][name] = _to_si(x, factor)
        elif key.startswith("beams."):
            parts = key.split(".")
            if len(parts) != 3 or parts[1] not in beams or parts[2] not in _BEAM_FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            name, factor = _BEAM_FIELDS[parts[2]]
            if factor is None:
                beam_updates.setdefault(parts[1], {})[name] = value
            else:
                x = _number(key, value)
                if x < 0 or (x == 0 and name == "wavelength"):
                    raise ConfigError(f"{key} must be positive")
                beam_updates.setdefault(parts[1], {})[name] = _to_si(x, factor)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    atom_kw = sections["atom"]
    if "d12" not in atom_kw and ("c3" in atom_kw or "vmin" in atom_kw):
        atom_kw["d12"] = None
    for name, kw in beam_updates.items():
        if "wavelength" in kw and "polarizability" not in kw and name != "probe":
            kw["polarizability"] = cesium_scalar_polarizability(kw["wavelength"])
        beams[name] = replace(beams[name], **kw)
    return Params(
        material=MaterialParams(**sections["material"]),
        atom=AtomParams(**atom_kw),
        geometry=GeometryParams(**sections["geometry"]),
        beams=beams,
    )


def load_config(path: str | os.PathLike | None = None) -> Params:
    """Load a flat key-value config file; defaults fill anything missing.

    Without a path, falls back to ``$NANOBOUND_CONFIG`` and then to the
    built-in case-study defaults.
    """
    if path is None:
        path = os.environ.get("NANOBOUND_CONFIG")
        if not path:
            return Params()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return params_from_mapping(parse_config_text(p.read_text(encoding="utf-8")))
