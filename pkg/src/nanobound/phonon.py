"""Flexural phonon modes of the nanofiber in the low-frequency (pR << 1) limit."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import HBAR, KB, GeometryParams, MaterialParams, sound_speed

FLEXURAL_ORDERS = (-1, 1)


@dataclass(frozen=True)
class PhononMode:
    """A flexural mode; ``m`` is set for cavity modes, ``p`` for traveling ones."""

    frequency: float
    decay_rate: float
    population: float
    j: int = 1
    m: int | None = None
    p: float | None = None

    @property
    def kind(self) -> str:
        return "cavity" if self.m is not None else "traveling"


def cavity_frequency(m: int, geometry: GeometryParams, material: MaterialParams) -> float:
    if m < 1:
        raise ValueError("cavity index m must be >= 1")
    return m * m * math.pi**2 * geometry.radius * sound_speed(material) / (2 * geometry.length**2)


def traveling_dispersion(p, geometry: GeometryParams, material: MaterialParams):
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p) * geometry.radius >= 0.2):
        warnings.warn("p R >= 0.2: quadratic flexural dispersion is inaccurate", stacklevel=2)
    w = sound_speed(material) * geometry.radius * p * p / 2
    return float(w) if w.ndim == 0 else w


def density_of_states(p, geometry: GeometryParams, material: MaterialParams):
    """|d omega / d p|^-1 of the quadratic band."""
    return 1.0 / (sound_speed(material) * geometry.radius * np.abs(p))


def displacement_partial_wave(j: int, p: float, r, radius: float):
    """Low-frequency radial partial wave (W_r, W_phi, W_z) for 0 <= r <= R."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty((3, r.size), dtype=complex)
    out[0] = 1.0 / radius
    out[1] = 1j * j / radius
    out[2] = -1j * p * r / radius
    return out


def thermal_population(omega, temperature):
    """Bose-Einstein occupation."""
    x = HBAR * np.asarray(omega, dtype=float) / (KB * temperature)
    n = 1.0 / np.expm1(x)
    return float(n) if np.ndim(n) == 0 else n


def thermal_population_classical(omega, temperature):
    """High-temperature limit k_B T / (hbar omega)."""
    return KB * temperature / (HBAR * np.asarray(omega, dtype=float))


def cavity_mode(m: int, geometry: GeometryParams, material: MaterialParams, j: int = 1) -> PhononMode:
    w = cavity_frequency(m, geometry, material)
    return PhononMode(
        frequency=w,
        decay_rate=w / geometry.quality_factor,
        population=thermal_population(w, geometry.temperature),
        j=j,
        m=m,
        p=math.pi * m / geometry.length,
    )


def cavity_catalog(max_m: int, geometry: GeometryParams, material: MaterialParams) -> list[PhononMode]:
    """Cavity modes m = 1..max_m for both flexural orders j = -1, +1."""
    return [cavity_mode(m, geometry, material, j) for m in range(1, max_m + 1) for j in FLEXURAL_ORDERS]
