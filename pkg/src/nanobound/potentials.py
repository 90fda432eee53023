"""Radial potentials V(r) with analytic first and second derivatives.

All potentials return angular frequencies (energy / hbar) in rad/s and
their derivatives in rad/s/m and rad/s/m^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .config import HBAR, Params, solve_repulsive_amplitude
from .photon import GuidedMode, field_scale_for_power, intensity_profile, solve_wavelength


class DomainError(ValueError):
    pass


class NoTrapError(RuntimeError):
    pass


def _as_array(r):
    return np.atleast_1d(np.asarray(r, dtype=float))


class Potential:
    """Base class: subclasses implement ``derivatives``."""

    kind = "generic"

    def derivatives(self, r):  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, r):
        return self.derivatives(r)[0]

    def first(self, r):
        return self.derivatives(r)[1]

    def second(self, r):
        return self.derivatives(r)[2]

    def __add__(self, other):
        return SumPotential([self, other])


@dataclass(frozen=True)
class AdsorptionPotential(Potential):
    """-C (r-R)^-3 + D (r-R)^-12."""

    c3: float
    d12: float
    radius: float
    kind = "adsorption"

    def derivatives(self, r):
        x = _as_array(r) - self.radius
        if np.any(x <= 0):
            raise DomainError("adsorption potential requires r > R")
        c, d = self.c3, self.d12
        v = -c * x**-3 + d * x**-12
        dv = 3 * c * x**-4 - 12 * d * x**-13
        ddv = -12 * c * x**-5 + 156 * d * x**-14
        return v, dv, ddv

    @property
    def minimum_offset(self) -> float:
        return (4 * self.d12 / self.c3) ** (1 / 9)

    @property
    def depth(self) -> float:
        return float(self(self.radius + self.minimum_offset)[0])


@dataclass(frozen=True)
class ExpBarrierAdsorption(Potential):
    """-C (r-R)^-3 + D exp(-(r-R) p)."""

    c3: float
    amplitude: float
    decay: float
    radius: float
    kind = "adsorption-exp-barrier"

    def derivatives(self, r):
        x = _as_array(r) - self.radius
        if np.any(x <= 0):
            raise DomainError("adsorption potential requires r > R")
        c, d, p = self.c3, self.amplitude, self.decay
        e = d * np.exp(-p * x)
        return -c * x**-3 + e, 3 * c * x**-4 - p * e, -12 * c * x**-5 + p * p * e

    @property
    def minimum_offset(self) -> float:
        # V' = 0 crossing between the barrier and the tail
        f = lambda x: 3 * self.c3 * x**-4 - self.decay * self.amplitude * math.exp(-self.decay * x)
        xs = np.geomspace(1e-12, 1e-7, 2000)
        vals = np.array([f(x) for x in xs])
        i = np.nonzero((vals[:-1] < 0) & (vals[1:] > 0))[0]
        if not len(i):
            raise DomainError("exponential barrier has no minimum")
        return optimize.brentq(f, xs[i[-1]], xs[i[-1] + 1], xtol=1e-24, rtol=1e-15)

    @property
    def depth(self) -> float:
        return float(self(self.radius + self.minimum_offset)[0])


@dataclass(frozen=True)
class OpticalPotential(Potential):
    """Scalar light shift -alpha |E|^2 / 4 of a guided beam, for r >= R."""

    mode: GuidedMode
    power: float
    polarizability: float
    polarization: str = "circular"
    plane_angle: float = 0.0
    standing: bool = False
    phi: float = 0.0
    kind = "optical"
    field_scale2: float = field(init=False, repr=False)

    def __post_init__(self):
        s = field_scale_for_power(self.mode, self.power) if self.power > 0 else 0.0
        object.__setattr__(self, "field_scale2", s * s)

    def intensity(self, r):
        """|E(r)|^2 in (V/m)^2 and its first two r-derivatives."""
        r = _as_array(r)
        if np.any(r < self.mode.radius):
            raise DomainError("optical potential evaluated inside the fiber")
        prof = intensity_profile(self.mode, r, self.polarization, self.phi, self.plane_angle, self.standing)
        return [self.field_scale2 * p for p in prof]

    def derivatives(self, r):
        f = -self.polarizability / (4 * HBAR)
        return tuple(f * p for p in self.intensity(r))


@dataclass(frozen=True)
class SumPotential(Potential):
    parts: list
    kind: str = "sum"

    def derivatives(self, r):
        r = _as_array(r)
        total = [np.zeros_like(r) for _ in range(3)]
        for p in self.parts:
            for i, v in enumerate(p.derivatives(r)):
                total[i] = total[i] + v
        return tuple(total)


@dataclass(frozen=True)
class HarmonicPotential(Potential):
    """M omega^2 (r - center)^2 / 2, in rad/s."""

    mass: float
    omega: float
    center: float = 0.0
    kind = "harmonic-test"

    @property
    def length(self) -> float:
        return math.sqrt(HBAR / (self.mass * self.omega))

    def derivatives(self, r):
        x = _as_array(r) - self.center
        k = self.mass * self.omega**2 / HBAR
        return 0.5 * k * x * x, k * x, np.full_like(x, k)


@dataclass(frozen=True)
class BoxPotential(Potential):
    """Flat floor on (0, width); the walls are the mesh's Dirichlet boundaries."""

    width: float
    kind = "box-test"

    def derivatives(self, r):
        z = np.zeros_like(_as_array(r))
        return z, z.copy(), z.copy()


@dataclass(frozen=True)
class ConstantPotential(Potential):
    value: float = 0.0
    kind = "constant"

    def derivatives(self, r):
        r = _as_array(r)
        return np.full_like(r, self.value), np.zeros_like(r), np.zeros_like(r)


@dataclass(frozen=True)
class CentrifugalPotential(Potential):
    """V(r) + hbar (l^2 - 1/4) / (2 M r^2)."""

    base: Potential
    l: int
    mass: float
    kind = "centrifugal"

    def derivatives(self, r):
        r = _as_array(r)
        v, dv, ddv = self.base.derivatives(r)
        c = HBAR * (self.l**2 - 0.25) / (2 * self.mass)
        return v + c / r**2, dv - 2 * c / r**3, ddv + 6 * c / r**4


def centrifugal_correction(potential: Potential, l: int, mass: float) -> CentrifugalPotential:
    if l < 0:
        raise ValueError("l must be >= 0")
    return CentrifugalPotential(potential, l, mass)


# --- scenario factories ----------------------------------------------------

def adsorption_potential(params: Params) -> AdsorptionPotential:
    a = params.atom
    return AdsorptionPotential(a.c3, a.d12, params.geometry.radius)


def exp_barrier_potential(params: Params) -> ExpBarrierAdsorption:
    a = params.atom
    return ExpBarrierAdsorption(a.exp_c3, a.exp_amplitude, a.exp_decay, params.geometry.radius)


def beam_potential(params: Params, name: str, phi: float = 0.0, power: float | None = None) -> OpticalPotential:
    beam = params.beams[name]
    mode = solve_wavelength(beam.wavelength, params.geometry.radius, params.material.permittivity)
    return OpticalPotential(
        mode,
        beam.power if power is None else power,
        beam.polarizability,
        beam.polarization,
        beam.plane_angle,
        beam.configuration == "standing",
        phi,
    )


def hybrid_potential(params: Params) -> SumPotential:
    """Adsorption plus the attractive running-wave red beam."""
    return SumPotential([adsorption_potential(params), beam_potential(params, "red")], kind="hybrid")


@dataclass(frozen=True)
class TrapFit:
    r0: float
    omega_r: float
    barrier_r: float
    barrier_height: float
    depth: float


def two_color_trap_potential(params: Params) -> SumPotential:
    """Adsorption + red standing wave + blue running wave, along the red polarization plane."""
    phi = params.beams["trap_red"].plane_angle
    return SumPotential(
        [
            adsorption_potential(params),
            beam_potential(params, "trap_red", phi),
            beam_potential(params, "blue", phi),
        ],
        kind="two-color-trap",
    )


def find_trap(potential: Potential, radius: float, mass: float, search=500e-9) -> TrapFit:
    """Locate the optical trap minimum in (R, R + search) and fit its curvature.

    ``omega_r`` of the result is sqrt(V''(r0) / M) in rad/s.

    The barrier is the maximum between the surface well and the trap.
    """
    xs = np.geomspace(1e-9, search, 4000)
    r = radius + xs
    dv = potential.first(r)
    idx = np.nonzero((dv[:-1] < 0) & (dv[1:] > 0))[0]
    if not len(idx):
        raise NoTrapError("no local minimum within the search window")
    i = idx[-1]
    r0 = optimize.brentq(lambda x: potential.first(x)[0], r[i], r[i + 1], xtol=1e-16, rtol=1e-14)
    maxima = np.nonzero((dv[:-1] > 0) & (dv[1:] < 0) & (r[:-1] < r0))[0]
    if not len(maxima):
        raise NoTrapError("trap has no barrier toward the surface")
    j = maxima[-1]
    rb = optimize.brentq(lambda x: potential.first(x)[0], r[j], r[j + 1], xtol=1e-16, rtol=1e-14)
    v0 = float(potential(r0)[0])
    vb = float(potential(rb)[0])
    curv = float(potential.second(r0)[0])
    omega_r = math.sqrt(HBAR * curv / mass)
    return TrapFit(r0=r0, omega_r=omega_r, barrier_r=rb, barrier_height=vb - v0, depth=v0)


__all__ = [
    "AdsorptionPotential", "BoxPotential", "CentrifugalPotential", "ConstantPotential",
    "DomainError", "ExpBarrierAdsorption", "HarmonicPotential", "NoTrapError", "OpticalPotential",
    "Potential", "SumPotential", "TrapFit", "adsorption_potential", "beam_potential",
    "centrifugal_correction", "exp_barrier_potential", "find_trap",
    "hybrid_potential", "solve_repulsive_amplitude", "two_color_trap_potential",
]
