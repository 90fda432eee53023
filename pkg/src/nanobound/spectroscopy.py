"""Franck-Condon factors and heterodyne sideband spectra.

P(omega) is a sum of Lorentzians (Gamma/2) / ((omega_c - omega)^2 + (Gamma/2)^2)
weighted by n(nu) |F|^2.  Spectra are normalised by P0, the peak of the
1 -> 0 sideband of the two-color trap evaluated with the same formula, so a
line of weight w and width Gamma peaks at (w / w0) (Gamma0 / Gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import EPS0, HBAR
from .eigensolver import BoundStates
from .linewidths import MeshMismatchError
from .photon import GuidedMode, intensity_profile, mode_field


@dataclass(frozen=True)
class SpectrumLine:
    """Downward (anti-Stokes) lines have ``center`` > 0."""

    nu: int
    nu_prime: int
    center: float
    width: float
    weight: float
    weight_rel: float = float("nan")
    peak_rel: float = float("nan")


@dataclass(frozen=True)
class ReferenceLine:
    weight: float
    width: float

    @property
    def peak(self) -> float:
        return 2 * self.weight / self.width


@dataclass(frozen=True)
class SpectrumGrid:
    omega: np.ndarray
    p_over_p0: np.ndarray


def field_constant(mode: GuidedMode) -> float:
    """E_eta = sqrt(hbar eps0 omega / 2)."""
    return math.sqrt(HBAR * EPS0 * mode.omega / 2)


def field_product(r, probe: GuidedMode, scattered: GuidedMode | None = None, polarization="circular",
                  phi=0.0, plane_angle=0.0):
    """conj(E_s) . E_p of the two radial partial waves."""
    if scattered is None or scattered is probe:
        return intensity_profile(probe, r, polarization, phi, plane_angle, order=0)[0]
    if polarization != "circular":
        raise ValueError("distinct probe and scattered modes are only modelled for circular light")
    return np.real(np.sum(np.conj(mode_field(scattered, r)) * mode_field(probe, r), axis=0))


def franck_condon_matrix(states: BoundStates, probe: GuidedMode, scattered: GuidedMode | None = None,
                         polarization="circular") -> np.ndarray:
    """F_{nu' nu} for all pairs of ``states`` (rows nu', columns nu)."""
    mesh = states.mesh
    if states.psi.shape[1] != len(mesh):
        raise MeshMismatchError("wavefunctions do not live on the state mesh")
    if mesh.r_in < probe.radius:
        raise MeshMismatchError("states extend inside the fiber")
    s = probe if scattered is None else scattered
    pref = field_constant(s) * field_constant(probe) / (2 * math.pi) ** 2
    prod = field_product(mesh.interior, probe, scattered, polarization)
    f = (states.psi * (mesh.weights * prod)) @ states.psi.T
    return pref * 0.5 * (f + f.T)


def franck_condon(nu_p: int, nu: int, states: BoundStates, probe: GuidedMode,
                  scattered: GuidedMode | None = None) -> float:
    f = franck_condon_matrix(states, probe, scattered)
    return float(f[states.index_of(nu_p), states.index_of(nu)])


def reference_power_P0(trap_states: BoundStates, probe: GuidedMode, gamma_ref: float) -> ReferenceLine:
    """Reference sideband 1 -> 0 of the trap, width ``gamma_ref`` (rad/s)."""
    if trap_states is None or not {0, 1} <= set(trap_states.nu.tolist()):
        raise ValueError("trap states 0 and 1 are required for the reference sideband")
    f = franck_condon_matrix(trap_states, probe)
    w = float(f[trap_states.index_of(0), trap_states.index_of(1)] ** 2)
    if not w > 0:
        raise ValueError("reference sideband has zero weight")
    return ReferenceLine(w, gamma_ref)


def build_lines(states: BoundStates, fc: np.ndarray, width, reference: ReferenceLine,
                occupation=None, pairs=None) -> list[SpectrumLine]:
    """Lines for ordered pairs (nu -> nu').

    ``width(nu, nu')`` returns the FWHM in rad/s; ``occupation`` maps nu to
    n(nu) and defaults to 1 for every state.
    """
    nus = states.nu.tolist()
    if pairs is None:
        pairs = [(a, b) for a in nus for b in nus if a != b]
    out = []
    for nu, nu_p in pairs:
        i, j = states.index_of(nu), states.index_of(nu_p)
        n = 1.0 if occupation is None else occupation(nu)
        w = n * float(fc[j, i]) ** 2
        g = float(width(nu, nu_p))
        # photon gains omega_nu - omega_nu' in a downward transition
        center = float(states.omega[i] - states.omega[j])
        out.append(SpectrumLine(nu, nu_p, center, g, w, w / reference.weight,
                                w / reference.weight * reference.width / g))
    return out


def default_grid(lo: float, hi: float, lines, samples=2048, per_width=8, cap=2_000_000) -> np.ndarray:
    inside = [ln.width for ln in lines if lo <= ln.center <= hi]
    n = samples
    if inside:
        n = max(n, int(math.ceil(per_width * (hi - lo) / min(inside))) + 1)
    return np.linspace(lo, hi, min(n, cap))


def assemble_spectrum(lines, reference: ReferenceLine, omega) -> SpectrumGrid:
    """P(omega) / P0 on the given grid (rad/s)."""
    omega = np.asarray(omega, dtype=float)
    total = np.zeros_like(omega)
    for ln in lines:
        half = ln.width / 2
        total += ln.weight * half / ((ln.center - omega) ** 2 + half * half)
    return SpectrumGrid(omega, total / reference.peak)


def anti_stokes(lines):
    return [ln for ln in lines if ln.center > 0]


def stokes(lines):
    return [ln for ln in lines if ln.center < 0]


def nearest_neighbor(lines):
    """Downward lines nu -> nu - 1."""
    return [ln for ln in lines if ln.nu - ln.nu_prime == 1]
