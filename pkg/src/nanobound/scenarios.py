"""End-to-end pipelines for the adsorbed, hybrid and two-color-trap cases."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import TWO_PI, Params
from .eigensolver import BoundStates, MeshPolicy, build_mesh, solve_bound_states
from .linewidths import (OverlapTable, dephasing_broadening, depopulation_rate, overlaps,
                         trap_depopulation_harmonic, trap_depopulation_numeric)
from .photon import solve_wavelength
from .potentials import (TrapFit, adsorption_potential, exp_barrier_potential, find_trap,
                         hybrid_potential, two_color_trap_potential)
from .spectroscopy import (ReferenceLine, SpectrumLine, build_lines, franck_condon_matrix,
                           reference_power_P0)

MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3

TEMPERATURES = {"adsorbed": 300.0, "adsorbed-exp": 300.0, "hybrid": 420.0, "trap": 600.0}

# bound-state windows (rad/s) used by the figure pipelines
FIGURE_WINDOW = (-8 * MHZ, -0.02 * MHZ)
DEEP_WINDOW = (-25 * MHZ, -0.02 * MHZ)
# anti-Stokes band shown in the spectra: transitions of a few hundred kHz
SPECTRUM_BAND = (100 * KHZ, 1000 * KHZ)
DEEP_SPECTRUM_BAND = (100 * KHZ, 6000 * KHZ)
TRAP_SPECTRUM_BAND = (50 * KHZ, 250 * KHZ)


@dataclass
class Scenario:
    name: str
    params: Params
    potential: object
    states: BoundStates
    t1: OverlapTable
    t2: OverlapTable | None = None
    trap: TrapFit | None = None
    _depop: dict = field(default_factory=dict, repr=False)

    @property
    def geometry(self):
        return self.params.geometry

    @property
    def material(self):
        return self.params.material

    def depopulation(self, nu: int) -> float:
        """Per-state depopulation rate (rad/s for cavity, 1/s for the trap)."""
        if nu not in self._depop:
            if self.name == "trap":
                rates = trap_depopulation_numeric(self.t1, self.geometry, self.material)
                self._depop.update(zip(self.states.nu.tolist(), rates.tolist()))
            else:
                self._depop[nu] = depopulation_rate(nu, self.t1, self.geometry, self.material)[0]
        return self._depop[nu]

    def dephasing(self, nu: int, nu_p: int) -> float:
        if self.t2 is None:
            return 0.0
        return dephasing_broadening(nu, nu_p, self.t2, self.geometry, self.material)[0]

    def width(self, nu: int, nu_p: int) -> float:
        return self.depopulation(nu) + self.depopulation(nu_p) + self.dephasing(nu, nu_p)


def scenario_params(name: str, params: Params, temperature: float | None = None) -> Params:
    t = TEMPERATURES[name] if temperature is None else temperature
    return params.with_geometry(temperature=t)


def scenario_potential(name: str, params: Params):
    if name == "adsorbed":
        return adsorption_potential(params)
    if name == "adsorbed-exp":
        return exp_barrier_potential(params)
    if name == "hybrid":
        return hybrid_potential(params)
    if name == "trap":
        return two_color_trap_potential(params)
    raise ValueError(f"unknown scenario {name!r}")


def trap_window(fit: TrapFit, fraction: float = 0.7):
    """From just below the trap minimum to ``fraction`` of the barrier height."""
    return fit.depth - 0.01 * MHZ, fit.depth + fraction * fit.barrier_height


_CACHE: dict = {}


def solve_scenario(name: str, params: Params, window=None, temperature=None,
                   points_per_wavelength: float = 100.0, cache: bool = True) -> Scenario:
    """Potential, bound states and overlap tables for a named scenario.

    Results are memoised on (scenario, resolved parameters, window) unless
    ``cache`` is false, which forces a fresh solve and leaves the memo alone.
    """
    p = scenario_params(name, params, temperature)
    key = (name, json.dumps(p.snapshot(), sort_keys=True), None if window is None else tuple(window),
           points_per_wavelength)
    if cache and key in _CACHE:
        return _CACHE[key]
    pot = scenario_potential(name, p)
    m = p.atom.mass
    fit = None
    if name == "trap":
        fit = find_trap(pot, p.geometry.radius, m)
        win = trap_window(fit) if window is None else window
        policy = MeshPolicy(points_per_wavelength=points_per_wavelength, r_in=fit.barrier_r,
                            surface=p.geometry.radius)
    else:
        win = FIGURE_WINDOW if window is None else window
        policy = MeshPolicy(points_per_wavelength=points_per_wavelength)
    states = solve_bound_states(pot, build_mesh(pot, win, m, policy), win, m)
    t1 = overlaps(states, pot, 1)
    t2 = None if name == "trap" else overlaps(states, pot, 2)
    sc = Scenario(name, p, pot, states, t1, t2, fit)
    if cache:
        _CACHE[key] = sc
    return sc


def probe_mode(params: Params):
    b = params.beams["probe"]
    return solve_wavelength(b.wavelength, params.geometry.radius, params.material.permittivity)


def reference_line(params: Params) -> ReferenceLine:
    """Trap 1 -> 0 sideband at the trap temperature."""
    trap = solve_scenario("trap", params)
    width = trap.width(0, 1)
    return reference_power_P0(trap.states, probe_mode(params), width)


def spectrum_lines(sc: Scenario, reference: ReferenceLine, band=None) -> list[SpectrumLine]:
    """Anti-Stokes lines of ``sc`` (all downward pairs), optionally restricted to ``band``."""
    fc = franck_condon_matrix(sc.states, probe_mode(sc.params))
    nus = sc.states.nu.tolist()
    pairs = [(a, b) for a in nus for b in nus if b < a]
    if band is not None:
        w = dict(zip(nus, sc.states.omega.tolist()))
        pairs = [(a, b) for a, b in pairs if band[0] <= w[a] - w[b] <= band[1]]
    return build_lines(sc.states, fc, sc.width, reference, pairs=pairs)


def harmonic_trap_rates(sc: Scenario) -> np.ndarray:
    return trap_depopulation_harmonic(sc.states.nu, sc.trap.omega_r, sc.params.atom.mass,
                                      sc.geometry, sc.material)


def closest_transition(sc: Scenario, target: float):
    """Nearest-neighbour pair (nu, nu+1) whose frequency is closest to ``target``."""
    w = sc.states.omega
    d = np.diff(w)
    i = int(np.argmin(np.abs(d - target)))
    return int(sc.states.nu[i]), int(sc.states.nu[i + 1])


def level_pairing(a: BoundStates, b: BoundStates, max_binding: float):
    """Pair levels by ordinal counted from the shallowest one in each set.

    Returns (omega_a, omega_b, local spacing of ``a``) for levels of ``a``
    with binding below ``max_binding``.
    """
    wa, wb = a.omega[::-1], b.omega[::-1]
    n = min(len(wa), len(wb)) - 1
    spacing = np.abs(np.diff(wa))[:n]
    wa, wb = wa[:n], wb[:n]
    keep = np.abs(wa) < max_binding
    return wa[keep], wb[keep], spacing[keep]


def clear_cache():
    _CACHE.clear()


__all__ = [
    "DEEP_SPECTRUM_BAND", "DEEP_WINDOW", "FIGURE_WINDOW", "KHZ", "MHZ", "SPECTRUM_BAND", "Scenario",
    "TEMPERATURES", "TRAP_SPECTRUM_BAND", "clear_cache", "closest_transition", "harmonic_trap_rates",
    "level_pairing", "probe_mode", "reference_line", "scenario_params", "scenario_potential",
    "solve_scenario", "spectrum_lines", "trap_window",
]
