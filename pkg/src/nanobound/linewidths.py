"""Atom-phonon overlaps, coupling rates and phonon-induced linewidths.

Overlaps are stored in the solver's frequency units (rad/s per m and per
m^2); the coupling formulas need energies, so they multiply by hbar.
All rates are angular (rad/s) unless the name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import HBAR, KB, GeometryParams, MaterialParams, sound_speed
from .eigensolver import BoundStates
from .phonon import FLEXURAL_ORDERS, PhononMode, cavity_frequency, thermal_population


class MeshMismatchError(ValueError):
    pass


class DegenerateBathError(ValueError):
    pass


@dataclass(frozen=True)
class OverlapTable:
    """A_{nu' nu} = int psi_nu' d^order V / dr^order psi_nu dr, rows/cols follow ``nu``."""

    nu: np.ndarray
    omega: np.ndarray
    order: int
    matrix: np.ndarray

    def index(self, nu: int) -> int:
        hits = np.nonzero(self.nu == nu)[0]
        if not len(hits):
            raise KeyError(f"state nu={nu} not in overlap table")
        return int(hits[0])

    def __getitem__(self, key):
        a, b = key
        return float(self.matrix[self.index(a), self.index(b)])

    def transition(self, nu_p: int, nu: int) -> float:
        """omega_{nu' nu} = omega_nu' - omega_nu."""
        return float(self.omega[self.index(nu_p)] - self.omega[self.index(nu)])


@dataclass(frozen=True)
class LinewidthRecord:
    nu: int
    nu_prime: int
    omega: float
    gamma1: float
    gamma2: float
    gamma: float
    converged: bool = True


def overlaps(states: BoundStates, potential, order: int = 1, method: str = "auto") -> OverlapTable:
    """Overlap matrix of the ``order``-th potential derivative.

    For order 1 the default ``"commutator"`` route evaluates
    -omega_{nu' nu} <nu'|d/dr|nu>, which avoids integrating the stiff wall
    force against nearly cancelling wavefunction products.  ``"quadrature"``
    integrates psi V' psi directly; it converges to the same values but
    much more slowly on steep walls.  Order 2 always uses quadrature.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    mesh = states.mesh
    if states.psi.shape[1] != len(mesh):
        raise MeshMismatchError("wavefunctions do not live on the state mesh")
    if method == "auto":
        method = "commutator" if order == 1 else "quadrature"
    if method == "commutator":
        if order != 1:
            raise ValueError("commutator route only exists for first-order overlaps")
        return overlaps_from_derivative(states)
    if method != "quadrature":
        raise ValueError(f"unknown overlap method {method!r}")
    dv = potential.derivatives(mesh.interior)[order]
    weighted = states.psi * (mesh.weights * dv)
    a = weighted @ states.psi.T
    a = 0.5 * (a + a.T)
    return OverlapTable(np.asarray(states.nu), np.asarray(states.omega), order, a)


def overlaps_from_derivative(states: BoundStates) -> OverlapTable:
    """First-order overlaps via <nu'|V'|nu> = -omega_{nu' nu} <nu'|d/dr|nu>.

    Diagonal entries vanish for bound states.
    """
    mesh = states.mesh
    r = mesh.r
    psi = np.zeros((len(states), len(r)))
    psi[:, 1:-1] = states.psi
    dpsi = np.gradient(psi, r, axis=1, edge_order=2)[:, 1:-1]
    d = (states.psi * mesh.weights) @ dpsi.T
    # <nu'|d|nu> = -<nu|d|nu'> for vanishing boundary values
    d = 0.5 * (d - d.T)
    w = np.asarray(states.omega)
    a = -(w[:, None] - w[None, :]) * d
    return OverlapTable(np.asarray(states.nu), w, 1, a)


# --- couplings -----------------------------------------------------------

def coupling_g(mode: PhononMode, a1: float, geometry: GeometryParams, material: MaterialParams) -> complex:
    """One-phonon cavity coupling (rad/s) for overlap ``a1`` in rad/s per m."""
    a_j = HBAR * a1
    return 1j * a_j / (math.sqrt(2 * math.pi) * math.sqrt(HBAR * material.density * mode.frequency * geometry.length)
                       * geometry.radius)


def coupling_g2(omega_mu, a1, geometry: GeometryParams, material: MaterialParams):
    """|g|^2 for cavity modes of frequency ``omega_mu`` (vectorised)."""
    a_j = HBAR * np.asarray(a1)
    return a_j**2 / (2 * math.pi * HBAR * material.density * np.asarray(omega_mu) * geometry.length
                     * geometry.radius**2)


def coupling_G(mode_frequency: float, a2_prime: float, a2: float, geometry: GeometryParams,
               material: MaterialParams) -> float:
    """Differential two-phonon coupling G_{nu' nu} = (G_nu' - G_nu) / 2 in rad/s."""
    denom = 4 * math.pi * material.density * mode_frequency * geometry.length * geometry.radius**2
    return HBAR * (a2_prime - a2) / denom


def _mode_arrays(m_max, geometry, material):
    m = np.arange(1, m_max + 1)
    w = m * m * cavity_frequency(1, geometry, material)
    return m, w, w / geometry.quality_factor, thermal_population(w, geometry.temperature)


def _adaptive(term, geometry, material, m_start=16, m_cap=1 << 14, tail=0.01):
    """Sum ``term(w, kappa, nbar)`` over m and both flexural orders.

    Doubles the cutoff until the last octave contributes < ``tail``.
    Returns (total, converged).
    """
    m_max = m_start
    while True:
        _, w, k, n = _mode_arrays(m_max, geometry, material)
        vals = len(FLEXURAL_ORDERS) * term(w, k, n)
        total = float(np.sum(vals))
        last = float(np.sum(vals[m_max // 2:]))
        if total == 0 or abs(last) < tail * abs(total):
            return total, True
        if m_max >= m_cap:
            return total, False
        m_max *= 2


def _re_k(w_atom, w, kappa):
    half = kappa / 2
    return (half / (half**2 + (abs(w_atom) - w) ** 2) + half / (half**2 + (abs(w_atom) + w) ** 2))


# --- depopulation ---------------------------------------------------------

def depopulation_rate(nu: int, table: OverlapTable, geometry: GeometryParams, material: MaterialParams,
                      max_distance: int = 5, neighbors=None):
    """Gamma^d_nu summed over cavity modes and states |nu'' - nu| <= max_distance.

    ``neighbors`` restricts the partner states explicitly.  Returns
    (rate, converged); the flag drops when the cavity sum did not converge,
    when a nearest neighbour is missing from the table, or when the
    farthest included partners still add more than 1%.
    """
    if table.order != 1:
        raise ValueError("depopulation needs first-order overlaps")
    i = table.index(nu)
    converged = True
    partners = neighbors if neighbors is not None else [
        n for n in table.nu if n != nu and abs(int(n) - nu) <= max_distance]
    for n in (nu - 1, nu + 1):
        if n not in table.nu and neighbors is None and n >= 0:
            converged = False
    total, edge = 0.0, 0.0
    for n in partners:
        j = table.index(int(n))
        a1 = table.matrix[j, i]
        w_at = table.omega[j] - table.omega[i]

        def term(w, kappa, nbar, a1=a1, w_at=w_at):
            return 2 * nbar * coupling_g2(w, a1, geometry, material) * _re_k(w_at, w, kappa)

        val, ok = _adaptive(term, geometry, material)
        converged &= ok
        total += val
        if abs(int(n) - nu) == max_distance:
            edge += val
    if neighbors is None and total > 0 and edge > 0.01 * total:
        converged = False
    return total, converged


def depopulation_nearest_neighbor(nu: int, nu_p: int, table: OverlapTable, geometry, material):
    """Gamma^(1)_{nu' nu} ~ 16 sum_m nbar |g|^2 Re[K- + K+] for a nearest-neighbour pair."""
    a1 = table[nu_p, nu]
    w_at = table.transition(nu_p, nu)

    def term(w, kappa, nbar):
        # the factor 2 for j = +-1 is applied by _adaptive
        return 8 * nbar * coupling_g2(w, a1, geometry, material) * _re_k(w_at, w, kappa)

    return _adaptive(term, geometry, material)[0]


def depopulation_small_cavity(a1: float, geometry: GeometryParams, material: MaterialParams) -> float:
    """Per-state rate Gamma^+- = 4 nbar |g_mu1|^2 / (omega_1 Q) for overlap ``a1``."""
    w1 = cavity_frequency(1, geometry, material)
    nbar = thermal_population(w1, geometry.temperature)
    return 4 * nbar * coupling_g2(w1, a1, geometry, material) / (w1 * geometry.quality_factor)


def depopulation_small_cavity_closed(a1: float, geometry: GeometryParams, material: MaterialParams) -> float:
    """Nearest-neighbour Gamma^(1) in the small-cavity, high-temperature limit.

    (64 / pi^7) k_B T L^5 / (hbar^2 R^5 Q) sqrt(rho / E^3) |A|^2 with A in J/m.
    """
    a_j = HBAR * a1
    L, R, Q = geometry.length, geometry.radius, geometry.quality_factor
    return (64 / math.pi**7 * KB * geometry.temperature * L**5 / (HBAR**2 * R**5 * Q)
            * math.sqrt(material.density / material.young_modulus**3) * a_j**2)


# --- dephasing ----------------------------------------------------------------

def dephasing_broadening(nu: int, nu_p: int, table: OverlapTable, geometry: GeometryParams,
                         material: MaterialParams):
    """Gamma^(2) = 8 sum_mu nbar (nbar + 1) G^2 / kappa.  Returns (rate, converged)."""
    if table.order != 2:
        raise ValueError("dephasing needs second-order overlaps")
    da = table[nu_p, nu_p] - table[nu, nu]
    if da == 0:
        return 0.0, True
    denom0 = 4 * math.pi * material.density * geometry.length * geometry.radius**2

    def term(w, kappa, nbar):
        g = HBAR * da / (denom0 * w)
        return 8 * nbar * (nbar + 1) * g * g / kappa

    return _adaptive(term, geometry, material)


def dephasing_fundamental(nu: int, nu_p: int, table: OverlapTable, geometry: GeometryParams,
                          material: MaterialParams) -> float:
    """Fundamental-mode estimate 16 nbar^2 G^2 Q / omega_1."""
    w1 = cavity_frequency(1, geometry, material)
    nbar = thermal_population(w1, geometry.temperature)
    g = coupling_G(w1, table[nu_p, nu_p], table[nu, nu], geometry, material)
    return 16 * nbar**2 * g * g * geometry.quality_factor / w1


def dephasing_closed(da2: float, geometry: GeometryParams, material: MaterialParams) -> float:
    """(32 / pi^12) k_B^2 T^2 L^8 Q / (hbar^2 R^9) sqrt(rho / E^5) (dA2)^2, dA2 in rad/s per m^2."""
    a_j = HBAR * da2
    L, R, Q = geometry.length, geometry.radius, geometry.quality_factor
    return (32 / math.pi**12 * (KB * geometry.temperature) ** 2 * L**8 * Q / (HBAR**2 * R**9)
            * math.sqrt(material.density / material.young_modulus**5) * a_j**2)


def total_linewidth(nu: int, nu_p: int, t1: OverlapTable, t2: OverlapTable, geometry: GeometryParams,
                    material: MaterialParams, max_distance: int = 5) -> LinewidthRecord:
    gd1, ok1 = depopulation_rate(nu, t1, geometry, material, max_distance)
    gd2, ok2 = depopulation_rate(nu_p, t1, geometry, material, max_distance)
    g2, ok3 = dephasing_broadening(nu, nu_p, t2, geometry, material)
    g1 = gd1 + gd2
    return LinewidthRecord(nu, nu_p, t1.transition(nu_p, nu), g1, g2, g1 + g2, ok1 and ok2 and ok3)


def driven_population(delta, omega_drive, gamma_minus, gamma_plus, gamma_z):
    """Steady-state upper-level population of a weakly driven, phonon-damped two-level system."""
    s = gamma_minus + gamma_plus
    if s <= 0:
        raise DegenerateBathError("gamma_minus + gamma_plus must be positive")
    g = s + 4 * gamma_z
    delta = np.asarray(delta, dtype=float)
    return omega_drive**2 / (2 * s) * (g / 2) / (delta**2 + (g / 2) ** 2) + gamma_plus / s


# --- traveling phonons (long fiber, optical trap) -------------------------------

def _stiffness_factor(geometry: GeometryParams, material: MaterialParams) -> float:
    return math.sqrt(geometry.radius**5 * math.sqrt(material.young_modulus * material.density**3))


def trap_depopulation_numeric(table: OverlapTable, geometry: GeometryParams, material: MaterialParams,
                              temperature: float | None = None) -> np.ndarray:
    """Depopulation rate (1/s) of every state in ``table`` from traveling flexural phonons."""
    if table.order != 1:
        raise ValueError("needs first-order overlaps")
    t = geometry.temperature if temperature is None else temperature
    pref = KB * t / (math.sqrt(2) * math.pi * HBAR**2 * _stiffness_factor(geometry, material))
    a_j = HBAR * table.matrix
    dw = np.abs(table.omega[:, None] - table.omega[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(dw > 0, a_j**2 / dw**2.5, 0.0)
    return pref * terms.sum(axis=0)


def trap_depopulation_harmonic(nu, omega_r: float, mass: float, geometry: GeometryParams,
                               material: MaterialParams, temperature: float | None = None):
    """Harmonic-trap depopulation rate (1/s)."""
    t = geometry.temperature if temperature is None else temperature
    nu = np.asarray(nu)
    return ((2 * nu + 1) / (2 * math.sqrt(2) * math.pi) * KB * t * mass / HBAR
            * np.sqrt(omega_r) / _stiffness_factor(geometry, material))


def frequency_shift(nu: int, t2: OverlapTable, geometry: GeometryParams, material: MaterialParams) -> float:
    """Diagnostic thermal shift sum_mu G_mu nu nbar (not applied to spectra)."""
    a2 = t2[nu, nu]
    denom0 = 2 * math.pi * material.density * geometry.length * geometry.radius**2

    def term(w, kappa, nbar):
        return HBAR * a2 / (denom0 * w) * nbar

    return _adaptive(term, geometry, material)[0]


__all__ = [
    "DegenerateBathError", "LinewidthRecord", "MeshMismatchError", "OverlapTable", "coupling_G",
    "coupling_g", "coupling_g2", "dephasing_broadening", "dephasing_closed", "dephasing_fundamental",
    "depopulation_nearest_neighbor", "depopulation_rate", "depopulation_small_cavity",
    "depopulation_small_cavity_closed", "driven_population", "frequency_shift", "overlaps",
    "overlaps_from_derivative", "sound_speed", "total_linewidth", "trap_depopulation_harmonic",
    "trap_depopulation_numeric",
]
