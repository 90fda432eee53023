"""HE11 guided modes of a step-index cylinder in vacuum.

Only the azimuthal order m = +1 is modelled; the m = -1 mode follows by
mirror symmetry (the azimuthal and axial field components flip sign).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .config import C_LIGHT, EPS0, MU0, TWO_PI

BESSEL_J0_FIRST_ZERO = special.jn_zeros(0, 1)[0]


class NoGuidedModeError(RuntimeError):
    pass


class AmbiguousModeError(RuntimeError):
    """More than one root in the guided window: frequency above cutoff."""


def cutoff_frequency(radius: float, permittivity: float) -> float:
    if not permittivity > 1:
        raise ValueError("permittivity must exceed 1")
    return BESSEL_J0_FIRST_ZERO * C_LIGHT / (radius * math.sqrt(permittivity - 1))


def cutoff_wavelength(radius: float, permittivity: float) -> float:
    """Free-space wavelength below which the fiber is no longer single mode."""
    return TWO_PI * C_LIGHT / cutoff_frequency(radius, permittivity)


def _transverse(omega, k, eps):
    k0 = omega / C_LIGHT
    a = math.sqrt(max(eps * k0 * k0 - k * k, 0.0))
    b = math.sqrt(max(k * k - k0 * k0, 0.0))
    return a, b


def frequency_equation_terms(k, omega, radius, eps):
    """Left and right side of the HE/EH frequency equation.

    Both sides are divided by K1(bR)^2 to keep them O(1).
    """
    a, b = _transverse(omega, k, eps)
    ar, br = a * radius, b * radius
    j1 = special.jv(1, ar)
    dj1 = special.jvp(1, ar)
    kratio = special.kvp(1, br) / special.kv(1, br)
    lhs = (a * j1 * kratio + b * dj1) * (a * j1 * kratio + eps * b * dj1)
    rhs = ((eps - 1) / (radius * C_LIGHT) * k * omega / (a * b) * j1) ** 2
    return lhs, rhs


def frequency_equation(k, omega, radius, eps):
    lhs, rhs = frequency_equation_terms(k, omega, radius, eps)
    return lhs - rhs


def guided_window(omega, eps, margin=1e-9):
    k0 = omega / C_LIGHT
    lo, hi = k0, k0 * math.sqrt(eps)
    span = hi - lo
    return lo + margin * span, hi - margin * span


def scan_roots(omega, radius, eps, n=10_000):
    """Sign-change brackets of the frequency equation on a uniform k grid."""
    lo, hi = guided_window(omega, eps)
    ks = np.linspace(lo, hi, n + 1)
    f = np.array([frequency_equation(k, omega, radius, eps) for k in ks])
    idx = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    return [(ks[i], ks[i + 1]) for i in idx]


@dataclass(frozen=True)
class GuidedMode:
    omega: float
    k: float
    a: float
    b: float
    radius: float
    permittivity: float
    amplitude: float
    alpha_t: float
    beta_t: float

    @property
    def wavelength(self) -> float:
        return TWO_PI * C_LIGHT / self.omega

    @property
    def effective_index(self) -> float:
        return self.k * C_LIGHT / self.omega

    def field(self, r):
        return mode_field(self, r)


def solve_dispersion(omega: float, radius: float, permittivity: float, scan_points=2000) -> GuidedMode:
    """Solve for the HE11 propagation constant at angular frequency ``omega``."""
    eps = permittivity
    if omega >= cutoff_frequency(radius, eps):
        raise AmbiguousModeError("frequency above single-mode cutoff")
    brackets = scan_roots(omega, radius, eps, scan_points)
    if not brackets:
        raise NoGuidedModeError(f"no sign change for omega={omega:g}")
    if len(brackets) > 1:
        raise AmbiguousModeError(f"{len(brackets)} roots in the guided window")
    k = optimize.brentq(frequency_equation, *brackets[0], args=(omega, radius, eps),
                        xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    a, b = _transverse(omega, k, eps)
    ar, br = a * radius, b * radius
    j1, dj1 = special.jv(1, ar), special.jvp(1, ar)
    k1, dk1 = special.kv(1, br), special.kvp(1, br)
    alpha_t = j1 / k1
    beta_t = ((eps - 1) / (radius * C_LIGHT) * k * omega / (a * b)
              * j1 * k1 / (a * j1 * dk1 + b * dj1 * k1))
    mode = GuidedMode(omega, k, a, b, radius, eps, 1.0, alpha_t, beta_t)
    norm = normalization_integral(mode)
    return GuidedMode(omega, k, a, b, radius, eps, 1.0 / (EPS0 * math.sqrt(norm)), alpha_t, beta_t)


def solve_wavelength(wavelength: float, radius: float, permittivity: float) -> GuidedMode:
    return solve_dispersion(TWO_PI * C_LIGHT / wavelength, radius, permittivity)


def _components(mode: GuidedMode, r: np.ndarray, order: int):
    """Field components and their r-derivatives up to ``order`` (<= 2).

    Returns an array of shape (order + 1, 3, len(r)).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros((order + 1, 3, r.size), dtype=complex)
    k0 = mode.omega / C_LIGHT
    A, k, bt = mode.amplitude, mode.k, mode.beta_t
    for inside in (True, False):
        sel = r < mode.radius if inside else r >= mode.radius
        if not np.any(sel):
            continue
        rr = r[sel]
        if inside:
            q, zv, zd = mode.a, special.jv, special.jvp
            pr, pp, pz = 1j * A / q**2, A / q**2, A
        else:
            q, zv = mode.b, special.kv
            zd = special.kvp
            pr = -mode.alpha_t * 1j * A / q**2
            pp = -mode.alpha_t * A / q**2
            pz = mode.alpha_t * A
        x = q * rr
        z = [zv(1, x)] + [zd(1, x, n) for n in (1, 2, 3)]
        # Z(qr)/r with the r -> 0 limit of J1(ar)/r
        with np.errstate(divide="ignore", invalid="ignore"):
            u2 = np.where(rr > 0, z[0] / rr, q / 2)
            u2d = np.where(rr > 0, q * z[1] / rr - z[0] / rr**2, 0.0)
            u2dd = np.where(rr > 0, q * q * z[2] / rr - 2 * q * z[1] / rr**2 + 2 * z[0] / rr**3,
                            -3 * q**3 / 8)
        u1 = [q * z[1], q * q * z[2], q**3 * z[3]]  # q Z'(qr) and derivatives
        u2s = [u2, u2d, u2dd]
        u0 = [z[0], q * z[1], q * q * z[2]]
        for n in range(order + 1):
            out[n, 0, sel] = pr * (k * u1[n] - k0 * bt * u2s[n])
            out[n, 1, sel] = pp * (bt * k0 * u1[n] - k * u2s[n])
            out[n, 2, sel] = pz * u0[n]
    return out


def mode_field(mode: GuidedMode, r):
    """Radial partial wave (E_r, E_phi, E_z) at radius ``r``; shape (3, n)."""
    return _components(mode, r, 0)[0]


def intensity_profile(mode: GuidedMode, r, polarization="circular", phi=0.0, plane_angle=0.0,
                      standing=False, order=2):
    """|E|^2 of the mode field and its r-derivatives, per unit mode amplitude.

    Quasi-linear light is the (m=+1 + m=-1)/sqrt(2) superposition with its
    polarization plane at ``plane_angle``; a standing wave is evaluated at a
    z-antinode of the transverse field (forward + backward beam).
    """
    c = _components(mode, r, order)
    if polarization == "circular":
        weights = np.array([1.0, 1.0, 1.0])
    else:
        cos2 = math.cos(phi - plane_angle) ** 2
        weights = 2.0 * np.array([cos2, 1.0 - cos2, cos2])
    if standing:
        # transverse components add in phase at the antinode, E_z cancels
        weights = 4.0 * weights * np.array([1.0, 1.0, 0.0])
    res = []
    f = c[0]
    res.append(np.einsum("i,in->n", weights, np.abs(f) ** 2))
    if order >= 1:
        res.append(np.einsum("i,in->n", weights, 2 * np.real(np.conj(f) * c[1])))
    if order >= 2:
        res.append(np.einsum("i,in->n", weights, 2 * (np.abs(c[1]) ** 2 + np.real(np.conj(f) * c[2]))))
    return res


def tail_radius(mode: GuidedMode) -> float:
    return mode.radius + 30.0 / mode.b


def normalization_integral(mode: GuidedMode) -> float:
    """Integral of r eps(r) |E(r)|^2 dr (without the eps0^2 prefactor)."""
    def integrand(r, eps):
        return r * eps * float(np.sum(np.abs(mode_field(mode, r)) ** 2))

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    inner = integrate.quad(integrand, 0.0, mode.radius, args=(mode.permittivity,), **opts)[0]
    outer = integrate.quad(integrand, mode.radius, tail_radius(mode), args=(1.0,), **opts)[0]
    return inner + outer


def axial_poynting_density(mode: GuidedMode, r):
    """Time-averaged S_z(r) for the field E = mode_field * exp(i(phi + k z - w t))."""
    c = _components(mode, r, 1)
    e, de = c[0], c[1]
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w = mode.omega
    with np.errstate(divide="ignore", invalid="ignore"):
        ez_over_r = np.where(r > 0, e[2] / r, de[2])
    h_r = (ez_over_r - mode.k * e[1]) / (w * MU0)
    h_phi = (1j * mode.k * e[0] - de[2]) / (1j * w * MU0)
    return 0.5 * np.real(e[0] * np.conj(h_phi) - e[1] * np.conj(h_r))


def mode_power(mode: GuidedMode) -> float:
    """Guided power carried by the mode field at unit amplitude scale (W)."""
    def integrand(r):
        return float(axial_poynting_density(mode, r)[0]) * r

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    inner = integrate.quad(integrand, 0.0, mode.radius, **opts)[0]
    outer = integrate.quad(integrand, mode.radius, tail_radius(mode), **opts)[0]
    return TWO_PI * (inner + outer)


def field_scale_for_power(mode: GuidedMode, power: float) -> float:
    """Factor s such that s * mode_field carries ``power`` watts."""
    return math.sqrt(power / mode_power(mode))
