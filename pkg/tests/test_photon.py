import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nanobound.config import C_LIGHT, EPS0, TWO_PI
from nanobound.photon import (AmbiguousModeError, cutoff_wavelength, frequency_equation, guided_window,
                              mode_field, mode_power, normalization_integral, scan_roots, solve_dispersion,
                              solve_wavelength)

R, EPS = 305e-9, 2.1


def test_cutoff_wavelength_case_study():
    assert cutoff_wavelength(R, EPS) == pytest.approx(835.7e-9, abs=0.1e-9)


def test_cutoff_scales_linearly_with_radius():
    assert cutoff_wavelength(2 * R, EPS) == pytest.approx(2 * cutoff_wavelength(R, EPS), rel=1e-14)


def test_cutoff_vanishes_as_index_contrast_vanishes():
    assert cutoff_wavelength(R, 1 + 1e-12) < 1e-12


def test_cutoff_rejects_eps_at_most_one():
    with pytest.raises(ValueError):
        cutoff_wavelength(R, 1.0)


def test_single_root_inside_guided_window():
    mode = solve_wavelength(1000e-9, R, EPS)
    lo, hi = mode.omega / C_LIGHT, mode.omega * math.sqrt(EPS) / C_LIGHT
    assert lo < mode.k < hi
    assert len(scan_roots(mode.omega, R, EPS, 10_000)) == 1


def test_residual_is_tiny():
    mode = solve_wavelength(1000e-9, R, EPS)
    # scale of the equation: compare with its value one part in 1e6 away from the root
    ref = abs(frequency_equation(mode.k * (1 + 1e-6), mode.omega, R, EPS))
    assert abs(frequency_equation(mode.k, mode.omega, R, EPS)) < 1e-10 * ref * 1e6


def test_effective_index_matches_fine_scan():
    # independent brute-force bracket: 1e6 samples of the frequency equation
    omega = TWO_PI * C_LIGHT / 1000e-9
    lo, hi = guided_window(omega, EPS)
    k = np.linspace(lo, hi, 1_000_001)
    f = np.array([frequency_equation(x, omega, R, EPS) for x in k])
    i = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    i = i[np.isfinite(f[i]) & np.isfinite(f[i + 1])]
    assert len(i) == 1
    n_scan = 0.5 * (k[i[0]] + k[i[0] + 1]) * C_LIGHT / omega
    mode = solve_wavelength(1000e-9, R, EPS)
    assert mode.effective_index == pytest.approx(n_scan, abs=(hi - lo) * C_LIGHT / omega / 1e6)
    # frozen value of that scan
    assert mode.effective_index == pytest.approx(1.15558, abs=1e-5)


def test_above_cutoff_is_ambiguous():
    with pytest.raises(AmbiguousModeError):
        solve_wavelength(800e-9, R, EPS)


@pytest.mark.parametrize("lam", [840e-9, 1000e-9, 1064e-9])
def test_normalization(lam):
    mode = solve_wavelength(lam, R, EPS)
    assert EPS0**2 * normalization_integral(mode) == pytest.approx(1.0, rel=1e-8)


def test_tangential_components_continuous():
    mode = solve_wavelength(1000e-9, R, EPS)
    d = R * 1e-12
    inner, outer = mode_field(mode, np.array([R - d])), mode_field(mode, np.array([R + d]))
    for c in (1, 2):
        assert abs(inner[c, 0] - outer[c, 0]) < 1e-8 * abs(outer[c, 0])
    # normal component jumps by eps
    assert abs(inner[0, 0] * EPS - outer[0, 0]) < 1e-8 * abs(outer[0, 0])


def test_evanescent_decay_and_axis():
    mode = solve_wavelength(1000e-9, R, EPS)
    e = mode_field(mode, np.array([0.0, R + 30 / mode.b]))
    assert np.all(np.isfinite(e))
    assert np.max(np.abs(e[:, 1])) < 1e-10 * np.max(np.abs(e[:, 0]))


def test_power_equals_group_velocity_times_energy():
    # P = v_g W with W from the electric energy; v_g by central difference of k(omega)
    mode = solve_wavelength(1000e-9, R, EPS)
    dw = mode.omega * 1e-6
    vg = 2 * dw / (solve_dispersion(mode.omega + dw, R, EPS).k - solve_dispersion(mode.omega - dw, R, EPS).k)
    # fields scaled to the normalised amplitude; W = (eps0 / 2) 2 pi int eps |E|^2 r dr
    w = 0.5 * EPS0 * TWO_PI * normalization_integral(mode)
    assert mode_power(mode) == pytest.approx(vg * w, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=850e-9, max_value=1600e-9))
def test_k_increases_with_frequency(lam):
    m1 = solve_wavelength(lam, R, EPS)
    m2 = solve_wavelength(lam * (1 - 1e-3), R, EPS)
    assert m2.k > m1.k


def test_normalization_quadrature_independent():
    # cross-check the adaptive integral with a plain trapezoid sum
    mode = solve_wavelength(1064e-9, R, EPS)
    # stop just inside the surface so the interior branch is used for the end point
    r_in = np.linspace(0, R * (1 - 1e-14), 20001)
    r_out = np.linspace(R, R + 30 / mode.b, 200001)
    f = lambda r, e: r * e * np.sum(np.abs(mode_field(mode, r)) ** 2, axis=0)  # noqa: E731
    total = integrate.trapezoid(f(r_in, EPS), r_in) + integrate.trapezoid(f(r_out, 1.0), r_out)
    assert total == pytest.approx(normalization_integral(mode), rel=1e-5)
