import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanobound.config import HBAR, TWO_PI, Params
from nanobound.eigensolver import (MeshPolicy, NonConvergenceError, box_mesh, build_mesh, harmonic_mesh,
                                   solve_bound_states, sturm_count, tridiagonal, uniform_mesh)
from nanobound.potentials import BoxPotential, HarmonicPotential, adsorption_potential, centrifugal_correction
from nanobound.scenarios import MHZ

P = Params()
MASS = P.atom.mass
R = P.geometry.radius
WINDOW = (-25 * MHZ, -0.05 * MHZ)


@pytest.fixture(scope="module")
def deep():
    pot = adsorption_potential(P)
    mesh = build_mesh(pot, WINDOW, MASS)
    return pot, mesh, solve_bound_states(pot, mesh, WINDOW, MASS)


def test_harmonic_oracle():
    h = HarmonicPotential(MASS, TWO_PI * 1e5)
    states = solve_bound_states(h, harmonic_mesh(h), (0.1 * h.omega, 19.9 * h.omega), MASS)
    assert list(states.nu) == list(range(20))
    exact = (states.nu + 0.5) * h.omega
    assert np.max(np.abs(states.omega - exact) / exact) < 1e-6


def test_box_oracle():
    box = BoxPotential(1e-6)
    e1 = HBAR * math.pi**2 / (2 * MASS * box.width**2)
    states = solve_bound_states(box, box_mesh(box), (0.5 * e1, 400.5 * e1), MASS)
    assert list(states.nu) == list(range(20))
    exact = e1 * (states.nu + 1) ** 2
    assert np.max(np.abs(states.omega - exact) / exact) < 1e-6


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=1e4, max_value=1e6))
def test_harmonic_oracle_any_frequency(f):
    h = HarmonicPotential(MASS, TWO_PI * f, center=2e-6)
    states = solve_bound_states(h, harmonic_mesh(h), (0.1 * h.omega, 5.9 * h.omega), MASS)
    exact = (states.nu + 0.5) * h.omega
    assert len(states) == 6
    assert np.max(np.abs(states.omega - exact) / exact) < 1e-6


def test_labels_found_by_sturm_count(deep):
    _, _, states = deep
    assert np.all(np.diff(states.nu) == 1)
    np.testing.assert_array_equal(states.nodes(), states.nu)
    assert np.all(np.diff(states.omega) > 0)


def test_orthonormality(deep):
    _, _, states = deep
    gram = (states.psi * states.mesh.weights) @ states.psi.T
    assert np.max(np.abs(gram - np.eye(len(states)))) < 1e-6


def test_residual(deep):
    pot, _, states = deep
    mesh = states.mesh
    diag, off = tridiagonal(pot, mesh, MASS)
    phi = states.psi * np.sqrt(mesh.weights)
    for v in phi:
        tv = diag * v
        tv[:-1] += off * v[1:]
        tv[1:] += off * v[:-1]
        lam = v @ tv
        assert np.linalg.norm(tv - lam * v) / np.linalg.norm(v) < 1e-6 * abs(lam)


def test_boundaries_are_dirichlet(deep):
    _, _, states = deep
    edge = np.abs(states.psi[:, [0, -1]]).max()
    assert edge < 1e-6 * np.abs(states.psi).max()


def test_mesh_doubling_drift(deep):
    pot, mesh, states = deep
    fine = solve_bound_states(pot, mesh.refine(2), WINDOW, MASS)
    np.testing.assert_array_equal(fine.nu, states.nu)
    assert np.max(np.abs(fine.omega - states.omega) / np.abs(states.omega)) < 1e-5


def test_outer_box_independence(deep):
    pot, mesh, states = deep
    wide = solve_bound_states(pot, mesh.extend(2 * mesh.r_out - mesh.r_in), WINDOW, MASS)
    np.testing.assert_array_equal(wide.nu, states.nu)
    assert np.max(np.abs(wide.omega - states.omega)) < TWO_PI * 1.0


def test_error_estimate_within_tolerance(deep):
    _, _, states = deep
    tol = np.maximum(1e-4 * np.abs(states.omega), TWO_PI * 10)
    assert np.all(states.error < tol)


def test_mesh_tail_and_wall(deep):
    pot, mesh, _ = deep
    # tail: C / x^3 = |E_hi| / 100
    x_tail = (100 * P.atom.c3 / abs(WINDOW[1])) ** (1 / 3)
    assert mesh.r_out - R >= x_tail * 0.99
    assert mesh.r_out - R > 1e-6
    # wall: inside the classically forbidden region, ten times the depth
    assert pot(mesh.r_in)[0] > 9.9 * abs(pot.depth)
    # de Broglie wavelength at the well bottom
    lam = TWO_PI / math.sqrt(2 * MASS * abs(pot.depth) / HBAR)
    assert lam == pytest.approx(3.4e-12, rel=0.02)
    bottom = np.abs(mesh.r - (R + pot.minimum_offset)) < 0.05e-9
    assert np.max(np.diff(mesh.r)[bottom[:-1]]) < lam / 10


def test_window_validation():
    pot = adsorption_potential(P)
    with pytest.raises(ValueError):
        build_mesh(pot, (-1 * MHZ, -2 * MHZ), MASS)
    with pytest.raises(ValueError):
        build_mesh(pot, (-1 * MHZ, 2 * MHZ), MASS)


def test_too_coarse_mesh_fails_loudly():
    pot = adsorption_potential(P)
    window = (-25 * MHZ, -0.05 * MHZ)
    mesh = build_mesh(pot, window, MASS, MeshPolicy(points_per_wavelength=3))
    with pytest.raises(NonConvergenceError) as info:
        solve_bound_states(pot, mesh, window, MASS)
    assert info.value.window == window


def test_sturm_count_matches_dense_eigenvalues():
    rng = np.random.default_rng(3)
    d, e = rng.normal(size=50), rng.normal(size=49)
    full = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    ev = np.linalg.eigvalsh(full)
    for x in (-2.0, 0.1, 1.7):
        assert sturm_count(d, e, x) == np.count_nonzero(ev < x)


def test_uniform_mesh_refine():
    m = uniform_mesh(0.0, 1.0, 10)
    f = m.refine(2)
    assert len(f.r) == 21
    np.testing.assert_allclose(f.r, np.linspace(0, 1, 21), atol=1e-15)


def _centrifugal_transition_shift(l):
    pot = adsorption_potential(P)
    mesh = build_mesh(pot, (-6 * MHZ, -0.05 * MHZ), MASS)
    base = solve_bound_states(pot, mesh, (-6 * MHZ, -0.05 * MHZ), MASS)
    bent = solve_bound_states(centrifugal_correction(pot, l, MASS), mesh, (-6 * MHZ, 2 * MHZ), MASS)
    keep = base.omega < -0.3 * MHZ
    nus = base.nu[keep]
    assert set(nus.tolist()) <= set(bent.nu.tolist()), "weakly bound levels lost"
    wb = np.array([bent.omega[bent.index_of(n)] for n in nus])
    shift = np.abs(np.diff(wb) - np.diff(base.omega[keep]))
    return shift, np.min(np.diff(base.omega[keep]))


def test_centrifugal_small_l_keeps_transitions():
    shift, spacing = _centrifugal_transition_shift(10)
    assert np.max(shift) < 0.1 * spacing


@pytest.mark.xfail(strict=True, reason="l=100 adds ~4 MHz at the surface and unbinds the weakly bound levels")
def test_centrifugal_shift_below_level_spacing():
    shift, spacing = _centrifugal_transition_shift(100)
    assert np.max(shift) < spacing
