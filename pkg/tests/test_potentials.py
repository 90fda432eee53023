import numpy as np
import pytest

from nanobound.config import EPS0, HBAR, TWO_PI, Params
from nanobound.photon import mode_field, normalization_integral, solve_dispersion
from nanobound.potentials import (AdsorptionPotential, ConstantPotential, DomainError, HarmonicPotential, NoTrapError,
                                  adsorption_potential, beam_potential, centrifugal_correction, exp_barrier_potential,
                                  find_trap, hybrid_potential, two_color_trap_potential)

P = Params()
R = P.geometry.radius
MASS = P.atom.mass


@pytest.mark.parametrize("name", ["adsorbed", "adsorbed-exp", "hybrid", "trap"])
def test_analytic_derivatives_match_finite_differences(name):
    from nanobound.scenarios import scenario_potential
    pot = scenario_potential(name, P)
    rng = np.random.default_rng(7)
    xs = np.sort(np.exp(rng.uniform(np.log(0.3e-9), np.log(800e-9), 100)))
    r = R + xs
    v, dv, ddv = pot.derivatives(r)
    h = xs * 1e-5
    vp, dvp, _ = pot.derivatives(r + h)
    vm, dvm, _ = pot.derivatives(r - h)
    fd1 = (vp - vm) / (2 * h)
    fd2 = (dvp - dvm) / (2 * h)
    # relative to the local scale of each derivative, to survive zero crossings
    assert np.max(np.abs(fd1 - dv) / (np.abs(dv) + 1e-3 * np.abs(v) / xs)) < 1e-6
    assert np.max(np.abs(fd2 - ddv) / (np.abs(ddv) + 1e-3 * np.abs(dv) / xs)) < 1e-6


def test_adsorption_minimum_depth():
    pot = adsorption_potential(P)
    assert pot.minimum_offset == pytest.approx(0.190e-9, abs=1e-12)
    assert pot(R + pot.minimum_offset)[0] / TWO_PI == pytest.approx(-128e12, rel=1e-10)
    assert pot.first(R + pot.minimum_offset)[0] == pytest.approx(0.0, abs=1e-9 * abs(pot.depth) / 1e-10)


def test_adsorption_tail_is_van_der_waals():
    pot = adsorption_potential(P)
    x = 60e-9
    assert pot(R + x)[0] == pytest.approx(-P.atom.c3 / x**3, rel=1e-3)


def test_adsorption_domain():
    with pytest.raises(DomainError):
        adsorption_potential(P)(R)


def test_single_stationary_point():
    pot = adsorption_potential(P)
    x = np.geomspace(0.05e-9, 5e-6, 200001)
    dv = pot.first(R + x)
    assert np.count_nonzero(np.sign(dv[:-1]) != np.sign(dv[1:])) == 1


def test_exp_barrier_zero_amplitude_is_pure_tail():
    from nanobound.potentials import ExpBarrierAdsorption
    pot = ExpBarrierAdsorption(P.atom.exp_c3, 0.0, P.atom.exp_decay, R)
    x = np.array([1e-9, 10e-9])
    np.testing.assert_allclose(pot(R + x), -P.atom.exp_c3 / x**3, rtol=1e-13)


@pytest.mark.xfail(strict=True, reason="footnote parameters give a -159.7 THz minimum, not -128 THz")
def test_exp_barrier_depth_matches_polynomial_model():
    assert exp_barrier_potential(P).depth / TWO_PI == pytest.approx(-128e12, rel=0.02)


def test_exp_barrier_depth_frozen():
    # independent brute-force minimum on a fine grid
    pot = exp_barrier_potential(P)
    x = np.linspace(0.1e-9, 0.4e-9, 300001)
    v = pot(R + x)
    assert pot.depth == pytest.approx(v.min(), rel=1e-9)
    assert pot.depth / TWO_PI / 1e12 == pytest.approx(-159.709, abs=1e-3)


def test_optical_potential_red_beam():
    op = beam_potential(P, "red")
    r = R + np.linspace(1e-9, 1e-6, 500)
    v = op(r)
    assert np.all(v < 0)
    # evanescent: monotone decay toward zero
    assert np.all(np.diff(np.abs(v)) < 0)


def test_optical_potential_power_calibration_oracle():
    # field scale from P = v_g W (energy route) instead of the Poynting flux
    op = beam_potential(P, "red")
    m = op.mode
    dw = m.omega * 1e-6
    vg = 2 * dw / (solve_dispersion(m.omega + dw, R, m.permittivity).k
                   - solve_dispersion(m.omega - dw, R, m.permittivity).k)
    w = 0.5 * EPS0 * TWO_PI * normalization_integral(m)
    s2 = P.beams["red"].power / (vg * w)
    r = R + 100e-9
    i = np.sum(np.abs(mode_field(m, np.array([r]))) ** 2)
    expected = -P.beams["red"].polarizability * s2 * i / (4 * HBAR)
    assert op(r)[0] == pytest.approx(expected, rel=1e-8)
    assert op(r)[0] / TWO_PI / 1e6 == pytest.approx(-3.58973, abs=1e-5)


def test_optical_potential_inside_fiber_rejected():
    with pytest.raises(DomainError):
        beam_potential(P, "red")(R * 0.99)


def test_hybrid_is_pointwise_sum():
    hyb = hybrid_potential(P)
    r = R + np.geomspace(0.2e-9, 1e-6, 300)
    parts = adsorption_potential(P).derivatives(r), beam_potential(P, "red").derivatives(r)
    for k in range(3):
        np.testing.assert_array_equal(hyb.derivatives(r)[k], parts[0][k] + parts[1][k])


def test_two_color_trap_fit():
    pot = two_color_trap_potential(P)
    fit = find_trap(pot, R, MASS)
    assert 100e-9 < fit.r0 - R < 500e-9
    assert fit.barrier_r < fit.r0 and fit.barrier_height > 0
    assert fit.omega_r == pytest.approx(np.sqrt(HBAR * pot.second(fit.r0)[0] / MASS), rel=1e-14)
    # frozen values of this parameter set
    assert fit.omega_r / TWO_PI == pytest.approx(144.3e3, rel=1e-3)
    assert fit.depth / TWO_PI == pytest.approx(-3.410e6, rel=1e-3)


def test_no_trap_without_blue_light():
    pot = two_color_trap_potential(P.with_beam("blue", power=0.0))
    with pytest.raises(NoTrapError):
        find_trap(pot, R, MASS)


def test_centrifugal_correction():
    base = ConstantPotential(0.0)
    r = np.array([R + 50e-9])
    v0 = centrifugal_correction(base, 0, MASS)(r)[0]
    assert v0 == pytest.approx(-HBAR / (8 * MASS * r[0] ** 2), rel=1e-14)
    v1 = centrifugal_correction(base, 1000, MASS)(r)[0]
    v2 = centrifugal_correction(base, 2000, MASS)(r)[0]
    assert v2 / v1 == pytest.approx(4, rel=1e-6)
    with pytest.raises(ValueError):
        centrifugal_correction(base, -1, MASS)


def test_harmonic_test_potential():
    h = HarmonicPotential(MASS, TWO_PI * 1e5, center=1e-6)
    v, dv, ddv = h.derivatives(np.array([1e-6 + h.length]))
    assert v[0] == pytest.approx(h.omega / 2, rel=1e-12)
    assert ddv[0] == pytest.approx(MASS * h.omega**2 / HBAR, rel=1e-14)


def test_adsorption_direct_construction():
    pot = AdsorptionPotential(1.0, 1.0, 0.0)
    assert pot.minimum_offset == pytest.approx(4 ** (1 / 9))
