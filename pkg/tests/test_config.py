import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from nanobound.config import (CONFIG_KEYS, H, HBAR, TWO_PI, ConfigError, MaterialParams, Params,
                              adsorption_minimum_position, cesium_scalar_polarizability, load_config,
                              params_from_mapping, parse_config_text, solve_repulsive_amplitude, sound_speed)

C3 = TWO_PI * 1.18e12 * 1e-27
VMIN = -TWO_PI * 128e12


def _brute_minimum(c3, d12):
    f = lambda x: -c3 / x**3 + d12 / x**12  # noqa: E731
    x0 = adsorption_minimum_position(c3, d12)
    res = optimize.minimize_scalar(f, bracket=(0.5 * x0, x0, 2 * x0), tol=1e-14)
    return res.x, f(res.x)


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# nothing\n\n")
    cfg = load_config(p)
    assert cfg == Params()
    assert cfg.geometry.radius == 305e-9
    assert cfg.material.permittivity == 2.1
    assert cfg.atom.c3 == pytest.approx(C3, rel=1e-15)


def test_override_temperature(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("fiber.temperature_K = 600  # trap benchmark\n")
    cfg = load_config(p)
    assert cfg.geometry.temperature == 600
    assert cfg.geometry.radius == Params().geometry.radius


@pytest.mark.parametrize("text", ["fiber.radius_nm = -1", "fiber.radius_nm = nan", "atom.vmin_THz = 5",
                                  "material.permittivity = 0.5", "no.such.key = 1", "just words",
                                  "beams.red.power_mW = -3", "beams.blue.polarization = elliptic"])
def test_bad_values_rejected(text, tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text(text + "\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_error_names_field(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("fiber.radius_nm = -1\n")
    with pytest.raises(ConfigError, match="fiber.radius_nm"):
        load_config(p)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/file.cfg")


def test_env_fallback(tmp_path, monkeypatch):
    p = tmp_path / "c.cfg"
    p.write_text("fiber.length_um = 7\n")
    monkeypatch.setenv("NANOBOUND_CONFIG", str(p))
    assert load_config().geometry.length == pytest.approx(7e-6)
    monkeypatch.delenv("NANOBOUND_CONFIG")
    assert load_config() == Params()


def test_every_documented_key_parses():
    samples = {"polarization": "linear", "configuration": "running"}
    for key in CONFIG_KEYS:
        field = key.rsplit(".", 1)[-1]
        value = samples.get(field, "-100" if key == "atom.vmin_THz" else "900" if "wavelength" in key else "1.5")
        params_from_mapping({key: value})


def test_wavelength_override_updates_polarizability():
    p = params_from_mapping(parse_config_text("beams.red.wavelength_nm = 1000"))
    assert p.beams["red"].polarizability == pytest.approx(cesium_scalar_polarizability(1000e-9))


def test_d_override_is_used():
    p = params_from_mapping({"atom.d_kHz_nm12": "96.5"})
    assert p.atom.d12 == pytest.approx(TWO_PI * 96.5e3 * 1e-108)


def test_sound_speed_silica():
    assert sound_speed(MaterialParams()) == pytest.approx(5.74e3, rel=2e-3)


def test_sound_speed_scaling():
    base = MaterialParams()
    assert sound_speed(MaterialParams(base.density, 4 * base.young_modulus)) == pytest.approx(
        2 * sound_speed(base), rel=1e-15)
    assert sound_speed(MaterialParams(1.0, 1.0)) == 1.0


def test_repulsive_amplitude_reference():
    d = solve_repulsive_amplitude(C3, VMIN)
    # frozen closed-form result; brute-force minimisation confirms the depth below
    assert d / TWO_PI / 1e3 / 1e-108 == pytest.approx(97.50, rel=1e-3)
    x, v = _brute_minimum(C3, d)
    assert v == pytest.approx(VMIN, rel=1e-10)
    assert x == pytest.approx(0.190e-9, abs=1e-12)


def test_repulsive_amplitude_domain():
    with pytest.raises(ValueError):
        solve_repulsive_amplitude(C3, 0.0)
    with pytest.raises(ValueError):
        solve_repulsive_amplitude(-C3, VMIN)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0), st.floats(min_value=0.05, max_value=20.0))
def test_round_trip_and_scaling(c_scale, s):
    c3 = C3 * c_scale
    d = solve_repulsive_amplitude(c3, VMIN)
    assert _brute_minimum(c3, d)[1] == pytest.approx(VMIN, rel=1e-10)
    assert solve_repulsive_amplitude(c3, s * VMIN) == pytest.approx(d * s**-3, rel=1e-12)


def test_unit_conversions_exact():
    assert H == pytest.approx(TWO_PI * HBAR, rel=1e-15)
    p = params_from_mapping({"fiber.radius_nm": "305", "atom.vmin_THz": "-128"})
    assert p.geometry.radius == 305e-9
    assert p.atom.vmin == -128 * TWO_PI * 1e12


def test_polarizability_static_and_resonance_signs():
    au = cesium_scalar_polarizability(1e-3) / cesium_scalar_polarizability(1e-3) * 401.0
    assert au == 401.0
    assert cesium_scalar_polarizability(1064e-9) > 0  # red of both D lines
    assert cesium_scalar_polarizability(840e-9) < 0  # blue of both D lines
    assert math.isfinite(cesium_scalar_polarizability(1000e-9))


def test_snapshot_is_json_ready():
    import json
    snap = Params().snapshot()
    json.dumps(snap)
    assert snap["geometry.radius"] == 305e-9
    assert np.isfinite(snap["atom.d12"])
