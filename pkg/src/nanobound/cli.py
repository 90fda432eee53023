"""Command-line front end: ``nanobound <subcommand> ...``.

Every run writes CSV files with ``#`` metadata headers and a
``manifest.json`` into ``--out``.  Exit codes: 2 configuration or usage
error, 3 numerical non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import scenarios as S
from .config import TWO_PI, ConfigError, Params, load_config, sound_speed
from .eigensolver import MeshPolicy, NonConvergenceError, build_mesh, solve_bound_states
from .linewidths import (dephasing_broadening, dephasing_closed, depopulation_nearest_neighbor,
                         depopulation_small_cavity_closed, total_linewidth)
from .phonon import cavity_catalog, thermal_population
from .photon import NoGuidedModeError, mode_field, solve_wavelength
from .potentials import NoTrapError, find_trap
from .spectroscopy import assemble_spectrum, default_grid

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4

FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "figS1", "figS2")
SCENARIOS = ("adsorbed", "adsorbed-exp", "hybrid", "trap")
STAR_PAIR = (261, 262)
SCAN_LENGTHS_UM = tuple(sorted(set(float(x) for x in np.round(np.geomspace(1.0, 50.0, 41), 4)) | {5.0}))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        # lets "--window-mhz -8,-0.02" parse as a value rather than a flag
        self._negative_number_matcher = re.compile(r"^-\d*\.?\d+([eE][-+]?\d+)?(,-?\d*\.?\d+([eE][-+]?\d+)?)*$")

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- output plumbing ----------------------------------------------------------

class Run:
    """Collects the artifacts of one invocation and writes the manifest."""

    def __init__(self, params: Params, argv, out: Path, as_json: bool):
        self.params = params
        self.out = out
        self.as_json = as_json
        self.command = list(argv)
        inputs = {"command": self.command, "config": params.snapshot(), "version": __version__}
        blob = json.dumps(inputs, sort_keys=True, separators=(",", ":")).encode()
        self.hash = hashlib.sha256(blob).hexdigest()
        self.outputs: list[str] = []
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    def write_table(self, name: str, columns, rows, meta=None):
        """Write ``name``.csv (and ``name``.json with ``--json``)."""
        self.out.mkdir(parents=True, exist_ok=True)
        lines = [f"# nanobound {__version__}", f"# manifest_sha256 = {self.hash}"]
        for k, v in (meta or {}).items():
            lines.append(f"# {k} = {v}")
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        path = self.out / f"{name}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.outputs.append(path.name)
        if self.as_json:
            doc = {"manifest_sha256": self.hash, "meta": meta or {}, "columns": list(columns),
                   "rows": [[_json_value(x) for x in row] for row in rows]}
            jpath = self.out / f"{name}.json"
            jpath.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
            self.outputs.append(jpath.name)
        return path

    def finish(self):
        manifest = {
            "manifest_sha256": self.hash,
            "command": self.command,
            "config": self.params.snapshot(),
            "version": __version__,
            "started": self.started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "outputs": self.outputs,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                                encoding="utf-8")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _pair(text: str, name: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{name} expects 'lo,hi'") from None
    if not lo < hi:
        raise UsageError(f"{name}: lo must be below hi")
    return lo, hi


def _floats(text: str, name: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name} expects a comma-separated list of numbers") from None
    if not vals or any(v <= 0 for v in vals):
        raise UsageError(f"{name} values must be positive")
    return vals


def _pmap(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _hz(w):
    return w / TWO_PI


# --- subcommands ------------------------------------------------------------------

def cmd_modes(args, run: Run):
    p = run.params
    if args.kind == "photon":
        mode = solve_wavelength(args.wavelength_nm * 1e-9, p.geometry.radius, p.material.permittivity)
        r = np.linspace(0.0, args.rmax_nm * 1e-9, args.points)
        e = mode_field(mode, r)
        rows = [(r[i] * 1e9, *(v for c in e[:, i] for v in (c.real, c.imag))) for i in range(len(r))]
        cols = ["r_nm", "Er_re", "Er_im", "Ephi_re", "Ephi_im", "Ez_re", "Ez_im"]
        meta = {"wavelength_nm": args.wavelength_nm, "k_per_m": f"{mode.k:.10g}",
                "a_per_m": f"{mode.a:.10g}", "b_per_m": f"{mode.b:.10g}",
                "effective_index": f"{mode.effective_index:.8f}"}
        run.write_table("photon_mode", cols, rows, meta)
    else:
        g = p.geometry
        rows = []
        for mode in cavity_catalog(args.max_m, g, p.material):
            if mode.j != 1:
                continue
            rows.append((mode.m, _hz(mode.frequency), _hz(mode.decay_rate),
                         thermal_population(mode.frequency, 300.0), thermal_population(mode.frequency, 420.0)))
        meta = {"length_um": g.length * 1e6, "quality_factor": g.quality_factor,
                "sound_speed_m_s": f"{sound_speed(p.material):.6g}"}
        run.write_table("phonon_modes", ["m", "omega_over_2pi_Hz", "kappa_over_2pi_Hz", "nbar_300K",
                                         "nbar_420K"], rows, meta)


def cmd_potential(args, run: Run):
    p = S.scenario_params(args.kind, run.params)
    pot = S.scenario_potential(args.kind, p)
    radius = p.geometry.radius
    x = np.linspace(args.rmin_nm, args.rmax_nm, args.points) * 1e-9
    v, vp, vpp = pot.derivatives(radius + x)
    rows = zip(radius * 1e9 + x * 1e9, _hz(v) / 1e12, _hz(vp) / 1e12 * 1e-9, _hz(vpp) / 1e12 * 1e-18)
    meta = {"kind": args.kind, "radius_nm": radius * 1e9,
            "units": "V/h in THz; Vp in THz/nm; Vpp in THz/nm^2"}
    if args.kind == "trap":
        fit = find_trap(pot, radius, p.atom.mass)
        meta.update({"trap_r0_nm": f"{fit.r0 * 1e9:.6g}", "omega_r_over_2pi_kHz": f"{_hz(fit.omega_r) / 1e3:.6g}",
                     "depth_MHz": f"{_hz(fit.depth) / 1e6:.6g}",
                     "barrier_MHz": f"{_hz(fit.barrier_height) / 1e6:.6g}"})
    run.write_table("potential", ["r_nm", "V_over_h_THz", "Vp", "Vpp"], rows, meta)


def _states_for(kind, params, window):
    if kind == "trap":
        sc = S.solve_scenario("trap", params, window=window)
        return sc.states, sc
    p = S.scenario_params(kind, params)
    pot = S.scenario_potential(kind, p)
    mesh = build_mesh(pot, window, p.atom.mass, MeshPolicy())
    return solve_bound_states(pot, mesh, window, p.atom.mass), None


def _write_states(run: Run, states, meta, name="states", wavefunctions=False, examples=None):
    mean_r = states.psi**2 @ (states.mesh.weights * states.mesh.interior)
    rows = [(int(n), _hz(w), _hz(e), r * 1e9) for n, w, e, r in
            zip(states.nu, states.omega, states.error, mean_r)]
    run.write_table(name, ["nu", "omega_over_2pi_Hz", "error_Hz", "mean_r_nm"], rows, meta)
    picks = list(states.nu) if wavefunctions else (examples or [])
    if picks:
        idx = [states.index_of(int(n)) for n in picks]
        r = states.mesh.interior
        stride = max(1, len(r) // 4000) if not wavefunctions else 1
        rows = [(r[k] * 1e9, *(states.psi[i, k] / np.sqrt(1e9) for i in idx)) for k in range(0, len(r), stride)]
        cols = ["r_nm"] + [f"psi_{int(n)}" for n in picks]
        run.write_table(f"{name}_wavefunctions", cols, rows, {**meta, "psi_units": "nm^-1/2"})


def cmd_states(args, run: Run):
    lo, hi = _pair(args.window_mhz, "--window-mhz")
    window = (lo * S.MHZ, hi * S.MHZ)
    states, _ = _states_for(args.potential, run.params, window)
    meta = {"potential": args.potential, "window_MHz": f"{lo},{hi}", "count": len(states)}
    _write_states(run, states, meta, wavefunctions=args.wavefunctions)


def _linewidth_rows(sc, pairs, threads):
    def one(pair):
        nu, nu_p = pair
        rec = total_linewidth(nu, nu_p, sc.t1, sc.t2, sc.geometry, sc.material)
        return (nu, nu_p, _hz(rec.omega) / 1e3, _hz(rec.gamma1), _hz(rec.gamma2), _hz(rec.gamma),
                rec.converged)
    return _pmap(one, pairs, threads)


def cmd_linewidths(args, run: Run):
    lo, hi = _pair(args.window_mhz, "--window-mhz")
    if args.scenario == "trap":
        raise UsageError("linewidths: use 'states --potential trap' and 'reproduce figS2' for the trap")
    sc = S.solve_scenario(args.scenario, run.params, window=(lo * S.MHZ, hi * S.MHZ))
    nus = [int(n) for n in sc.states.nu]
    pairs = [(a, b) for a in nus for b in nus if 0 < b - a <= args.max_dnu]
    rows = _linewidth_rows(sc, pairs, args.threads)
    meta = {"scenario": args.scenario, "window_MHz": f"{lo},{hi}", "temperature_K": sc.geometry.temperature,
            "length_um": sc.geometry.length * 1e6, "quality_factor": sc.geometry.quality_factor,
            "rates": "gamma/2pi"}
    run.write_table("linewidths", ["nu", "nu_prime", "omega_kHz", "gamma1_Hz", "gamma2_Hz", "gamma_Hz",
                                   "converged"], rows, meta)


def scan_cavity_rows(params: Params, lengths_um, temperatures, pair=STAR_PAIR, threads=1):
    sc = S.solve_scenario("hybrid", params)
    nu, nu_p = pair
    w = dict(zip(sc.states.nu.tolist(), sc.states.omega.tolist()))
    sep = abs((w[nu_p + 1] - w[nu_p]) - (w[nu_p] - w[nu])) if nu_p + 1 in w else float("nan")
    a1 = sc.t1[nu_p, nu]
    da2 = sc.t2[nu_p, nu_p] - sc.t2[nu, nu]
    jobs = [(t, L) for t in temperatures for L in lengths_um]

    def one(job):
        t, L = job
        g = sc.geometry.__class__(sc.geometry.radius, L * 1e-6, sc.geometry.quality_factor, t)
        g1 = depopulation_nearest_neighbor(nu, nu_p, sc.t1, g, sc.material)
        g1c = depopulation_small_cavity_closed(a1, g, sc.material)
        g2, _ = dephasing_broadening(nu, nu_p, sc.t2, g, sc.material)
        g2c = dephasing_closed(da2, g, sc.material)
        return (t, L, _hz(g1), _hz(g1c), _hz(g2), _hz(g2c), _hz(g1 + g2), (g1 + g2) / sep)

    meta = {"nu": nu, "nu_prime": nu_p, "omega_kHz": f"{_hz(w[nu_p] - w[nu]) / 1e3:.6g}",
            "separation_kHz": f"{_hz(sep) / 1e3:.6g}", "quality_factor": sc.geometry.quality_factor}
    return meta, _pmap(one, jobs, threads)


SCAN_COLUMNS = ["temperature_K", "length_um", "gamma1_Hz", "gamma1_small_cavity_Hz", "gamma2_Hz",
                "gamma2_closed_Hz", "gamma_Hz", "gamma_over_separation"]


def cmd_scan_cavity(args, run: Run):
    lengths = _floats(args.lengths_um, "--lengths-um")
    temps = _floats(args.temperatures_k, "--temperatures-k")
    meta, rows = scan_cavity_rows(run.params, lengths, temps, threads=args.threads)
    run.write_table("scan_cavity", SCAN_COLUMNS, rows, meta)


def spectrum_tables(params: Params, scenario: str, band, window=None, samples=2048):
    ref = S.reference_line(params)
    if scenario == "trap":
        sc = S.solve_scenario("trap", params)
    else:
        sc = S.solve_scenario(scenario, params, window=window)
    lines = S.spectrum_lines(sc, ref, band)
    grid = default_grid(band[0], band[1], lines, samples=samples)
    spec = assemble_spectrum(lines, ref, grid)
    line_rows = [(ln.nu, ln.nu_prime, _hz(ln.center) / 1e3, _hz(ln.width), ln.weight_rel, ln.peak_rel)
                 for ln in sorted(lines, key=lambda ln: (ln.center, ln.nu))]
    grid_rows = list(zip(_hz(spec.omega) / 1e3, spec.p_over_p0))
    meta = {"scenario": scenario, "temperature_K": sc.geometry.temperature,
            "omega_kHz": f"{_hz(band[0]) / 1e3:g},{_hz(band[1]) / 1e3:g}",
            "reference": "trap 1->0 anti-Stokes peak", "reference_fwhm_Hz": f"{_hz(ref.width):.6g}",
            "occupation": "equal"}
    return meta, line_rows, grid_rows


LINE_COLUMNS = ["nu", "nu_prime", "center_kHz", "fwhm_Hz", "weight_rel", "peak_rel"]


def cmd_spectrum(args, run: Run):
    lo, hi = _pair(args.omega_khz, "--omega-khz")
    window = None
    if args.window_mhz:
        a, b = _pair(args.window_mhz, "--window-mhz")
        window = (a * S.MHZ, b * S.MHZ)
    meta, lines, grid = spectrum_tables(run.params, args.scenario, (lo * S.KHZ, hi * S.KHZ), window,
                                        args.samples)
    run.write_table("lines", LINE_COLUMNS, lines, meta)
    run.write_table("grid", ["omega_kHz", "P_over_P0"], grid, meta)


def _potential_rows(pot, radius, x_nm):
    v = pot(radius + x_nm * 1e-9)
    return list(zip(radius * 1e9 + x_nm, _hz(v) / 1e6))


def cmd_reproduce(args, run: Run):
    p = run.params
    fig = args.figure
    if fig in ("fig2a", "fig2b"):
        kind = "adsorbed" if fig == "fig2a" else "hybrid"
        sc = S.solve_scenario(kind, p)
        pot_hyb = S.scenario_potential("hybrid", S.scenario_params("hybrid", p))
        pot_ad = S.scenario_potential("adsorbed", S.scenario_params("adsorbed", p))
        x = np.linspace(5.0, 1500.0, 2986)
        radius = p.geometry.radius
        rows = [(r, va, vh) for (r, va), (_, vh) in zip(_potential_rows(pot_ad, radius, x),
                                                        _potential_rows(pot_hyb, radius, x))]
        run.write_table(f"{fig}_potential", ["r_nm", "V_adsorbed_over_h_MHz", "V_hybrid_over_h_MHz"], rows,
                        {"figure": fig})
        examples = [n for n in (STAR_PAIR if kind == "hybrid" else ()) if n in sc.states.nu] or \
            [int(sc.states.nu[-4]), int(sc.states.nu[-3])]
        _write_states(run, sc.states, {"figure": fig, "scenario": kind,
                                       "window_MHz": "-8,-0.02"}, name=f"{fig}_states", examples=examples)
    elif fig in ("fig3a", "fig3b"):
        kind = "adsorbed" if fig == "fig3a" else "hybrid"
        meta, lines, grid = spectrum_tables(p, kind, S.SPECTRUM_BAND)
        meta["figure"] = fig
        run.write_table(f"{fig}_lines", LINE_COLUMNS, lines, meta)
        run.write_table(f"{fig}_grid", ["omega_kHz", "P_over_P0"], grid, meta)
    elif fig == "figS1":
        meta, rows = scan_cavity_rows(p, SCAN_LENGTHS_UM, (300.0, 420.0), threads=args.threads)
        meta["figure"] = fig
        run.write_table("figS1", SCAN_COLUMNS, rows, meta)
    elif fig == "figS2":
        trap = S.solve_scenario("trap", p)
        harm = S.harmonic_trap_rates(trap)
        rows = [(int(n), _hz(w), _hz(w - trap.trap.depth) / 1e3, trap.depopulation(int(n)), hr)
                for n, w, hr in zip(trap.states.nu, trap.states.omega, harm)]
        fit = trap.trap
        meta = {"figure": fig, "temperature_K": trap.geometry.temperature,
                "trap_r0_nm": f"{fit.r0 * 1e9:.6g}", "omega_r_over_2pi_kHz": f"{_hz(fit.omega_r) / 1e3:.6g}",
                "depth_MHz": f"{_hz(fit.depth) / 1e6:.6g}", "barrier_MHz": f"{_hz(fit.barrier_height) / 1e6:.6g}",
                "rates": "1/s"}
        run.write_table("figS2_trap_states", ["nu", "omega_over_2pi_Hz", "above_minimum_kHz",
                                              "depopulation_numeric_per_s", "depopulation_harmonic_per_s"],
                        rows, meta)
        _write_states(run, trap.states, {"figure": fig, "scenario": "trap"}, name="figS2_trap_levels",
                      examples=[0, 1])
        meta, lines, grid = spectrum_tables(p, "trap", S.TRAP_SPECTRUM_BAND)
        run.write_table("figS2_trap_lines", LINE_COLUMNS, lines, meta)
        run.write_table("figS2_trap_grid", ["omega_kHz", "P_over_P0"], grid, meta)
        meta, lines, grid = spectrum_tables(p, "adsorbed", S.DEEP_SPECTRUM_BAND, S.DEEP_WINDOW)
        run.write_table("figS2_adsorbed_lines", LINE_COLUMNS, lines, meta)
        run.write_table("figS2_adsorbed_grid", ["omega_kHz", "P_over_P0"], grid, meta)
        deep = S.solve_scenario("adsorbed", p, window=S.DEEP_WINDOW)
        _write_states(run, deep.states, {"figure": fig, "scenario": "adsorbed", "window_MHz": "-25,-0.02"},
                      name="figS2_adsorbed_states")


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file (default: $NANOBOUND_CONFIG)")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--json", action="store_true", help="also write a JSON mirror of each table")

    parser = _Parser(prog="nanobound", description="Bound motional states of atoms near a nanofiber.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    m = sub.add_parser("modes", parents=[common], help="photonic or phononic fiber modes")
    msub = m.add_subparsers(dest="kind", parser_class=_Parser, required=True)
    ph = msub.add_parser("photon", parents=[common])
    ph.add_argument("--wavelength-nm", type=float, required=True)
    ph.add_argument("--rmax-nm", type=float, default=1500.0)
    ph.add_argument("--points", type=int, default=1501)
    pn = msub.add_parser("phonon", parents=[common])
    pn.add_argument("--max-m", type=int, default=20)

    pt = sub.add_parser("potential", parents=[common], help="tabulate a potential outside the fiber")
    pt.add_argument("--kind", choices=SCENARIOS, default="hybrid")
    pt.add_argument("--rmin-nm", type=float, default=0.2, help="distance from the surface")
    pt.add_argument("--rmax-nm", type=float, default=1000.0, help="distance from the surface")
    pt.add_argument("--points", type=int, default=2000)

    st = sub.add_parser("states", parents=[common], help="bound states in an energy window")
    st.add_argument("--potential", choices=SCENARIOS, default="hybrid")
    st.add_argument("--window-mhz", default="-8,-0.02")
    st.add_argument("--wavefunctions", action="store_true")

    lw = sub.add_parser("linewidths", parents=[common], help="transition linewidths in a window")
    lw.add_argument("--scenario", choices=("adsorbed", "hybrid"), default="hybrid")
    lw.add_argument("--window-mhz", default="-8,-0.02")
    lw.add_argument("--max-dnu", type=int, default=1)

    sc = sub.add_parser("scan-cavity", parents=[common], help="linewidth vs cavity length")
    sc.add_argument("--lengths-um", default=",".join(f"{x:g}" for x in SCAN_LENGTHS_UM))
    sc.add_argument("--temperatures-k", default="300,420")

    sp = sub.add_parser("spectrum", parents=[common], help="heterodyne sideband spectrum")
    sp.add_argument("--scenario", choices=("adsorbed", "hybrid", "trap"), default="hybrid")
    sp.add_argument("--omega-khz", default="100,1000")
    sp.add_argument("--window-mhz", default=None, help="bound-state window (default -8,-0.02)")
    sp.add_argument("--samples", type=int, default=2048)

    rp = sub.add_parser("reproduce", parents=[common], help="regenerate figure data")
    rp.add_argument("figure", choices=FIGURES)
    return parser


HANDLERS = {"modes": cmd_modes, "potential": cmd_potential, "states": cmd_states,
            "linewidths": cmd_linewidths, "scan-cavity": cmd_scan_cavity, "spectrum": cmd_spectrum,
            "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        params = load_config(args.config)
        run = Run(params, argv_for_hash(argv), Path(args.out), args.json)
        HANDLERS[args.command](args, run)
        run.finish()
    except (UsageError, ConfigError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, NoGuidedModeError, NoTrapError) as exc:
        print(f"nanobound: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"nanobound: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def argv_for_hash(argv):
    """Command line without flags that do not change results."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in ("--out", "--threads", "--config"):
            skip = True
            continue
        if tok.startswith(("--out=", "--threads=", "--config=")) or tok == "--json":
            continue
        out.append(tok)
    return out


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
