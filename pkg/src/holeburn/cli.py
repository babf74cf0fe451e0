"""
Command-line front end.

    holeburn levels         --config nd145.json --out out/
    holeburn simulate-decay --config decay_900mT.json --out out/
    holeburn field-scan     --config field_scan.json --out out/
    holeburn afc {report,curve,max,comb} --config afc.json --out out/
    holeburn fit {biexp,powerlaw} FILE... --out out/
    holeburn spectrum       --config spectrum.json --out out/

Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import NumericalError, __version__
from . import afc, fitkit, pumpdyn, relaxation, spectra
from .config import ConfigError, Scenario, load_scenario
from .io import (IngestionError, decay_curves_to_rows, read_decay_curves, read_points,
                 read_spectrum, to_json, write_spectrum, write_table)
from .levels import FieldPoint, enumerate_levels, level_index, spin_system_from_config, zeeman_splitting

log = logging.getLogger("holeburn")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


# ---------------------------------------------------------------- builders

def _build(scn: Scenario, section: str, fn):
    """Run a constructor; domain ValueErrors become located config errors."""
    try:
        return fn()
    except (ValueError, KeyError, TypeError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{section}: {e}", scn.line(section), scn.path) from None


def build_material(scn):
    scn.require("material")
    return _build(scn, "material", lambda: spin_system_from_config(scn.section("material")))


def build_field(scn):
    scn.require("field")
    f = scn.section("field")
    return _build(scn, "field", lambda: FieldPoint(float(f["B_tesla"]), float(f["T_kelvin"])))


def _delays(scn, spec):
    """A list of numbers, one {start, stop, n} segment, or a list of segments."""
    def segment(d):
        if not isinstance(d, dict) or set(d) != {"start", "stop", "n"}:
            raise ConfigError("pump.delays_s segments need exactly start, stop, n",
                              scn.line("delays_s"), scn.path)
        return np.linspace(float(d["start"]), float(d["stop"]), int(d["n"]))

    if isinstance(spec, dict):
        return tuple(segment(spec).tolist())
    if isinstance(spec, list) and spec and all(isinstance(v, dict) for v in spec):
        grid = np.unique(np.concatenate([segment(d) for d in spec]))
        return tuple(grid.tolist())
    if isinstance(spec, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                      for v in spec):
        return tuple(float(v) for v in spec)
    raise ConfigError("pump.delays_s must be a list of numbers or {start, stop, n} segments",
                      scn.line("delays_s"), scn.path)


def _pumped_sets(scn, sysm, levels, p):
    pairs = p["pumped"]
    ok = isinstance(pairs, list) and pairs and all(
        isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x)
        for x in pairs)
    if not ok:
        raise ConfigError("pump.pumped must be a non-empty list of [m_S, m_I] pairs",
                          scn.line("pumped"), scn.path)
    base = [(float(a), float(b)) for a, b in pairs]
    idx = lambda pr: level_index(levels, *pr)
    first = _build(scn, "pump", lambda: tuple(idx(pr) for pr in base))
    if not p["average_over_m_I"]:
        return first, None
    m_vals = sysm.m_I_values()
    classes = []
    for shift in [m - base[0][1] for m in m_vals]:
        try:
            classes.append(tuple(idx((a, b + shift)) for a, b in base))
        except KeyError:
            continue
    return first, classes


def build_pump(scn, sysm, levels):
    scn.require("pump")
    p = scn.section("pump")
    eps = p["epsilon"]
    tune = eps == "tune"
    if not tune and (isinstance(eps, bool) or not isinstance(eps, (int, float))):
        raise ConfigError('pump.epsilon must be a number or "tune"', scn.line("epsilon"), scn.path)
    if tune and (scn.section("calibration") or {}).get("target_crossing_s") is None:
        raise ConfigError('pump.epsilon "tune" needs calibration.target_crossing_s',
                          scn.line("epsilon"), scn.path)
    pumped, classes = _pumped_sets(scn, sysm, levels, p)
    delays = _delays(scn, p["delays_s"])
    burns = [float(b) for b in p["burn_durations_s"]]
    if len(burns) < 2 or any(b <= 0 for b in burns) or sorted(burns) != burns:
        raise ConfigError("pump.burn_durations_s needs >= 2 positive ascending values",
                          scn.line("burn_durations_s"), scn.path)
    lower = p["mS_split_lower"]

    def make():
        br = pumpdyn.BranchingTable.symmetric(0.25 if tune else float(eps),
                                              {-0.5: lower, 0.5: 1.0 - lower})
        return pumpdyn.PumpSchedule(burn_duration=burns[0], W=float(p["W_per_s"]),
                                    pumped_levels=pumped, delay_grid=delays, branching=br,
                                    probe_observable=p["observable"])
    return _build(scn, "pump", make), burns, classes, tune


def build_rates(scn):
    r, c = scn.section("rates"), scn.section("calibration")
    if (r is None) == (c is None):
        raise ConfigError("give exactly one of 'rates' or 'calibration'", None, scn.path)
    if r is not None:
        vals = {"R0": r["R0_per_s"], "R_plus": r["R_plus_per_s"], "R_minus": r["R_minus_per_s"]}
        if any(v < 0 for v in vals.values()):
            raise ConfigError("rates must be >= 0", scn.line("rates"), scn.path)
        return vals, None
    if c["T_fast_s"] <= 0 or c["T_slow_s"] <= c["T_fast_s"]:
        raise ConfigError("calibration needs 0 < T_fast_s < T_slow_s", scn.line("calibration"), scn.path)
    return None, c


def build_field_scan_model(scn, sysm):
    scn.require("relaxation")
    rc = scn.section("relaxation")
    s, f = rc["slr"], rc["flipflop"]

    def make():
        slr = relaxation.SLRParams(alpha_direct=s["alpha_direct"], alpha_raman=s["alpha_raman"],
                                   alpha_orbach=s["alpha_orbach"], orbach_gap=s["orbach_gap_K"],
                                   include_coth=s["include_coth"])
        kw = dict(base_rate=f["base_rate_per_s"], concentration=f["concentration_ppm"],
                  reference_concentration=f["reference_concentration_ppm"], profile=f["profile"],
                  reference_field=f["reference_field_tesla"], exponent=f["exponent"],
                  table_B=tuple(f["table_B_tesla"]), table_rate=tuple(f["table_rate"]),
                  valid_B_max=f["valid_B_max_tesla"])
        if f["nuclear_dilution"] is not None:
            kw["nuclear_dilution"] = f["nuclear_dilution"]
        ff = relaxation.FlipFlopParams.for_system(sysm, **kw)
        return relaxation.FieldScanModel(slr=slr, ff=ff, sys=sysm)
    return _build(scn, "relaxation", make)


def build_comb(scn, d=None, d0_ratio=None):
    scn.require("afc")
    a = scn.section("afc")
    d = a["d"] if d is None else d
    r = a["d0_ratio"] if d0_ratio is None else d0_ratio
    Fv = a["finesse"]
    if Fv != "optimal" and (isinstance(Fv, bool) or not isinstance(Fv, (int, float))):
        raise ConfigError('afc.finesse must be a number or "optimal"', scn.line("finesse"), scn.path)

    def make():
        F = afc.optimal_finesse(d) if Fv == "optimal" else float(Fv)
        return afc.CombSpec(d=d, d0=r * d, F=F, delta=a["delta_Hz"], bandwidth=a["bandwidth_Hz"])
    return _build(scn, "afc", make)


# ---------------------------------------------------------------- helpers

class Outputs:
    """Collects written files and writes the manifest last."""

    def __init__(self, out: Path, command: str, scn: Scenario | None, fmt: str, extra=None):
        self.out, self.command, self.scn, self.fmt = out, command, scn, fmt
        self.files = []
        self.extra = extra or {}
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IngestionError(f"cannot create output directory {out}: {e.strerror or e}") from e

    def table(self, name, rows, columns=None, header=None):
        p = write_table(self.out / f"{name}.csv", rows, self.fmt, columns, header)
        self.files.append(p.name)
        return p

    def json(self, name, obj):
        p = self.out / f"{name}.json"
        p.write_text(to_json(obj))
        self.files.append(p.name)
        return p

    def spectrum(self, name, spec):
        p = write_spectrum(self.out / f"{name}.csv", spec, self.fmt)
        self.files.append(p.name)
        return p

    def manifest(self):
        m = {"command": self.command, "toolkit_version": __version__, "outputs": self.files,
             "format": self.fmt, **self.extra}
        if self.scn is not None:
            m.update(config_sha256=self.scn.sha256, config_path=self.scn.path, seed=self.scn.seed)
        (self.out / "manifest.json").write_text(to_json(m))


def _outputs(args, scn, extra=None):
    return Outputs(Path(args.out), args.command_name, scn, args.format, extra)


def _scenario(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    scn = load_scenario(args.config)
    if args.seed is not None:
        scn.data["seed"] = args.seed
    return scn


# ---------------------------------------------------------------- commands

def cmd_levels(args):
    scn = _scenario(args)
    sysm, fp = build_material(scn), build_field(scn)
    rows = [{"index": i, "m_S": lv.m_S, "m_I": lv.m_I, "energy_GHz": lv.energy}
            for i, lv in enumerate(enumerate_levels(sysm, fp))]
    out = _outputs(args, scn)
    out.table("levels", rows, header={"B_tesla": fp.B, "T_kelvin": fp.T})
    out.manifest()
    print(f"{len(rows)} levels written to {out.out}")


def _inject_noise(curves, rel, seed):
    rng = np.random.default_rng(seed)
    noisy = []
    for c in curves:
        y = c.amplitude * (1 + rel * rng.standard_normal(c.amplitude.shape))
        noisy.append(fitkit.DecayCurve(c.t, y, None, dict(c.metadata)))
    return noisy


def cmd_simulate_decay(args):
    scn = _scenario(args)
    sysm, fp = build_material(scn), build_field(scn)
    levels = enumerate_levels(sysm, fp)
    sched, burns, classes, tune = build_pump(scn, sysm, levels)
    rates, calib = build_rates(scn)
    noise = scn.section("noise")
    if noise is not None and noise["relative_sigma"] < 0:
        raise ConfigError("noise.relative_sigma must be >= 0", scn.line("relative_sigma"), scn.path)

    report = {"field": {"B_tesla": fp.B, "T_kelvin": fp.T}}
    if calib is not None:
        if tune:
            cal = pumpdyn.calibrate_crossing(levels, fp, sysm, sched, burns, calib["T_fast_s"],
                                             calib["T_slow_s"], calib["target_crossing_s"],
                                             classes=classes)
            rates, sched = cal["rates"], cal["schedule"]
            report["epsilon_tuned"] = cal["epsilon"]
        else:
            rates = pumpdyn.calibrate_rates(levels, fp, sysm, sched, burns, calib["T_fast_s"],
                                            calib["T_slow_s"], classes=classes)
        report["calibration"] = rates
    gen = pumpdyn.build_generator(levels, rates, fp)
    scan = pumpdyn.amplitude_scan(gen, sysm, sched, burns, classes=classes)
    curves, fit = scan.curves, scan.fit
    if noise is not None and noise["relative_sigma"] > 0:
        curves = _inject_noise(curves, noise["relative_sigma"], scn.seed)
        fit = fitkit.fit_biexp_global(curves)
        scan = pumpdyn.AmplitudeScan(scan.burn_durations, curves, fit)
    report["rates"] = {k: rates[k] for k in ("R0", "R_plus", "R_minus")}
    report["epsilon"] = sched.branching.p_dmI[1]
    report["W_per_s"] = sched.W
    report["fit"] = fit.to_dict()
    report["crossing_burn_s"] = scan.crossing()
    if calib is not None:
        tol = calib["tolerance"]
        ok = (abs(fit.T_f / calib["T_fast_s"] - 1) <= tol
              and abs(fit.T_s / calib["T_slow_s"] - 1) <= tol)
        report["within_tolerance"] = ok
        if not ok:
            raise NumericalError(f"fitted T_f={fit.T_f:.4g} s, T_s={fit.T_s:.4g} s outside "
                                 f"tolerance {tol} of the calibration targets")

    out = _outputs(args, scn)
    header = {"B_tesla": fp.B, "T_kelvin": fp.T}
    out.table("decay_curves", decay_curves_to_rows(curves),
              ["t_d_s", "amplitude", "burn_duration_s"], header)
    out.table("amplitudes", scan.rows())
    out.json("fit_report", report)
    out.manifest()
    print(f"T_f = {fit.T_f:.6g} s, T_s = {fit.T_s:.6g} s, crossing = {report['crossing_burn_s']}")


def cmd_field_scan(args):
    scn = _scenario(args)
    sysm = build_material(scn)
    model = build_field_scan_model(scn, sysm)
    scn.require("field_scan")
    fs = scn.section("field_scan")
    if not 0 < fs["B_min_tesla"] < fs["B_max_tesla"] or fs["n"] < 2 or fs["T_kelvin"] <= 0:
        raise ConfigError("field_scan needs 0 < B_min < B_max, n >= 2 and T > 0",
                          scn.line("field_scan"), scn.path)
    window = fs["fit_window_tesla"]
    if window is not None and (len(window) != 2 or not 0 < window[0] < window[1]):
        raise ConfigError("field_scan.fit_window_tesla must be [lo, hi]",
                          scn.line("fit_window_tesla"), scn.path)
    space = np.geomspace if fs["spacing"] == "log" else np.linspace
    B = space(fs["B_min_tesla"], fs["B_max_tesla"], fs["n"])
    rows = relaxation.field_scan(model, B, fs["T_kelvin"])
    out = _outputs(args, scn)
    out.table("lifetimes", rows)
    Tf = np.array([r["T_fast_s"] for r in rows])
    Ts = np.array([r["T_slow_s"] for r in rows])
    summary = {"B_at_max_T_fast": float(B[np.argmax(Tf)]),
               "B_at_max_T_slow": float(B[np.argmax(Ts)]),
               "max_T_fast_s": float(Tf.max()), "max_T_slow_s": float(Ts.max())}
    if window is not None:
        sel = (B >= window[0]) & (B <= window[1])
        summary["fit_window_tesla"] = window
        summary["T_fast_powerlaw"] = fitkit.fit_power_law(np.column_stack([B[sel], Tf[sel]])).to_dict()
        summary["T_slow_powerlaw"] = fitkit.fit_power_law(np.column_stack([B[sel], Ts[sel]])).to_dict()
    out.json("field_scan_report", summary)
    out.manifest()
    print(f"T_fast maximal at B = {summary['B_at_max_T_fast']:.3g} T")


def _curve_label(r):
    return "perfect memory" if r == 0 else f"d0/d={r:g}"


def cmd_afc(args):
    scn = _scenario(args)
    scn.require("afc")
    a = scn.section("afc")
    comb = build_comb(scn)
    action = args.action
    if action == "curve":
        lo, hi, n = a["d_grid"] if len(a["d_grid"]) == 3 else (None, None, None)
        if lo is None or not 0 < lo < hi or int(n) < 2:
            raise ConfigError("afc.d_grid must be [min, max, n] with 0 < min < max",
                              scn.line("d_grid"), scn.path)
        grid = np.linspace(lo, hi, int(n))
    if action == "max":
        lo_hi = a["d_range"]
        if len(lo_hi) != 2 or not 0 < lo_hi[0] < lo_hi[1]:
            raise ConfigError("afc.d_range must be [min, max]", scn.line("d_range"), scn.path)
    out = _outputs(args, scn)
    if action == "report":
        rep = afc.afc_efficiency(comb)
        out.json("efficiency_report", {"d": comb.d, "d0": comb.d0, "d0_ratio": a["d0_ratio"],
                                       **rep.to_dict()})
        print(f"eta = {rep.eta:.4f}")
    elif action == "curve":
        ratios = [0.0] + list(a["band_ratios"]) + list(a["reference_ratios"])
        rows = []
        for r in ratios:
            for row in afc.efficiency_curve(r, grid):
                rows.append({"label": _curve_label(r), **row})
        out.table("efficiency_curve", rows, ["label", "d0_ratio", "d", "F_opt", "eta",
                                             "absorption", "dephasing", "background"])
    elif action == "max":
        res = []
        for r in [a["d0_ratio"]] + list(a["reference_ratios"]):
            d_star, F_star, eta_star = afc.max_efficiency(r, tuple(a["d_range"]))
            res.append({"d0_ratio": r, "d_star": d_star, "F_star": F_star, "eta_star": eta_star})
        out.json("max_efficiency", res)
        for x in res:
            print(f"d0/d={x['d0_ratio']:g}: eta* = {x['eta_star']:.4f} at d = {x['d_star']:.3f}")
    elif action == "comb":
        n = a["comb_points_per_period"]
        periods = max(int(round(comb.bandwidth / comb.delta)), 1)
        h = comb.delta / n
        f = (np.arange(periods * n) - periods * n // 2) * h
        od = _build(scn, "afc", lambda: afc.comb_profile(comb, f))
        out.spectrum("comb_profile", spectra.Spectrum(f, od))
        out.json("comb_report", {"mean_depth": float(od.mean()), "d0_plus_d_over_F": comb.d0 + comb.d / comb.F,
                                  "echo_delay_s": comb.echo_delay, "F": comb.F})
    out.manifest()


def cmd_spectrum(args):
    scn = _scenario(args)
    scn.require("spectrum")
    s = scn.section("spectrum")
    if s["fwhm_GHz"] <= 0 or s["span_GHz"] <= 0 or s["n_points"] < 3:
        raise ConfigError("spectrum needs fwhm_GHz > 0, span_GHz > 0, n_points >= 3",
                          scn.line("spectrum"), scn.path)
    split = 0.0
    if s["split"]:
        sysm, fp = build_material(scn), build_field(scn)
        split = zeeman_splitting(sysm.g_factor, fp.B) * 1e9
    hole = s["hole"]
    if hole is not None:
        keys = {"center_MHz", "depth", "width_MHz", "shape"}
        if not isinstance(hole, dict) or set(hole) - keys or not {"center_MHz", "depth", "width_MHz"} <= set(hole):
            raise ConfigError("spectrum.hole needs center_MHz, depth, width_MHz[, shape]",
                              scn.line("hole"), scn.path)
    side = s["side_holes"]
    if not isinstance(side, list) or any(not isinstance(x, dict) or set(x) - {"offset_MHz", "depth", "width_MHz"}
                                         or not {"offset_MHz", "depth"} <= set(x) for x in side):
        raise ConfigError("spectrum.side_holes must be a list of {offset_MHz, depth[, width_MHz]}",
                          scn.line("side_holes"), scn.path)
    overlay = None
    if args.overlay:
        overlay = read_spectrum(args.overlay)

    half = s["span_GHz"] * 1e9 / 2
    grid = np.linspace(-half, half, s["n_points"])
    prof = spectra.inhomogeneous_profile(s["peak_od"], s["fwhm_GHz"] * 1e9, grid,
                                         length_cm=s["length_cm"])
    prof = spectra.split_profile(prof, split)
    if hole is not None:
        h = {"center": hole["center_MHz"] * 1e6, "depth": hole["depth"],
             "width": hole["width_MHz"] * 1e6, "shape": hole.get("shape", "lorentzian")}
        sh = [{"offset": x["offset_MHz"] * 1e6, "depth": x["depth"],
               **({"width": x["width_MHz"] * 1e6} if "width_MHz" in x else {})} for x in side]
        prof = _build(scn, "spectrum", lambda: spectra.hole_spectrum(prof, h, sh))
    out = _outputs(args, scn)
    out.spectrum("spectrum", prof)
    rep = {"peak_od": prof.peak, "zeeman_split_Hz": split}
    if s["length_cm"]:
        rep["alpha_peak_per_cm"] = prof.peak / s["length_cm"]
    if overlay is not None:
        model = np.interp(overlay.freq, prof.freq, prof.optical_depth)
        rows = [{"freq_Hz": float(f), "model": float(m), "measured": float(d), "residual": float(d - m)}
                for f, m, d in zip(overlay.freq, model, overlay.optical_depth)]
        out.table("overlay", rows)
        rep["overlay_rms_residual"] = float(np.sqrt(np.mean((overlay.optical_depth - model) ** 2)))
    out.json("spectrum_report", rep)
    out.manifest()


def cmd_fit(args):
    if not args.files:
        raise IngestionError("no input files given")
    if 0 < args.bootstrap < 100:
        raise ConfigError("--bootstrap needs at least 100 resamples")
    if args.kind == "biexp":
        curves = []
        for f in args.files:
            curves += read_decay_curves(f)
        fields = {(c.metadata.get("B"), c.metadata.get("T")) for c in curves}
        if len(fields) > 1 and not args.allow_mixed:
            raise IngestionError(f"input files mix field/temperature metadata {sorted(fields, key=str)}; "
                                 "pass --allow-mixed to fit them together")
        fit = fitkit.fit_biexp_global(curves)
        report = fit.to_dict()
        report["burn_durations_s"] = [c.metadata.get("burn_duration") for c in curves]
        report["sources"] = [c.metadata.get("source") for c in curves]
        if args.bootstrap:
            report["bootstrap_sigma"] = fitkit.bootstrap_uncertainty(
                curves, args.bootstrap, seed=args.seed or 0)
        print(f"T_f = {fit.T_f:.6g} s, T_s = {fit.T_s:.6g} s")
    else:
        pts = np.vstack([read_points(f, args.x_column, args.column) for f in args.files])
        if args.window:
            lo, hi = args.window
            pts = pts[(pts[:, 0] >= lo) & (pts[:, 0] <= hi)]
        fit = fitkit.fit_power_law(pts)
        report = fit.to_dict()
        report["n_points"] = int(len(pts))
        if args.bootstrap:
            report["bootstrap_sigma"] = fitkit.bootstrap_uncertainty(
                pts, args.bootstrap, seed=args.seed or 0, model="power_law")
        print(f"exponent a = {fit.exponent:.4f} +- {fit.exponent_sigma:.4f}")
    out = Outputs(Path(args.out), f"fit {args.kind}", None, args.format,
                  {"inputs": [str(f) for f in args.files]})
    out.json("fit_report", report)
    out.manifest()


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="format of tabular outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="holeburn", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("levels", parents=[common], help="hyperfine level table").set_defaults(func=cmd_levels)
    sub.add_parser("simulate-decay", parents=[common],
                   help="burn/probe simulation and global fit").set_defaults(func=cmd_simulate_decay)
    sub.add_parser("field-scan", parents=[common],
                   help="lifetimes versus magnetic field").set_defaults(func=cmd_field_scan)
    a = sub.add_parser("afc", parents=[common], help="AFC efficiency tools")
    a.add_argument("action", choices=("report", "curve", "max", "comb"))
    a.set_defaults(func=cmd_afc)
    s = sub.add_parser("spectrum", parents=[common], help="absorption / hole-burning spectrum")
    s.add_argument("--overlay", help="measured spectrum CSV (freq_Hz, optical_depth) to compare")
    s.set_defaults(func=cmd_spectrum)
    f = sub.add_parser("fit", parents=[common], help="fit measured data files")
    f.add_argument("kind", choices=("biexp", "powerlaw"))
    f.add_argument("files", nargs="*")
    f.add_argument("--allow-mixed", action="store_true",
                   help="fit curves recorded at different fields/temperatures together")
    f.add_argument("--bootstrap", type=int, default=0, metavar="N",
                   help="add residual-bootstrap sigmas from N resamples")
    f.add_argument("--column", default="T_s", help="lifetime column for powerlaw fits")
    f.add_argument("--x-column", default="B_tesla", help="field column for powerlaw fits")
    f.add_argument("--window", type=float, nargs=2, metavar=("B_LO", "B_HI"))
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_name = args.command + (f" {args.action}" if hasattr(args, "action") else "")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
