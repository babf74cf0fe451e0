import copy
import json
from pathlib import Path

import numpy as np
import pytest

from holeburn.cli import main
from holeburn.io import read_decay_curves, write_table

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load(name):
    return json.loads((CONFIGS / name).read_text())


def dump(tmp_path, data, name="scn.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=1))
    return str(p)


def run(*argv):
    return main([str(a) for a in argv])


def report(out, name):
    return json.loads((Path(out) / name).read_text())


def test_levels(tmp_path):
    assert run("levels", "--config", CONFIGS / "nd145_levels.json", "--out", tmp_path / "a") == 0
    lines = (tmp_path / "a" / "levels.csv").read_text().splitlines()
    assert sum(1 for ln in lines if ln and ln[0].isdigit()) == 16
    m = report(tmp_path / "a", "manifest.json")
    assert m["outputs"] == ["levels.csv"] and len(m["config_sha256"]) == 64

    cfg = load("nd145_levels.json")
    cfg["material"]["nuclear_spin"] = 0.0
    assert run("levels", "--config", dump(tmp_path, cfg), "--out", tmp_path / "b") == 0
    lines = (tmp_path / "b" / "levels.csv").read_text().splitlines()
    assert sum(1 for ln in lines if ln and ln[0].isdigit()) == 2


def test_config_error_writes_nothing(tmp_path, capsys):
    cfg = load("nd145_levels.json")
    cfg["field"]["B_teslaa"] = 1.0
    out = tmp_path / "out"
    assert run("levels", "--config", dump(tmp_path, cfg), "--out", out) == 2
    assert "unknown key 'field.B_teslaa'" in capsys.readouterr().err
    assert not out.exists()
    assert run("levels", "--config", tmp_path / "missing.json", "--out", out) == 2
    assert run("levels", "--out", out) == 2
    assert not out.exists()


@pytest.fixture(scope="module")
def decay_900(tmp_path_factory):
    out = tmp_path_factory.mktemp("d900")
    code = run("simulate-decay", "--config", CONFIGS / "decay_900mT.json", "--out", out)
    return code, out


def test_simulate_decay_calibrated(decay_900):
    code, out = decay_900
    assert code == 0
    rep = report(out, "fit_report.json")
    assert rep["within_tolerance"]
    assert rep["fit"]["T_f_s"] == pytest.approx(0.075, rel=0.02)
    assert rep["fit"]["T_s_s"] == pytest.approx(1.72, rel=0.02)
    assert 0.03 <= rep["crossing_burn_s"] <= 0.3
    curves = read_decay_curves(out / "decay_curves.csv")
    assert len(curves) == len(load("decay_900mT.json")["pump"]["burn_durations_s"])
    assert set(report(out, "manifest.json")["outputs"]) == \
        {"decay_curves.csv", "amplitudes.csv", "fit_report.json"}


def test_two_burns_and_reproducibility(tmp_path):
    cfg = str(CONFIGS / "decay_two_burns.json")
    assert run("simulate-decay", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run("simulate-decay", "--config", cfg, "--out", tmp_path / "b") == 0
    for name in ("decay_curves.csv", "amplitudes.csv", "fit_report.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    x_f = report(tmp_path / "a", "fit_report.json")["fit"]["x_f"]
    assert x_f[0] > x_f[1]
    assert run("simulate-decay", "--config", cfg, "--seed", 12, "--out", tmp_path / "c") == 0
    assert (tmp_path / "a" / "decay_curves.csv").read_bytes() != \
        (tmp_path / "c" / "decay_curves.csv").read_bytes()
    assert report(tmp_path / "c", "manifest.json")["seed"] == 12


def test_stiffness_guard_exit_code(tmp_path, capsys):
    cfg = load("decay_two_burns.json")
    cfg["pump"]["W_per_s"] = 1e15
    assert run("simulate-decay", "--config", dump(tmp_path, cfg), "--out", tmp_path / "o") == 3
    assert "stiffness" in capsys.readouterr().err


def test_bad_pump_config(tmp_path):
    cfg = load("decay_two_burns.json")
    cfg["pump"]["burn_durations_s"] = [0.95, 0.1]
    assert run("simulate-decay", "--config", dump(tmp_path, cfg), "--out", tmp_path / "o") == 2
    cfg = load("decay_two_burns.json")
    cfg["pump"]["pumped"] = [[0.5, 9.5]]
    assert run("simulate-decay", "--config", dump(tmp_path, cfg), "--out", tmp_path / "o") == 2


def test_field_scan(tmp_path):
    out = tmp_path / "fs"
    assert run("field-scan", "--config", CONFIGS / "field_scan.json", "--out", out) == 0
    rep = report(out, "field_scan_report.json")
    assert 0.4 <= rep["B_at_max_T_fast"] <= 0.5
    assert np.isfinite(rep["T_slow_powerlaw"]["exponent"])
    text = (out / "lifetimes.csv").read_text().splitlines()
    cols = text[0].split(",")
    rows = [dict(zip(cols, ln.split(","))) for ln in text[1:]]
    assert all(float(r["T_slow_s"]) >= float(r["T_fast_s"]) for r in rows)

    # the power-law fit subcommand reads the same table
    fo = tmp_path / "pl"
    assert run("fit", "powerlaw", out / "lifetimes.csv", "--column", "T_slow_s",
               "--window", 0.8, 1.6, "--out", fo) == 0
    pl = report(fo, "fit_report.json")
    assert pl["exponent"] == pytest.approx(rep["T_slow_powerlaw"]["exponent"], rel=1e-12)


def test_afc_actions(tmp_path, capsys):
    cfg = CONFIGS / "afc.json"
    assert run("afc", "report", "--config", cfg, "--out", tmp_path / "r") == 0
    assert report(tmp_path / "r", "efficiency_report.json")["eta"] == pytest.approx(0.336, abs=1e-3)

    assert run("afc", "curve", "--config", cfg, "--out", tmp_path / "c") == 0
    lines = (tmp_path / "c" / "efficiency_curve.csv").read_text().splitlines()
    labels = {ln.split(",")[0] for ln in lines[1:]}
    assert labels == {"perfect memory", "d0/d=0.004", "d0/d=0.013", "d0/d=0.022", "d0/d=0.07"}

    assert run("afc", "max", "--config", cfg, "--out", tmp_path / "m") == 0
    res = report(tmp_path / "m", "max_efficiency.json")
    assert res[0]["eta_star"] == pytest.approx(0.43, abs=0.01)

    assert run("afc", "comb", "--config", cfg, "--format", "json", "--out", tmp_path / "k") == 0
    comb = report(tmp_path / "k", "comb_report.json")
    assert comb["mean_depth"] == pytest.approx(comb["d0_plus_d_over_F"], rel=1e-6)
    assert (tmp_path / "k" / "comb_profile.json").exists()


def test_spectrum_with_overlay(tmp_path):
    cfg = CONFIGS / "spectrum.json"
    assert run("spectrum", "--config", cfg, "--out", tmp_path / "s") == 0
    rep = report(tmp_path / "s", "spectrum_report.json")
    assert rep["alpha_peak_per_cm"] == pytest.approx(1.05, rel=0.01)
    assert run("spectrum", "--config", cfg, "--overlay", tmp_path / "s" / "spectrum.csv",
               "--out", tmp_path / "o") == 0
    assert report(tmp_path / "o", "spectrum_report.json")["overlay_rms_residual"] < 1e-12


def _write_curves(path, B, T_f=0.075, T_s=1.72, seed=0):
    rng = np.random.default_rng(seed)
    t = np.linspace(0.005, 8, 120)
    rows = []
    for b, xf in ((0.1, 0.8), (0.5, 0.5), (0.95, 0.25)):
        y = xf * np.exp(-t / T_f) + (1 - xf) * np.exp(-t / T_s)
        y *= 1 + 0.005 * rng.standard_normal(t.size)
        rows += [{"t_d_s": ti, "amplitude": yi, "burn_duration_s": b} for ti, yi in zip(t, y)]
    return write_table(path, rows, header={"B_tesla": B, "T_kelvin": 3.0})


def test_fit_biexp(tmp_path, capsys):
    f1 = _write_curves(tmp_path / "a.csv", 0.9)
    out = tmp_path / "f"
    assert run("fit", "biexp", f1, "--bootstrap", 100, "--out", out) == 0
    rep = report(out, "fit_report.json")
    assert rep["T_f_s"] == pytest.approx(0.075, rel=0.02)
    assert rep["T_s_s"] == pytest.approx(1.72, rel=0.02)
    assert rep["burn_durations_s"] == [0.1, 0.5, 0.95]
    assert rep["bootstrap_sigma"]["T_f"] > 0

    f2 = _write_curves(tmp_path / "b.csv", 0.5, seed=1)
    assert run("fit", "biexp", f1, f2, "--out", tmp_path / "g") == 4
    assert "allow-mixed" in capsys.readouterr().err
    assert run("fit", "biexp", f1, f2, "--allow-mixed", "--out", tmp_path / "g") == 0

    (tmp_path / "empty.csv").write_text("")
    assert run("fit", "biexp", tmp_path / "empty.csv", "--out", tmp_path / "e") == 4
    assert run("fit", "biexp", "--out", tmp_path / "e") == 4
    assert run("fit", "biexp", f1, "--bootstrap", 10, "--out", tmp_path / "e") == 2
