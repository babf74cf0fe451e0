"""
Scenario files: JSON, strictly validated before anything is computed.

Physical parameters never have hidden defaults; only numerical settings
(grids, tolerances) do.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line else f"{path}: "
        elif line:
            loc = f"line {line}: "
        super().__init__(loc + message)


NUM, INT, BOOL, STR, NUMLIST, ANY = "number", "integer", "boolean", "string", "list of numbers", "any"


@dataclass(frozen=True)
class F:
    """One field of a section schema."""

    kind: str
    required: bool = True
    default: object = None
    choices: tuple = ()


def S(required=True, **fields):
    return {"__required__": required, **fields}


SCHEMA = S(
    seed=F(INT, False, 0),
    material=S(False,
               g_factor=F(NUM), hyperfine_A_MHz=F(NUM), nuclear_spin=F(NUM),
               optical_lifetime_us=F(NUM), isotopic_purity=F(NUM)),
    field=S(False, B_tesla=F(NUM), T_kelvin=F(NUM)),
    rates=S(False, R0_per_s=F(NUM), R_plus_per_s=F(NUM), R_minus_per_s=F(NUM)),
    calibration=S(False, T_fast_s=F(NUM), T_slow_s=F(NUM),
                  target_crossing_s=F(NUM, False), tolerance=F(NUM, False, 0.02)),
    pump=S(False,
           W_per_s=F(NUM), epsilon=F(ANY),
           pumped=F(ANY), average_over_m_I=F(BOOL, False, False),
           burn_durations_s=F(NUMLIST),
           delays_s=F(ANY),
           mS_split_lower=F(NUM, False, 0.5),
           observable=F(STR, False, "hole_area", ("hole_area", "hole_depth"))),
    noise=S(False, relative_sigma=F(NUM)),
    relaxation=S(False,
                 slr=S(True, alpha_direct=F(NUM), alpha_raman=F(NUM), alpha_orbach=F(NUM),
                       orbach_gap_K=F(NUM), include_coth=F(BOOL)),
                 flipflop=S(True, base_rate_per_s=F(NUM), concentration_ppm=F(NUM),
                            reference_concentration_ppm=F(NUM), nuclear_dilution=F(NUM, False),
                            profile=F(STR, True, None, ("constant", "power", "table")),
                            reference_field_tesla=F(NUM, False, 1.0), exponent=F(NUM, False, 0.0),
                            table_B_tesla=F(NUMLIST, False, []), table_rate=F(NUMLIST, False, []),
                            valid_B_max_tesla=F(NUM, False))),
    field_scan=S(False, T_kelvin=F(NUM), B_min_tesla=F(NUM, False, 0.01),
                 B_max_tesla=F(NUM, False, 1.6), n=F(INT, False, 160),
                 spacing=F(STR, False, "log", ("log", "linear")),
                 fit_window_tesla=F(NUMLIST, False)),
    afc=S(False, d=F(NUM), d0_ratio=F(NUM), finesse=F(ANY, False, "optimal"),
          delta_Hz=F(NUM, False, 1e6), bandwidth_Hz=F(NUM, False, 10e6),
          d_grid=F(NUMLIST, False, [0.1, 10.0, 100]),
          band_ratios=F(NUMLIST, False, [0.004, 0.013, 0.022]),
          reference_ratios=F(NUMLIST, False, [0.07]),
          d_range=F(NUMLIST, False, [0.1, 50.0]),
          comb_points_per_period=F(INT, False, 200)),
    spectrum=S(False, peak_od=F(NUM), fwhm_GHz=F(NUM), length_cm=F(NUM, False),
               span_GHz=F(NUM, False, 40.0), n_points=F(INT, False, 4001),
               split=F(BOOL, False, False), hole=F(ANY, False), side_holes=F(ANY, False, [])),
)


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _check_kind(value, f: F):
    if f.kind == NUM:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if f.kind == INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if f.kind == BOOL:
        return isinstance(value, bool)
    if f.kind == STR:
        return isinstance(value, str)
    if f.kind == NUMLIST:
        return isinstance(value, list) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    return True


def _validate(raw, schema, path, text, src):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path or 'top level'} must be an object", _line_of(text, path.split(".")[-1]) if path else 1, src)
    allowed = {k for k in schema if k != "__required__"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key {'.'.join(filter(None, [path, key]))!r}",
                              _line_of(text, key), src)
    out = {}
    for key, sub in schema.items():
        if key == "__required__":
            continue
        full = ".".join(filter(None, [path, key]))
        if isinstance(sub, dict):
            if key in raw:
                out[key] = _validate(raw[key], sub, full, text, src)
            elif path and sub["__required__"]:
                raise ConfigError(f"missing required section {full!r}", _line_of(text, path.split(".")[-1]), src)
            continue
        if key not in raw:
            if sub.required:
                raise ConfigError(f"missing required key {full!r}",
                                  _line_of(text, path.split(".")[-1]) if path else None, src)
            out[key] = sub.default
            continue
        v = raw[key]
        if not _check_kind(v, sub):
            raise ConfigError(f"{full} must be a {sub.kind}, got {json.dumps(v)}",
                              _line_of(text, key), src)
        if sub.choices and v not in sub.choices:
            raise ConfigError(f"{full} must be one of {list(sub.choices)}, got {v!r}",
                              _line_of(text, key), src)
        out[key] = v
    return out


@dataclass
class Scenario:
    data: dict
    text: str
    path: str | None = None

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def section(self, name):
        return self.data.get(name)

    def line(self, key):
        return _line_of(self.text, key)

    def require(self, *names):
        missing = [n for n in names if self.data.get(n) is None]
        if missing:
            raise ConfigError(f"this command needs section(s) {missing}", None, self.path)


def parse_scenario(text: str, path=None) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", e.lineno, path) from None
    data = _validate(raw, SCHEMA, "", text, path)
    return Scenario(data=data, text=text, path=path)


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror or e}", None, str(p)) from None
    return parse_scenario(text, str(p))
