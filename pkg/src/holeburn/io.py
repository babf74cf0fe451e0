"""CSV and JSON readers/writers for curves, spectra and tables."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .fitkit import DecayCurve
from .spectra import Spectrum

META_KEYS = {"burn_duration_s": "burn_duration", "B_tesla": "B", "T_kelvin": "T"}


class IngestionError(ValueError):
    """A data file could not be read into the expected structure."""


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_to_csv(rows: list[dict], columns=None, header: dict | None = None) -> str:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _clean(o):
    # JSON has no inf/nan
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    return o


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n"


def write_table(path: Path, rows: list[dict], fmt="csv", columns=None, header=None) -> Path:
    path = Path(path)
    if fmt == "json":
        path = path.with_suffix(".json")
        cols = list(columns or (rows[0].keys() if rows else []))
        payload = {"metadata": header or {}, "rows": [{c: r[c] for c in cols} for r in rows]}
        path.write_text(to_json(payload))
    else:
        path.write_text(table_to_csv(rows, columns, header))
    return path


def read_table(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return (metadata header, column names, rows of strings)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise IngestionError(f"{path}: {e.strerror or e}") from e
    meta, body = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            k, sep, v = s[1:].partition(":")
            if sep:
                meta[k.strip()] = v.strip()
            continue
        body.append((lineno, line))
    if not body:
        raise IngestionError(f"{path}: file contains no data")
    reader = list(csv.reader([l for _, l in body]))
    columns = [c.strip() for c in reader[0]]
    rows = reader[1:]
    if not rows:
        raise IngestionError(f"{path}: header but no data rows")
    for (lineno, _), r in zip(body[1:], rows):
        if len(r) != len(columns):
            raise IngestionError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(r)}")
    return meta, columns, rows


def _float_column(path, columns, rows, name, required=True):
    if name not in columns:
        if required:
            raise IngestionError(f"{path}: missing column {name!r} (have {columns})")
        return None
    j = columns.index(name)
    try:
        return np.array([float(r[j]) for r in rows])
    except ValueError as e:
        raise IngestionError(f"{path}: non-numeric value in column {name!r}: {e}") from e


def _meta_floats(path, meta):
    out = {}
    for k, key in META_KEYS.items():
        if k in meta:
            try:
                out[key] = float(meta[k])
            except ValueError as e:
                raise IngestionError(f"{path}: bad metadata {k}={meta[k]!r}") from e
    return out


def read_decay_curves(path) -> list[DecayCurve]:
    """
    Read decay data: columns t_d_s, amplitude and optional sigma. A
    ``burn_duration_s`` column splits the file into one curve per burn
    duration; otherwise the file is one curve and burn_duration_s may be
    given in the ``# key: value`` header.
    """
    meta, columns, rows = read_table(path)
    base = _meta_floats(path, meta)
    t = _float_column(path, columns, rows, "t_d_s")
    y = _float_column(path, columns, rows, "amplitude")
    sig = _float_column(path, columns, rows, "sigma", required=False)
    burn = _float_column(path, columns, rows, "burn_duration_s", required=False)
    groups = [None] if burn is None else list(dict.fromkeys(burn.tolist()))
    curves = []
    for g in groups:
        sel = np.ones(len(t), bool) if g is None else burn == g
        md = dict(base, source=str(path))
        if g is not None:
            md["burn_duration"] = g
        try:
            curves.append(DecayCurve(t[sel], y[sel], None if sig is None else sig[sel], md))
        except ValueError as e:
            raise IngestionError(f"{path}: {e}") from e
    return curves


def decay_curves_to_rows(curves) -> list[dict]:
    rows = []
    for c in curves:
        for t, a in zip(c.t, c.amplitude):
            rows.append({"t_d_s": float(t), "amplitude": float(a),
                         "burn_duration_s": float(c.metadata["burn_duration"])})
    return rows


def write_spectrum(path, spec: Spectrum, fmt="csv") -> Path:
    rows = [{"freq_Hz": float(f), "optical_depth": float(d)}
            for f, d in zip(spec.freq, spec.optical_depth)]
    return write_table(path, rows, fmt)


def read_spectrum(path) -> Spectrum:
    _, columns, rows = read_table(path)
    f = _float_column(path, columns, rows, "freq_Hz")
    d = _float_column(path, columns, rows, "optical_depth")
    if np.any(np.diff(f) <= 0):
        raise IngestionError(f"{path}: freq_Hz must be strictly ascending")
    return Spectrum(f, d)


def read_points(path, x="B_tesla", y="T_s") -> np.ndarray:
    _, columns, rows = read_table(path)
    return np.column_stack([_float_column(path, columns, rows, x),
                            _float_column(path, columns, rows, y)])
