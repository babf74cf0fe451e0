"""
Field and temperature dependence of ground-state relaxation.

Electronic relaxation (Delta m_I = 0) is the sum of a spin-lattice part
(direct, Raman, Orbach) and a flip-flop part. Nuclear-flip channels
(Delta m_I = +-1) are the same electronic rate suppressed by the hyperfine
mixing factor.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .levels import FieldPoint, SpinSystem, mixing_ratio, zeeman_splitting

FLIPFLOP_PROFILES = ("constant", "power", "table")


@dataclass(frozen=True)
class SLRParams:
    """Spin-lattice relaxation coefficients.

    alpha_direct in 1/(s T^4), alpha_raman in 1/(s K^9), alpha_orbach in 1/s,
    orbach_gap in kelvin.
    """

    alpha_direct: float = 0.0
    alpha_raman: float = 0.0
    alpha_orbach: float = 0.0
    orbach_gap: float = 0.0
    include_coth: bool = True

    def __post_init__(self):
        for name in ("alpha_direct", "alpha_raman", "alpha_orbach", "orbach_gap"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.alpha_orbach > 0 and self.orbach_gap <= 0:
            raise ValueError("orbach_gap must be positive when alpha_orbach > 0")


@dataclass(frozen=True)
class FlipFlopParams:
    """Electronic flip-flop rate, rescaled from a reference sample.

    The field shape of the reference rate is one of:

    ``constant``
        base_rate at every field.
    ``power``
        base_rate * (B / reference_field) ** (-exponent).
    ``table``
        base_rate times a log-log interpolation of (table_B, table_rate).

    Above ``valid_B_max`` (or outside the table) the value is flagged as an
    extrapolation.
    """

    base_rate: float
    concentration: float
    reference_concentration: float
    nuclear_dilution: float = 8.0
    profile: str = "constant"
    reference_field: float = 1.0
    exponent: float = 0.0
    table_B: tuple[float, ...] = ()
    table_rate: tuple[float, ...] = ()
    valid_B_max: float | None = None

    def __post_init__(self):
        if self.base_rate < 0:
            raise ValueError("base_rate must be >= 0")
        if self.concentration <= 0 or self.reference_concentration <= 0:
            raise ValueError("concentrations must be positive")
        if self.nuclear_dilution <= 0:
            raise ValueError("nuclear_dilution must be positive")
        if self.profile not in FLIPFLOP_PROFILES:
            raise ValueError(f"unknown flip-flop profile {self.profile!r}")
        if self.profile == "power" and self.reference_field <= 0:
            raise ValueError("reference_field must be positive")
        if self.profile == "table":
            if len(self.table_B) < 2 or len(self.table_B) != len(self.table_rate):
                raise ValueError("table profile needs >= 2 matching (B, rate) entries")
            if min(self.table_B) <= 0 or min(self.table_rate) <= 0:
                raise ValueError("table entries must be positive")
            if any(np.diff(self.table_B) <= 0):
                raise ValueError("table_B must be strictly ascending")

    @classmethod
    def for_system(cls, sys: SpinSystem, **kwargs) -> "FlipFlopParams":
        """Default the nuclear dilution to 2I+1 of ``sys``."""
        kwargs.setdefault("nuclear_dilution", float(sys.n_nuclear))
        return cls(**kwargs)

    @property
    def scale(self) -> float:
        return (self.concentration / self.reference_concentration) / self.nuclear_dilution

    def reference_rate(self, B: float) -> float:
        if self.profile == "constant":
            return self.base_rate
        if self.profile == "power":
            if B <= 0:
                raise ValueError("power-law flip-flop profile is singular at B = 0")
            return self.base_rate * (B / self.reference_field) ** (-self.exponent)
        if B <= 0:
            raise ValueError("tabulated flip-flop profile needs B > 0")
        logr = np.interp(math.log(B), np.log(self.table_B), np.log(self.table_rate))
        return self.base_rate * math.exp(logr)

    def is_extrapolated(self, B: float) -> bool:
        if self.valid_B_max is not None and B > self.valid_B_max:
            return True
        if self.profile == "table":
            return not (self.table_B[0] <= B <= self.table_B[-1])
        return False


@dataclass(frozen=True)
class FieldScanModel:
    slr: SLRParams
    ff: FlipFlopParams
    sys: SpinSystem


def _thermal_factor(sys: SpinSystem, fp: FieldPoint) -> float:
    if fp.B == 0:
        raise ValueError("coth divergence at zero splitting")
    x = zeeman_splitting(sys.g_factor, fp.B) / (2 * fp.kT_GHz)
    return 1.0 / math.tanh(x)


def direct_slr_rate(p: SLRParams, sys: SpinSystem, fp: FieldPoint) -> float:
    """One-phonon rate alpha_direct B^4, times coth(dE_g / 2kT) if enabled."""
    rate = p.alpha_direct * fp.B ** 4
    if p.include_coth:
        rate *= _thermal_factor(sys, fp)
    return rate


def total_slr_rate(p: SLRParams, sys: SpinSystem, fp: FieldPoint) -> float:
    rate = direct_slr_rate(p, sys, fp) + p.alpha_raman * fp.T ** 9
    if p.alpha_orbach > 0:
        rate += p.alpha_orbach * math.exp(-p.orbach_gap / fp.T)
    return rate


def flipflop_rate(p: FlipFlopParams, fp: FieldPoint) -> float:
    """Reference flip-flop rate scaled linearly by concentration and by
    1/nuclear_dilution. For 10 vs 30 ppm and dilution 8 the scale is 1/24."""
    return p.reference_rate(fp.B) * p.scale


def nuclear_flip_rates(R0: float, A: float, delta_Eg: float) -> tuple[float, float]:
    """(R_plus, R_minus) of the axial model; equal, and both (A/dE_g)^2 R0."""
    r = mixing_ratio(A, delta_Eg) * R0
    return r, r


def lifetime_breakdown(m: FieldScanModel, fp: FieldPoint) -> dict:
    """
    Channel rates and lifetimes at one field point.

    The suppression factor is capped at 1: where A exceeds the Zeeman
    splitting the perturbative picture fails and the nuclear-flip channel is
    taken to be as fast as the electronic one (``perturbative`` is False).
    """
    if fp.B <= 0:
        raise ValueError("lifetimes need B > 0")
    slr = total_slr_rate(m.slr, m.sys, fp)
    ff = flipflop_rate(m.ff, fp)
    R0 = slr + ff
    dE = zeeman_splitting(m.sys.g_factor, fp.B)
    mix = mixing_ratio(m.sys.hyperfine_A_GHz, dE)
    suppression = min(mix, 1.0)
    R_plus = R_minus = suppression * R0
    T_fast = 1.0 / R0 if R0 > 0 else math.inf
    T_slow = 1.0 / R_plus if R_plus > 0 else math.inf
    return {
        "B_tesla": fp.B,
        "T_fast_s": T_fast,
        "T_slow_s": T_slow,
        "slr_rate": slr,
        "flipflop_rate": ff,
        "R0": R0,
        "R_plus": R_plus,
        "R_minus": R_minus,
        "mixing": mix,
        "perturbative": mix <= 1.0,
        "extrapolated": m.ff.is_extrapolated(fp.B),
    }


def predict_lifetimes(m: FieldScanModel, fp: FieldPoint) -> tuple[float, float]:
    """Return (T_fast, T_slow) in seconds."""
    row = lifetime_breakdown(m, fp)
    return row["T_fast_s"], row["T_slow_s"]


def field_scan(m: FieldScanModel, B_grid, T: float) -> list[dict]:
    return [lifetime_breakdown(m, FieldPoint(float(B), T)) for B in B_grid]


def model_to_config(m: FieldScanModel) -> dict:
    ff = asdict(m.ff)
    ff["table_B"] = list(ff["table_B"])
    ff["table_rate"] = list(ff["table_rate"])
    return {"slr": asdict(m.slr), "flipflop": ff}


def model_from_config(cfg: dict, sys: SpinSystem) -> FieldScanModel:
    slr = SLRParams(**cfg["slr"])
    ff_cfg = dict(cfg["flipflop"])
    for key in ("table_B", "table_rate"):
        if key in ff_cfg:
            ff_cfg[key] = tuple(float(v) for v in ff_cfg[key])
    ff = FlipFlopParams.for_system(sys, **ff_cfg)
    return FieldScanModel(slr=slr, ff=ff, sys=sys)
