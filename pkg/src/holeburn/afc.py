"""
Atomic frequency comb echo efficiency for square teeth.

    eta = d_eff^2 exp(-d_eff) sinc^2(pi/F) exp(-d0),   d_eff = d / F

with the unnormalised sinc(x) = sin(x)/x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

SHAPES = ("square",)


def sinc(x: float) -> float:
    return 1.0 if x == 0 else math.sin(x) / x


@dataclass(frozen=True)
class CombSpec:
    """Comb parameters: peak depth d, residual depth d0, finesse F, tooth
    spacing delta (Hz) and comb bandwidth (Hz)."""

    d: float
    d0: float
    F: float
    delta: float = 1e6
    bandwidth: float = 100e6
    shape: str = "square"

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("peak optical depth d must be positive")
        if not 0 <= self.d0 <= self.d:
            raise ValueError("residual depth must satisfy 0 <= d0 <= d")
        if not self.F > 1:
            raise ValueError("finesse must exceed 1 (dephasing factor undefined otherwise)")
        if not self.delta > 0 or not self.bandwidth > 0:
            raise ValueError("tooth spacing and bandwidth must be positive")
        if self.shape not in SHAPES:
            raise ValueError(f"unsupported tooth shape {self.shape!r}")

    @property
    def echo_delay(self) -> float:
        return 1.0 / self.delta

    @property
    def tooth_width(self) -> float:
        return self.delta / self.F


@dataclass(frozen=True)
class EfficiencyReport:
    eta: float
    d_tilde: float
    absorption: float
    dephasing: float
    background: float
    F: float
    echo_delay: float

    @property
    def factors(self) -> dict:
        return {"absorption": self.absorption, "dephasing": self.dephasing,
                "background": self.background}

    def to_dict(self) -> dict:
        return {"eta": self.eta, "d_tilde": self.d_tilde, "F": self.F,
                "echo_delay_s": self.echo_delay, "factors": self.factors}


def afc_efficiency(spec: CombSpec) -> EfficiencyReport:
    if spec.F <= 1:
        raise ValueError("finesse must exceed 1")
    dt = spec.d / spec.F
    absorption = dt * dt * math.exp(-dt)
    dephasing = sinc(math.pi / spec.F) ** 2
    background = math.exp(-spec.d0)
    return EfficiencyReport(eta=absorption * dephasing * background, d_tilde=dt,
                            absorption=absorption, dephasing=dephasing,
                            background=background, F=spec.F, echo_delay=spec.echo_delay)


def optimal_finesse(d: float) -> float:
    """Finesse maximising the square-comb efficiency: pi / arctan(2 pi / d)."""
    if not d > 0:
        raise ValueError("optical depth must be positive")
    return math.pi / math.atan(2 * math.pi / d)


def efficiency_at(d: float, d0_ratio: float) -> EfficiencyReport:
    return afc_efficiency(CombSpec(d=d, d0=d0_ratio * d, F=optimal_finesse(d)))


def max_efficiency(d0_ratio: float, d_range=(0.1, 50.0), n_scan=2001, rtol=1e-4):
    """
    Best efficiency over peak depth, using the optimal finesse at each d and
    d0 = d0_ratio * d.

    A log-spaced scan brackets the maximum (which may sit on the upper end
    of ``d_range`` when d0_ratio = 0); bounded Brent refines it.

    Returns
    -------
    (d_star, F_star, eta_star)
    """
    if not 0 <= d0_ratio < 1:
        raise ValueError("d0_ratio must lie in [0, 1)")
    lo, hi = float(d_range[0]), float(d_range[1])
    if not (0 < lo < hi):
        raise ValueError("empty or non-positive d range")

    def neg(d):
        return -efficiency_at(d, d0_ratio).eta

    grid = np.geomspace(lo, hi, n_scan)
    vals = np.array([neg(d) for d in grid])
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_scan - 1)]
    r = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded",
                                 options={"xatol": rtol * 1e-2 * grid[i]})
    d_star = float(r.x) if r.fun <= vals[i] else float(grid[i])
    return d_star, optimal_finesse(d_star), -neg(d_star)


def efficiency_curve(d0_ratio: float, d_grid) -> list[dict]:
    d_grid = np.asarray(d_grid, dtype=float)
    if d_grid.size == 0 or np.any(d_grid <= 0) or np.any(np.diff(d_grid) <= 0):
        raise ValueError("d grid must be positive and ascending")
    rows = []
    for d in d_grid:
        rep = efficiency_at(float(d), d0_ratio)
        rows.append({"d": float(d), "F_opt": rep.F, "eta": rep.eta, "d0_ratio": d0_ratio,
                     **rep.factors})
    return rows


def _tooth_measure(u, period, width):
    """Length of tooth coverage in [0, u] for teeth [k P, k P + width]."""
    k = np.floor(u / period)
    return k * width + np.minimum(u - k * period, width)


def comb_profile(spec: CombSpec, freq) -> np.ndarray:
    """
    Square comb optical depth on a uniform frequency grid (Hz, relative to a
    tooth centre): d0 everywhere plus d on teeth of width delta/F.

    Each grid value is the average of the ideal square wave over its cell,
    so the rectangle-rule mean over whole periods is d0 + d/F exactly.
    """
    f = np.asarray(freq, dtype=float)
    if f.size < 2:
        raise ValueError("frequency grid needs at least two points")
    h = np.diff(f)
    if np.any(h <= 0) or np.ptp(h) > 1e-9 * h.mean():
        raise ValueError("frequency grid must be uniform and ascending")
    h = float(h.mean())
    if h > spec.delta / 10:
        raise ValueError(f"grid spacing {h:g} Hz is coarser than delta/10 = {spec.delta / 10:g} Hz")
    w = spec.tooth_width
    shift = w / 2
    lo = f - h / 2 + shift
    hi = f + h / 2 + shift
    cover = _tooth_measure(hi, spec.delta, w) - _tooth_measure(lo, spec.delta, w)
    return spec.d0 + spec.d * cover / h
