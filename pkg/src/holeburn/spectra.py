"""
Optical-depth spectra: Gaussian inhomogeneous lines, Zeeman-split lines,
burnt holes with side holes, and prepared combs.

Frequencies are in Hz. Optical depth is the natural-log attenuation
d = alpha * L.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .afc import CombSpec, comb_profile

HOLE_SHAPES = ("lorentzian", "gaussian")


@dataclass(frozen=True)
class Spectrum:
    """Sampled optical depth. ``lines`` keeps (centre, peak, fwhm) of the
    Gaussian components when the spectrum was built analytically."""

    freq: np.ndarray
    optical_depth: np.ndarray
    length_cm: float | None = None
    lines: tuple = ()

    @property
    def alpha(self) -> np.ndarray:
        """Absorption coefficient in 1/cm."""
        if not self.length_cm:
            raise ValueError("crystal length is needed for the absorption coefficient")
        return self.optical_depth / self.length_cm

    @property
    def peak(self) -> float:
        return float(self.optical_depth.max())

    def integrated(self) -> float:
        """Rectangle-rule integral of optical depth over the grid (Hz)."""
        h = np.diff(self.freq)
        return float(np.sum(self.optical_depth) * h.mean())


def _gauss(f, centre, peak, fwhm):
    return peak * np.exp(-4 * math.log(2) * ((f - centre) / fwhm) ** 2)


def _from_lines(freq, lines, length_cm):
    od = np.zeros_like(freq)
    for c, p, w in lines:
        od += _gauss(freq, c, p, w)
    return Spectrum(freq, od, length_cm, tuple(lines))


def inhomogeneous_profile(peak_d: float, fwhm: float, grid, centre: float = 0.0,
                          length_cm: float | None = None) -> Spectrum:
    """Gaussian line with peak optical depth ``peak_d`` and FWHM in Hz."""
    if not fwhm > 0:
        raise ValueError("fwhm must be positive")
    if peak_d < 0:
        raise ValueError("peak optical depth must be >= 0")
    freq = np.asarray(grid, dtype=float)
    return _from_lines(freq, [(centre, peak_d, fwhm)], length_cm)


def split_profile(profile: Spectrum, zeeman_split: float) -> Spectrum:
    """
    Replace every line by two half-weight copies at +-split/2.

    Analytic lines are re-evaluated exactly; a sampled spectrum without line
    parameters is shifted by linear interpolation (zero outside the grid).
    """
    s = float(zeeman_split)
    if s == 0:
        return profile
    if profile.lines:
        lines = []
        for c, p, w in profile.lines:
            lines += [(c - s / 2, p / 2, w), (c + s / 2, p / 2, w)]
        return _from_lines(profile.freq, lines, profile.length_cm)
    f, od = profile.freq, profile.optical_depth
    new = 0.5 * (np.interp(f + s / 2, f, od, left=0, right=0)
                 + np.interp(f - s / 2, f, od, left=0, right=0))
    return replace(profile, optical_depth=new, lines=())


def hole_shape(f, centre, depth, width, shape="lorentzian"):
    if shape == "lorentzian":
        hw = width / 2
        return depth * hw * hw / ((f - centre) ** 2 + hw * hw)
    if shape == "gaussian":
        return _gauss(f, centre, depth, width)
    raise ValueError(f"hole shape must be one of {HOLE_SHAPES}")


def hole_features(freq, hole: dict, side_holes=()) -> np.ndarray:
    """Summed hole depth: central hole plus a symmetric pair per side hole."""
    f = np.asarray(freq, dtype=float)
    c, w = hole["center"], hole["width"]
    shape = hole.get("shape", "lorentzian")
    total = hole_shape(f, c, hole["depth"], w, shape)
    for sh in side_holes:
        for sign in (-1, 1):
            total = total + hole_shape(f, c + sign * sh["offset"], sh["depth"],
                                       sh.get("width", w), shape)
    return total


def hole_spectrum(profile: Spectrum, hole: dict, side_holes=()) -> Spectrum:
    """
    Burn a central hole and side holes into ``profile``.

    ``hole`` has keys center (Hz), depth, width (FWHM, Hz) and optionally
    shape ("lorentzian" default, or "gaussian"). Each side hole is
    {offset, depth[, width]} and appears at center +- offset. The result is
    clipped at zero; a warning is raised when the summed features at a
    feature centre exceed the local optical depth (far Lorentzian tails on
    the Gaussian wings are clipped silently).
    """
    f = profile.freq
    holes = hole_features(f, hole, side_holes)
    od = profile.optical_depth - holes
    centres = [hole["center"]] + [hole["center"] + sg * sh["offset"]
                                 for sh in side_holes for sg in (-1, 1)]
    centres = [c for c in centres if f[0] <= c <= f[-1]]
    at = np.interp(centres, f, od)
    if np.any(at < -1e-9 * max(profile.peak, 1.0)):
        warnings.warn("hole deeper than the local optical depth; clipped at zero",
                      RuntimeWarning, stacklevel=2)
    return replace(profile, optical_depth=np.clip(od, 0.0, None), lines=())


def comb_transmission(profile: Spectrum, comb: CombSpec, centre: float = 0.0,
                      background: float = 0.0) -> Spectrum:
    """
    Prepare a comb over ``comb.bandwidth`` around ``centre``.

    Inside the window the optical depth becomes the square comb (d0 valleys,
    d0 + d teeth), capped by the unpumped profile, plus ``background`` from
    ions the preparation does not address. Outside the window the profile is
    unchanged.
    """
    f = profile.freq
    lo, hi = centre - comb.bandwidth / 2, centre + comb.bandwidth / 2
    if lo < f[0] or hi > f[-1]:
        raise ValueError("comb bandwidth exceeds the profile's frequency support")
    inside = (f >= lo) & (f < hi)
    od = profile.optical_depth.copy()
    teeth = comb_profile(comb, f[inside] - centre)
    od[inside] = np.minimum(od[inside], teeth) + background
    return replace(profile, optical_depth=od, lines=())


def measure_fwhm(spec: Spectrum) -> float:
    """Full width at half maximum of the highest peak, by linear
    interpolation between grid points."""
    f, y = spec.freq, spec.optical_depth
    i = int(np.argmax(y))
    half = y[i] / 2
    j = i
    while j > 0 and y[j] > half:
        j -= 1
    k = i
    while k < len(y) - 1 and y[k] > half:
        k += 1
    if y[j] > half or y[k] > half:
        raise ValueError("peak does not fall to half maximum inside the grid")
    left = f[j] + (half - y[j]) * (f[j + 1] - f[j]) / (y[j + 1] - y[j])
    right = f[k - 1] + (half - y[k - 1]) * (f[k] - f[k - 1]) / (y[k] - y[k - 1])
    return float(right - left)
