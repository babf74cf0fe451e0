import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holeburn import spectra as sp
from holeburn.afc import CombSpec, optimal_finesse
from holeburn.levels import zeeman_splitting

GRID = np.linspace(-30e9, 30e9, 6001)


def test_absorption_coefficients():
    assert sp.inhomogeneous_profile(1.26, 7.7e9, GRID, length_cm=1.2).alpha.max() == \
        pytest.approx(1.05, rel=0.01)
    assert sp.inhomogeneous_profile(0.44, 7.7e9, GRID, length_cm=1.2).alpha.max() == \
        pytest.approx(0.37, rel=0.01)
    with pytest.raises(ValueError):
        sp.inhomogeneous_profile(1.26, 7.7e9, GRID).alpha


def test_half_maximum_and_fwhm():
    prof = sp.inhomogeneous_profile(1.26, 7.7e9, np.array([-3.85e9, 0.0, 3.85e9]))
    assert prof.optical_depth[[0, 2]] == pytest.approx([0.63, 0.63], rel=1e-12)
    prof = sp.inhomogeneous_profile(1.26, 7.7e9, GRID)
    assert sp.measure_fwhm(prof) == pytest.approx(7.7e9, rel=1e-4)
    fine = sp.inhomogeneous_profile(1.26, 7.7e9, np.linspace(-30e9, 30e9, 12001))
    assert sp.measure_fwhm(fine) == pytest.approx(sp.measure_fwhm(prof), rel=1e-3)
    assert fine.peak == pytest.approx(prof.peak, rel=1e-3)
    with pytest.raises(ValueError):
        sp.inhomogeneous_profile(1.0, 0.0, GRID)


def test_split_profile():
    prof = sp.inhomogeneous_profile(1.26, 7.7e9, GRID)
    assert sp.split_profile(prof, 0.0) is prof
    s = zeeman_splitting(1.47, 0.37) * 1e9
    split = sp.split_profile(prof, s)
    # direct evaluation of the two-Gaussian sum on a fine grid; at this
    # separation the centre is a shallow dip between two maxima
    g = lambda f: 0.63 * np.exp(-4 * math.log(2) * (f / 7.7e9) ** 2)
    fine = np.linspace(-10e9, 10e9, 2_000_001)
    two = g(fine - s / 2) + g(fine + s / 2)
    assert split.peak == pytest.approx(two.max(), rel=1e-4)
    assert two[1_000_000] < two.max()
    assert split.peak < prof.peak
    far = sp.split_profile(prof, 40e9)
    assert far.optical_depth.max() == pytest.approx(0.63, rel=1e-6)
    # sampled profiles without line parameters use interpolation
    bare = sp.Spectrum(prof.freq, prof.optical_depth)
    assert sp.split_profile(bare, s).optical_depth == pytest.approx(split.optical_depth, abs=1e-3)


def test_hole_and_side_holes():
    prof = sp.inhomogeneous_profile(1.26, 7.7e9, GRID)
    one = sp.hole_spectrum(prof, {"center": 0.0, "depth": 0.5, "width": 0.3e9})
    i0 = np.argmin(abs(GRID))
    assert one.optical_depth[i0] == pytest.approx(1.26 - 0.5, rel=1e-9)
    with_side = sp.hole_spectrum(prof, {"center": 0.0, "depth": 0.5, "width": 0.3e9},
                                 [{"offset": 2e9, "depth": 0.2}])
    for f in (-2e9, 2e9):
        j = np.argmin(abs(GRID - f))
        assert with_side.optical_depth[j] < one.optical_depth[j] - 0.15
    full = sp.hole_spectrum(prof, {"center": 0.0, "depth": 1.26, "width": 0.3e9})
    assert full.optical_depth[i0] == pytest.approx(0.0, abs=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sp.hole_spectrum(prof, {"center": 0.0, "depth": 1.26, "width": 0.3e9})
    with pytest.warns(RuntimeWarning):
        deep = sp.hole_spectrum(prof, {"center": 0.0, "depth": 3.0, "width": 0.3e9})
    assert deep.optical_depth.min() >= 0.0
    with pytest.raises(ValueError):
        sp.hole_spectrum(prof, {"center": 0.0, "depth": 0.5, "width": 1e9, "shape": "box"})


def test_hole_area_bookkeeping():
    prof = sp.inhomogeneous_profile(1.26, 7.7e9, GRID)
    hole = {"center": 1e9, "depth": 0.4, "width": 0.5e9, "shape": "gaussian"}
    side = [{"offset": 3e9, "depth": 0.1}]
    burnt = sp.hole_spectrum(prof, hole, side)
    lost = prof.integrated() - burnt.integrated()
    area = lambda depth, w: depth * w * math.sqrt(math.pi / (4 * math.log(2)))
    assert lost == pytest.approx(area(0.4, 0.5e9) + 2 * area(0.1, 0.5e9), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(peak=st.floats(0.01, 10), split=st.floats(0, 30e9), depth=st.floats(0, 20),
       width=st.floats(1e7, 5e9), off=st.floats(0, 10e9))
def test_optical_depth_never_negative(peak, split, depth, width, off):
    prof = sp.split_profile(sp.inhomogeneous_profile(peak, 7.7e9, GRID), split)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = sp.hole_spectrum(prof, {"center": 0.0, "depth": depth, "width": width},
                               [{"offset": off, "depth": depth / 2}])
    assert out.optical_depth.min() >= 0


def _deep_profile(B=0.15):
    # unpumped depth well above the comb teeth so the cap never binds
    grid = np.arange(-200_000, 200_000) * 1e4
    prof = sp.inhomogeneous_profile(12.0, 7.7e9, grid)
    return sp.split_profile(prof, zeeman_splitting(1.47, B) * 1e9)


def test_comb_in_split_profile():
    prof = _deep_profile()
    d = 4.7
    comb = CombSpec(d=d, d0=0.013 * d, F=optimal_finesse(d), delta=1e6, bandwidth=100e6)
    out = sp.comb_transmission(prof, comb)
    f = out.freq
    inside = (f >= -50e6) & (f < 50e6)
    assert out.optical_depth[inside].max() == pytest.approx(d + comb.d0, rel=1e-12)
    assert out.optical_depth[inside].min() == pytest.approx(0.0611, abs=1e-4)
    assert out.optical_depth[inside].mean() == pytest.approx(comb.d0 + d / comb.F, abs=1e-10)
    assert np.array_equal(out.optical_depth[~inside], prof.optical_depth[~inside])
    bg = sp.comb_transmission(prof, comb, background=0.02)
    assert bg.optical_depth[inside].mean() == pytest.approx(comb.d0 + d / comb.F + 0.02,
                                                            abs=1e-10)
    # very high finesse: teeth vanish and the window becomes a flat hole
    # (a cell holding a tooth shows its average, d * tooth width / cell)
    hi_F = CombSpec(d=d, d0=0.0, F=1e6, delta=1e6)
    flat = sp.comb_transmission(prof, hi_F)
    assert flat.optical_depth[inside].mean() == pytest.approx(d / 1e6, rel=1e-9)
    assert flat.optical_depth[inside].max() <= d * hi_F.tooth_width / 1e4 * (1 + 1e-9)
    with pytest.raises(ValueError):
        sp.comb_transmission(prof, CombSpec(d=d, d0=0.0, F=3, delta=1e6, bandwidth=10e9))
