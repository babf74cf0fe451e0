import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holeburn import afc


def eta_formula(d, d0, F):
    dt = d / F
    return dt * dt * math.exp(-dt) * (math.sin(math.pi / F) / (math.pi / F)) ** 2 * math.exp(-d0)


def test_reference_operating_point():
    rep = afc.efficiency_at(4.7, 0.013)
    assert rep.eta == pytest.approx(0.336, abs=1e-3)
    assert rep.F == pytest.approx(3.384, abs=1e-3)


def test_limits():
    assert afc.afc_efficiency(afc.CombSpec(d=50, d0=50, F=10)).eta < 1e-20
    eta_inf = afc.afc_efficiency(afc.CombSpec(d=4.7, d0=0.0, F=1e9)).eta
    assert eta_inf < 1e-15


def test_sinc_convention():
    rep = afc.afc_efficiency(afc.CombSpec(d=3.0, d0=0.0, F=2.0))
    assert rep.dephasing == pytest.approx((2 / math.pi) ** 2, rel=1e-15)
    assert afc.sinc(0.0) == 1.0


def test_finesse_closed_form():
    assert afc.optimal_finesse(2 * math.pi) == pytest.approx(4.0, abs=1e-12)
    assert afc.optimal_finesse(10.0) > afc.optimal_finesse(4.7)
    with pytest.raises(ValueError):
        afc.optimal_finesse(0.0)


@settings(max_examples=200, deadline=None)
@given(d=st.floats(0.5, 50), r=st.floats(0, 0.5))
def test_factorisation_and_local_optimality(d, r):
    F = afc.optimal_finesse(d)
    rep = afc.afc_efficiency(afc.CombSpec(d=d, d0=r * d, F=F))
    assert rep.eta == pytest.approx(rep.absorption * rep.dephasing * rep.background, rel=1e-12)
    assert rep.eta == pytest.approx(eta_formula(d, r * d, F), rel=1e-12)
    assert all(0 < v <= 1 for v in rep.factors.values())
    assert 0 < rep.eta < 1
    for k in (0.99, 1.01):
        if F * k > 1:
            assert eta_formula(d, r * d, F * k) <= rep.eta


def test_finesse_against_grid_oracle():
    for d in (0.7, 2.0, 4.7, 12.0, 40.0):
        F = np.linspace(1.0005, 60, 600_001)
        dt = d / F
        eta = dt ** 2 * np.exp(-dt) * (np.sin(np.pi / F) / (np.pi / F)) ** 2
        assert afc.optimal_finesse(d) == pytest.approx(F[np.argmax(eta)], abs=2e-4)


def test_max_efficiency_values_and_grid_oracle():
    d13, F13, e13 = afc.max_efficiency(0.013)
    assert e13 == pytest.approx(0.43, abs=0.01)
    assert 11 < d13 < 13
    _, _, e7 = afc.max_efficiency(0.07)
    assert e7 == pytest.approx(0.26, abs=0.01)
    d0, _, e0 = afc.max_efficiency(0.0)
    grid = np.linspace(0.1, 50, 20001)
    best = max(afc.efficiency_at(d, 0.0).eta for d in grid)
    assert e0 == pytest.approx(best, rel=1e-6)
    assert 0.53 < e0 < 0.55
    for r, e in ((0.013, e13), (0.07, e7)):
        best = max(afc.efficiency_at(d, r).eta for d in grid)
        assert e >= best * (1 - 1e-9)


def test_stationary_at_unconstrained_optimum():
    d, _, _ = afc.max_efficiency(0.013)
    h = 1e-4 * d
    slope = (afc.efficiency_at(d + h, 0.013).eta - afc.efficiency_at(d - h, 0.013).eta) / (2 * h)
    assert abs(slope) < 1e-6


def test_curve_ordering():
    grid = np.linspace(0.5, 30, 80)
    curves = {r: np.array([row["eta"] for row in afc.efficiency_curve(r, grid)])
              for r in (0.0, 0.004, 0.013, 0.022, 0.07)}
    assert np.all(curves[0.0] > curves[0.013]) and np.all(curves[0.013] > curves[0.07])
    assert np.all(curves[0.004] > curves[0.013]) and np.all(curves[0.013] > curves[0.022])
    row = afc.efficiency_curve(0.013, [4.7])[0]
    assert row["eta"] == pytest.approx(0.336, abs=1e-3)
    with pytest.raises(ValueError):
        afc.efficiency_curve(0.013, [2.0, 1.0])


def test_comb_profile():
    spec = afc.CombSpec(d=4.7, d0=0.06, F=2.0, delta=1e6)
    f = np.arange(4000) * 1e3
    od = afc.comb_profile(spec, f)
    # F = 2: half the period on teeth (grid cells straddling an edge are partial)
    assert np.mean(np.isclose(od, 4.76)) == pytest.approx(0.5, abs=2e-3)
    assert np.mean(od > 0.06 + 4.7 / 2) == pytest.approx(0.5, abs=2e-3)
    assert od.min() == pytest.approx(0.06) and od.max() == pytest.approx(4.76)
    spec = afc.CombSpec(d=4.7, d0=0.0611, F=3.384, delta=1e6)
    assert spec.echo_delay == pytest.approx(1e-6)
    od = afc.comb_profile(spec, np.arange(1000) * 1e3)
    assert od.mean() == pytest.approx(spec.d0 + spec.d / spec.F, abs=1e-12)
    with pytest.raises(ValueError):
        afc.comb_profile(spec, np.arange(10) * 2e5)
    with pytest.raises(ValueError):
        afc.comb_profile(spec, np.array([0.0, 1e3, 3e3]))


@pytest.mark.parametrize("kw", [dict(d=0.0), dict(d0=-0.1), dict(d0=5.0), dict(F=1.0),
                                dict(delta=0.0), dict(shape="gaussian")])
def test_spec_validation(kw):
    base = dict(d=4.7, d0=0.06, F=3.0)
    base.update(kw)
    with pytest.raises(ValueError):
        afc.CombSpec(**base)
