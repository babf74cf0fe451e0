import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holeburn.levels import (MU_B_GHZ_PER_T, FieldPoint, SpinSystem, boltzmann_populations,
                             enumerate_levels, level_index, mixing_ratio, secular_energy,
                             spin_system_from_config, zeeman_splitting)

ND = SpinSystem(g_factor=1.47, hyperfine_A=500.0)


def test_sixteen_levels_for_seven_halves():
    assert len(enumerate_levels(ND, FieldPoint(0.9, 3.0))) == 16


def test_zero_field_zero_hyperfine_all_degenerate():
    sysm = SpinSystem(g_factor=2.7, hyperfine_A=0.0)
    assert all(lv.energy == 0 for lv in enumerate_levels(sysm, FieldPoint(0.0, 1.0)))


def test_free_electron_branches():
    sysm = SpinSystem(g_factor=2.0, hyperfine_A=0.0)
    E = sorted({lv.energy for lv in enumerate_levels(sysm, FieldPoint(1.0, 1.0))})
    assert E == pytest.approx([-13.996, 13.996], rel=1e-12)


def test_degenerate_ordering_is_by_mS_then_mI():
    sysm = SpinSystem(g_factor=1.0, hyperfine_A=0.0, nuclear_spin=1.0)
    lv = enumerate_levels(sysm, FieldPoint(0.0, 1.0))
    assert [(x.m_S, x.m_I) for x in lv] == [(-0.5, -1.0), (-0.5, 0.0), (-0.5, 1.0),
                                            (0.5, -1.0), (0.5, 0.0), (0.5, 1.0)]


def test_zeeman_values():
    assert zeeman_splitting(1.47, 0.37) == pytest.approx(7.612, abs=1e-3)
    assert zeeman_splitting(1.47, 0.9) == pytest.approx(18.52, abs=5e-3)
    assert zeeman_splitting(3.3, 0.0) == 0.0
    with pytest.raises(ValueError):
        zeeman_splitting(1.47, -0.1)


def test_mixing_ratio():
    assert mixing_ratio(7.61, 7.61) == 1.0
    assert mixing_ratio(0.0, 7.61) == 0.0
    assert mixing_ratio(0.5, 7.61) == pytest.approx(4.32e-3, rel=1e-3)
    with pytest.raises(ValueError, match="degenerate"):
        mixing_ratio(0.5, 0.0)


def test_level_index_and_missing_level():
    lv = enumerate_levels(ND, FieldPoint(0.9, 3.0))
    i = level_index(lv, -0.5, 3.5)
    assert (lv[i].m_S, lv[i].m_I) == (-0.5, 3.5)
    with pytest.raises(KeyError):
        level_index(lv, -0.5, 4.5)


@pytest.mark.parametrize("kw", [dict(nuclear_spin=1.3), dict(nuclear_spin=-0.5),
                                dict(optical_lifetime=0.0), dict(isotopic_purity=1.5),
                                dict(electron_spin=1.5), dict(g_factor=math.nan)])
def test_invalid_systems_rejected(kw):
    base = dict(g_factor=1.47, hyperfine_A=500.0)
    base.update(kw)
    with pytest.raises(ValueError):
        SpinSystem(**base)


@pytest.mark.parametrize("B, T", [(-0.1, 3.0), (0.5, 0.0), (0.5, -1.0)])
def test_invalid_field_points(B, T):
    with pytest.raises(ValueError):
        FieldPoint(B, T)


def test_config_units():
    s = spin_system_from_config({"g_factor": 1.47, "hyperfine_A_MHz": 500, "nuclear_spin": 3.5,
                                 "optical_lifetime_us": 225, "isotopic_purity": 0.9})
    assert s.optical_lifetime == pytest.approx(225e-6)
    assert s.hyperfine_A_GHz == pytest.approx(0.5)


spins = st.sampled_from([0.0, 0.5, 1.0, 1.5, 2.5, 3.5, 4.5])


@settings(max_examples=200, deadline=None)
@given(I=spins, g=st.floats(0.1, 5), A=st.floats(-3000, 3000), B=st.floats(0, 3),
       T=st.floats(0.5, 300))
def test_level_count_and_boltzmann(I, g, A, B, T):
    sysm = SpinSystem(g_factor=g, hyperfine_A=A, nuclear_spin=I)
    fp = FieldPoint(B, T)
    lv = enumerate_levels(sysm, fp)
    assert len(lv) == 2 * (2 * I + 1) == sysm.n_levels
    E = np.array([x.energy for x in lv])
    assert np.all(np.diff(E) >= 0)
    # energies are symmetric about zero in the secular model
    assert abs(E.sum()) <= 1e-9 * max(1.0, np.abs(E).max()) * len(E)
    p = boltzmann_populations(lv, fp)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(p) <= 1e-15)
    for x in lv:
        assert x.energy == secular_energy(sysm, B, x.m_S, x.m_I)


def test_bohr_magneton_constant():
    # mu_B / h = 13.996 GHz/T to four significant figures
    assert MU_B_GHZ_PER_T == pytest.approx(9.2740100783e-24 / 6.62607015e-34 * 1e-9, rel=1e-4)
