"""
Ground-state hyperfine structure of a Kramers doublet in the secular
(high-field) approximation.

Energies are in GHz throughout; the hyperfine constant is configured in MHz
and converted on use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# Bohr magneton and Boltzmann constant in frequency units.
MU_B_GHZ_PER_T = 13.996
K_B_GHZ_PER_K = 20.836619


def _is_half_integer(x: float) -> bool:
    return abs(2 * x - round(2 * x)) < 1e-12


@dataclass(frozen=True)
class SpinSystem:
    """Material constants of one isotope in one crystal site.

    hyperfine_A is in MHz and optical_lifetime in seconds. There is no
    default for g_factor or hyperfine_A; both are material inputs.
    """

    g_factor: float
    hyperfine_A: float
    nuclear_spin: float = 3.5
    optical_lifetime: float = 225e-6
    isotopic_purity: float = 1.0
    electron_spin: float = 0.5

    def __post_init__(self):
        if self.electron_spin != 0.5:
            raise ValueError("only effective spin 1/2 doublets are supported")
        if self.nuclear_spin < 0 or not _is_half_integer(self.nuclear_spin):
            raise ValueError(f"nuclear_spin must be a non-negative multiple of 1/2, got {self.nuclear_spin}")
        if not self.optical_lifetime > 0:
            raise ValueError("optical_lifetime must be positive")
        if not 0.0 <= self.isotopic_purity <= 1.0:
            raise ValueError("isotopic_purity must lie in [0, 1]")
        if not math.isfinite(self.g_factor) or not math.isfinite(self.hyperfine_A):
            raise ValueError("g_factor and hyperfine_A must be finite")

    @property
    def n_nuclear(self) -> int:
        return int(round(2 * self.nuclear_spin)) + 1

    @property
    def n_levels(self) -> int:
        return 2 * self.n_nuclear

    @property
    def hyperfine_A_GHz(self) -> float:
        return self.hyperfine_A * 1e-3

    def m_I_values(self) -> list[float]:
        I = Fraction(self.nuclear_spin).limit_denominator(2)
        return [float(-I + k) for k in range(self.n_nuclear)]


@dataclass(frozen=True)
class FieldPoint:
    """Applied field B (tesla) and temperature T (kelvin)."""

    B: float
    T: float

    def __post_init__(self):
        if not self.B >= 0:
            raise ValueError(f"field must be non-negative, got B={self.B}")
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got T={self.T}")

    @property
    def kT_GHz(self) -> float:
        return K_B_GHZ_PER_K * self.T


@dataclass(frozen=True)
class HyperfineLevel:
    m_S: float
    m_I: float
    energy: float  # GHz, relative to the manifold centre


def secular_energy(sys: SpinSystem, B: float, m_S: float, m_I: float) -> float:
    """E = g mu_B B m_S + A m_S m_I, in GHz."""
    return sys.g_factor * MU_B_GHZ_PER_T * B * m_S + sys.hyperfine_A_GHz * m_S * m_I


def enumerate_levels(sys: SpinSystem, fp: FieldPoint) -> list[HyperfineLevel]:
    """
    List the (2S+1)(2I+1) product states |m_S>|m_I> with secular energies.

    Levels are sorted by energy; exact ties are broken by m_S, then m_I, so
    the ordering is reproducible at B = 0.
    """
    levels = [
        HyperfineLevel(m_S, m_I, secular_energy(sys, fp.B, m_S, m_I))
        for m_S in (-0.5, 0.5)
        for m_I in sys.m_I_values()
    ]
    levels.sort(key=lambda lv: (lv.energy, lv.m_S, lv.m_I))
    return levels


def level_index(levels: list[HyperfineLevel], m_S: float, m_I: float) -> int:
    for i, lv in enumerate(levels):
        if lv.m_S == m_S and lv.m_I == m_I:
            return i
    raise KeyError(f"no level with m_S={m_S}, m_I={m_I}")


def zeeman_splitting(g: float, B: float) -> float:
    """Electronic ground-state splitting g mu_B B in GHz."""
    if B < 0:
        raise ValueError("field must be non-negative")
    return g * MU_B_GHZ_PER_T * B


def mixing_ratio(A: float, delta_Eg: float) -> float:
    """
    Perturbative suppression (A / dE_g)^2 of nuclear-flip relaxation.

    A and delta_Eg must share units.
    """
    if delta_Eg == 0:
        raise ValueError("degenerate Zeeman splitting: perturbative mixing is undefined")
    if delta_Eg < 0:
        raise ValueError("Zeeman splitting must be positive")
    return (A / delta_Eg) ** 2


def boltzmann_populations(levels: list[HyperfineLevel], fp: FieldPoint) -> np.ndarray:
    E = np.array([lv.energy for lv in levels])
    w = np.exp(-(E - E.min()) / fp.kT_GHz)
    return w / w.sum()


def spin_system_from_config(cfg: dict) -> SpinSystem:
    """Build a SpinSystem from a material config mapping.

    Keys: g_factor, hyperfine_A_MHz, nuclear_spin, optical_lifetime_us,
    isotopic_purity.
    """
    return SpinSystem(
        g_factor=float(cfg["g_factor"]),
        hyperfine_A=float(cfg["hyperfine_A_MHz"]),
        nuclear_spin=float(cfg["nuclear_spin"]),
        optical_lifetime=float(cfg["optical_lifetime_us"]) * 1e-6,
        isotopic_purity=float(cfg["isotopic_purity"]),
    )
