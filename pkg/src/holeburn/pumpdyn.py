"""
Rate-equation model of the burn / wait / probe sequence.

State vectors hold ground hyperfine populations first, followed by one
effective excited level per pumped ground level. Generators use the column
convention dp/dt = Q p, with Q[j, i] the rate from level i to level j.
Everything is linear and small, so propagation is exact rather than time
stepped: ground-only and free-decay generators through the symmetrised
eigenbasis of the reversible ground network, burns through a matrix
exponential in population-conserving coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from . import NumericalError
from .fitkit import DecayCurve, fit_biexp_global
from .levels import (FieldPoint, HyperfineLevel, SpinSystem, boltzmann_populations,
                     level_index, zeeman_splitting)

OBSERVABLES = ("hole_depth", "hole_area")


@dataclass(frozen=True)
class BranchingTable:
    """Optical decay branching.

    ``p_dmI`` maps a nuclear projection change (-1, 0, +1) to its
    probability; ``mS_split`` maps the final electronic branch (-1/2, +1/2)
    to its probability. The two are independent.
    """

    p_dmI: dict = field(default_factory=lambda: {-1: 0.0, 0: 1.0, 1: 0.0})
    mS_split: dict = field(default_factory=lambda: {-0.5: 0.5, 0.5: 0.5})

    def __post_init__(self):
        if set(self.p_dmI) - {-1, 0, 1}:
            raise ValueError("branching only supports Delta m_I in {-1, 0, +1}")
        if set(self.mS_split) - {-0.5, 0.5}:
            raise ValueError("mS_split keys must be -0.5 and 0.5")
        for table in (self.p_dmI, self.mS_split):
            if any(v < 0 for v in table.values()):
                raise ValueError("branching probabilities must be >= 0")
            if abs(sum(table.values()) - 1.0) > 1e-12:
                raise ValueError("branching probabilities must sum to 1")
        p0 = self.p_dmI.get(0, 0.0)
        if p0 < self.p_dmI.get(1, 0.0) or p0 < self.p_dmI.get(-1, 0.0):
            raise ValueError("optical decay must favour Delta m_I = 0")

    @classmethod
    def symmetric(cls, epsilon: float, mS_split=None) -> "BranchingTable":
        """p(0) = 1 - 2 epsilon, p(+1) = p(-1) = epsilon."""
        kw = {} if mS_split is None else {"mS_split": dict(mS_split)}
        return cls(p_dmI={-1: epsilon, 0: 1.0 - 2 * epsilon, 1: epsilon}, **kw)


@dataclass
class RateMatrix:
    """Generator over ground levels plus optional effective excited levels.

    ``pumped`` lists, for each excited level, the ground index it is pumped
    from; ``Q`` has shape (n_ground + len(pumped),) * 2.
    """

    Q: np.ndarray
    levels: list[HyperfineLevel]
    fp: FieldPoint
    pumped: tuple[int, ...] = ()
    _modes: list | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def n_ground(self) -> int:
        return len(self.levels)

    @property
    def dimension(self) -> int:
        return self.Q.shape[0]

    def thermal(self) -> np.ndarray:
        """Boltzmann ground populations, excited levels empty."""
        p = np.zeros(self.dimension)
        p[:self.n_ground] = boltzmann_populations(self.levels, self.fp)
        return p

    def check(self, atol=1e-9):
        Q = self.Q
        if Q.shape != (self.n_ground + len(self.pumped),) * 2:
            raise ValueError(f"generator shape {Q.shape} does not match "
                             f"{self.n_ground} ground + {len(self.pumped)} excited levels")
        if not np.all(np.isfinite(Q)):
            raise NumericalError("non-finite rate in generator")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise ValueError("negative off-diagonal rate")
        scale = max(np.abs(Q).max(), 1.0)
        if np.abs(Q.sum(axis=0)).max() > atol * scale:
            raise ValueError("generator columns do not sum to zero")

    @property
    def reversible(self) -> bool:
        """Ground-only generators obey detailed balance and are propagated
        through their symmetrised eigenbasis."""
        return not self.pumped

    @property
    def free(self) -> bool:
        """True when excited levels only decay (no pumping), which makes
        the ground block reversible and the excited block diagonal."""
        ng = self.n_ground
        E = self.Q[ng:, ng:]
        return (not np.any(self.Q[ng:, :ng])) and not np.any(E - np.diag(np.diag(E)))

    def _reversible_modes(self):
        """
        Per connected component: thermal weights, sqrt(pi), and the
        symmetrised eigen-decomposition restricted to the complement of the
        exact null vector sqrt(pi). Working in that complement keeps the
        computed modes orthogonal to the equilibrium, so population is
        conserved to rounding however long the propagation.
        """
        if self._modes is not None:
            return self._modes
        n = self.n_ground
        pi_all = boltzmann_populations(self.levels, self.fp)
        Qg = self.Q[:n, :n]
        adj = (Qg + Qg.T) != 0
        seen = np.zeros(n, bool)
        modes = []
        for start in range(n):
            if seen[start]:
                continue
            comp, stack = [], [start]
            seen[start] = True
            while stack:
                i = stack.pop()
                comp.append(i)
                for j in np.flatnonzero(adj[i] & ~seen):
                    seen[j] = True
                    stack.append(j)
            comp = np.array(sorted(comp))
            pi = pi_all[comp] / pi_all[comp].sum()
            sq = np.sqrt(pi)
            if comp.size == 1:
                modes.append((comp, pi, sq, np.zeros(0), np.zeros((1, 0))))
                continue
            Qc = Qg[np.ix_(comp, comp)]
            S = Qc * sq[None, :] / sq[:, None]
            S = 0.5 * (S + S.T)
            u0 = sq / np.linalg.norm(sq)
            # orthonormal basis of the complement of u0
            H, _ = np.linalg.qr(np.column_stack([u0, np.eye(comp.size)]))
            B = H[:, 1:comp.size]
            B -= np.outer(u0, u0 @ B)
            lam, Wv = np.linalg.eigh(B.T @ S @ B)
            modes.append((comp, pi, sq, np.minimum(lam, 0.0), B @ Wv))
        self._modes = modes
        return modes

    def _conservative_expm(self, t: float) -> np.ndarray:
        """
        expm(Q t) computed in coordinates where the largest thermal
        population is replaced by the total population. The generator
        has an exactly zero row there, which scaling and squaring keeps,
        so the total is carried through exactly; the other entries are as
        accurate as a plain expm.
        """
        n = self.dimension
        r = int(np.argmax(self.thermal()))
        T = np.eye(n)
        T[r, :] = 1.0
        Ti = np.eye(n)
        Ti[r, :] = -1.0
        Ti[r, r] = 1.0
        M = T @ self.Q @ Ti
        M[r, :] = 0.0
        return Ti @ expm(M * t) @ T

    def propagator(self, t: float) -> np.ndarray:
        if self.reversible or self.free:
            return np.column_stack([self.propagate(e, t) for e in np.eye(self.dimension)])
        return self._conservative_expm(t)

    def propagate(self, p: np.ndarray, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("cannot propagate backwards")
        p = np.array(p, dtype=float)
        if t == 0:
            return p
        if not (self.reversible or self.free):
            return self._conservative_expm(t) @ p
        ng = self.n_ground
        gamma = -np.diag(self.Q)[ng:]
        e0 = p[ng:]
        out = np.empty_like(p)
        for comp, pi, sq, lam, V in self._reversible_modes():
            pc = p[comp]
            mass = pc.sum()
            y = (pc - mass * pi) / sq
            dev = np.exp(lam * t) * (V.T @ y)
            # source term from each decaying excited level
            for k in range(e0.size):
                if e0[k] == 0.0:
                    continue
                c = self.Q[comp, ng + k] * e0[k]
                m = c.sum()
                mass += m * -math.expm1(-gamma[k] * t) / gamma[k]
                dev += _phi(lam, gamma[k], t) * (V.T @ ((c - m * pi) / sq))
            out[comp] = mass * pi + sq * (V @ dev)
        out[ng:] = e0 * np.exp(-gamma * t)
        return out

    def relaxation_rates(self) -> np.ndarray:
        """Non-zero decay rates (minus eigenvalues), ascending."""
        ev = -np.linalg.eigvals(self.Q).real
        tol = 1e-9 * max(np.abs(self.Q).max(), 1e-300)
        return np.sort(ev[ev > tol])

    def slowest_lifetime(self) -> float:
        r = self.relaxation_rates()
        return math.inf if r.size == 0 else 1.0 / r[0]


@dataclass(frozen=True)
class PumpSchedule:
    """Burn parameters and probe delays.

    ``pumped_levels`` are ground indices resonant with the burn laser;
    ``W`` is the absorption rate out of each of them during the burn.
    """

    burn_duration: float
    W: float
    pumped_levels: tuple[int, ...]
    delay_grid: tuple[float, ...]
    branching: BranchingTable = field(default_factory=BranchingTable)
    probe_observable: str = "hole_area"
    max_stiffness: float = 1e13

    def __post_init__(self):
        if not self.burn_duration > 0:
            raise ValueError("burn_duration must be positive")
        if not (math.isfinite(self.W) and self.W >= 0):
            raise ValueError("pump rate W must be finite and >= 0")
        if not self.pumped_levels:
            raise ValueError("pumped level set must be non-empty")
        if len(set(self.pumped_levels)) != len(self.pumped_levels):
            raise ValueError("pumped levels must be distinct")
        d = np.asarray(self.delay_grid, dtype=float)
        if d.size == 0 or np.any(d < 0) or np.any(np.diff(d) < 0):
            raise ValueError("delays must be non-negative and ascending")
        if self.probe_observable not in OBSERVABLES:
            raise ValueError(f"probe_observable must be one of {OBSERVABLES}")

    def with_burn(self, burn_duration: float) -> "PumpSchedule":
        return replace(self, burn_duration=burn_duration)


def build_generator(levels: list[HyperfineLevel], rates: dict, fp: FieldPoint) -> RateMatrix:
    """
    Ground-state relaxation network.

    R0 couples (m_S, m_I) <-> (-m_S, m_I); R_plus couples (-1/2, m_I) <->
    (+1/2, m_I + 1) and R_minus couples (-1/2, m_I) <-> (+1/2, m_I - 1), i.e.
    the sign is the nuclear change accompanying the upward electronic flip.
    For each pair the downhill rate is the given rate and the uphill rate is
    that times exp(-dE/kT). Pure nuclear (Delta m_S = 0) paths are absent
    and edge m_I states simply lack one neighbour.
    """
    R = {0: float(rates.get("R0", 0.0)), 1: float(rates.get("R_plus", 0.0)),
         -1: float(rates.get("R_minus", 0.0))}
    for k, v in R.items():
        if not (math.isfinite(v) and v >= 0):
            raise NumericalError(f"relaxation rate for Delta m_I={k} must be finite and >= 0")
    n = len(levels)
    index = {(lv.m_S, lv.m_I): i for i, lv in enumerate(levels)}
    if len(index) != n:
        raise ValueError("duplicate levels")
    Q = np.zeros((n, n))
    kT = fp.kT_GHz
    for (m_S, m_I), lo in index.items():
        if m_S != -0.5:
            continue
        for dm, rate in R.items():
            hi = index.get((0.5, m_I + dm))
            if hi is None or rate == 0.0:
                continue
            Ea, Eb = levels[lo].energy, levels[hi].energy
            down, up = (hi, lo) if Eb >= Ea else (lo, hi)  # (upper, lower) in energy
            b = math.exp(-abs(Eb - Ea) / kT)
            Q[up, down] += rate          # upper -> lower
            Q[down, up] += rate * b      # lower -> upper
    Q -= np.diag(Q.sum(axis=0))
    gen = RateMatrix(Q=Q, levels=list(levels), fp=fp)
    gen.check()
    return gen


def optical_generator(gen: RateMatrix, sys: SpinSystem, sched: PumpSchedule,
                      W: float | None = None) -> RateMatrix:
    """
    Extend a ground generator with one effective excited level per pumped
    level: absorption at rate W, spontaneous decay at 1/optical_lifetime
    distributed by the branching table. Branch weight that would leave the
    m_I ladder is renormalised over the remaining targets.
    """
    if gen.pumped:
        raise ValueError("generator already carries excited levels")
    W = sched.W if W is None else W
    ng = gen.n_ground
    for i in sched.pumped_levels:
        if not 0 <= i < ng:
            raise ValueError(f"pumped level index {i} outside 0..{ng - 1}")
    npump = len(sched.pumped_levels)
    Q = np.zeros((ng + npump, ng + npump))
    Q[:ng, :ng] = gen.Q
    gamma = 1.0 / sys.optical_lifetime
    br = sched.branching
    for k, g in enumerate(sched.pumped_levels):
        e = ng + k
        Q[e, g] += W
        Q[g, g] -= W
        m_I0 = gen.levels[g].m_I
        targets = []
        for m_S, ps in br.mS_split.items():
            for dm, pm in br.p_dmI.items():
                try:
                    j = level_index(gen.levels, m_S, m_I0 + dm)
                except KeyError:
                    continue
                if ps * pm > 0:
                    targets.append((j, ps * pm))
        norm = sum(p for _, p in targets)
        for j, p in targets:
            Q[j, e] += gamma * p / norm
        Q[e, e] -= gamma
    out = RateMatrix(Q=Q, levels=gen.levels, fp=gen.fp, pumped=tuple(sched.pumped_levels))
    out.check()
    return out


def _phi(lam: np.ndarray, gamma: float, t: float) -> np.ndarray:
    """Integral of exp(lam (t - s)) exp(-gamma s) over s in [0, t], evaluated
    without overflow for either sign of lam + gamma."""
    x = lam + gamma
    out = np.empty_like(lam)
    pos, neg, zero = x > 0, x < 0, x == 0
    out[pos] = np.exp(lam[pos] * t) * -np.expm1(-x[pos] * t) / x[pos]
    out[neg] = math.exp(-gamma * t) * np.expm1(x[neg] * t) / x[neg]
    out[zero] = t * np.exp(lam[zero] * t)
    return out


def _stiffness(Q: np.ndarray) -> float:
    a = np.abs(Q[~np.eye(Q.shape[0], dtype=bool)])
    a = a[a > 0]
    return 0.0 if a.size == 0 else float(a.max() / a.min())


def simulate_burn(gen: RateMatrix, sys: SpinSystem, sched: PumpSchedule,
                  initial: np.ndarray | None = None) -> np.ndarray:
    """
    Populations after ``sched.burn_duration`` of optical pumping.

    Starts from thermal equilibrium unless ``initial`` is given. The result
    includes the effective excited levels, so it should be propagated
    further with ``optical_generator(gen, sys, sched, W=0)``.
    """
    full = optical_generator(gen, sys, sched)
    s = _stiffness(full.Q)
    if s > sched.max_stiffness:
        raise NumericalError(f"rate ratio {s:.3g} exceeds the stiffness limit "
                             f"{sched.max_stiffness:.3g}; reduce W or check rates")
    p0 = full.thermal() if initial is None else np.asarray(initial, dtype=float)
    if p0.shape != (full.dimension,):
        raise ValueError("initial population has the wrong dimension")
    p = full.propagate(p0, sched.burn_duration)
    if not np.all(np.isfinite(p)):
        raise NumericalError("propagation produced non-finite populations")
    return p


def hole_amplitude(p: np.ndarray, thermal: np.ndarray, pumped) -> float:
    idx = list(pumped)
    return max(float(np.sum(thermal[idx] - p[idx])), 0.0)


def hole_decay(populations: np.ndarray, gen: RateMatrix, sched: PumpSchedule,
               metadata: dict | None = None) -> DecayCurve:
    """
    Free evolution after the burn, sampling the hole at every delay.

    The amplitude is the population missing from the pumped set relative to
    thermal equilibrium, clipped at zero. ``gen`` is either a bare ground
    generator (populations over ground levels only) or one produced by
    ``optical_generator`` with W = 0.
    """
    p = np.asarray(populations, dtype=float)
    if p.shape != (gen.dimension,):
        raise ValueError(f"population vector of length {p.size} does not match generator "
                         f"dimension {gen.dimension}")
    thermal = gen.thermal()
    delays = np.asarray(sched.delay_grid, dtype=float)
    amps = np.empty_like(delays)
    t_prev, cur = 0.0, p
    for k, t in enumerate(delays):
        cur = gen.propagate(cur, t - t_prev)
        t_prev = t
        amps[k] = hole_amplitude(cur, thermal, sched.pumped_levels)
    meta = {"burn_duration": sched.burn_duration, "B": gen.fp.B, "T": gen.fp.T}
    meta.update(metadata or {})
    return DecayCurve(delays, amps, metadata=meta)


def burn_and_probe(gen: RateMatrix, sys: SpinSystem, sched: PumpSchedule) -> DecayCurve:
    p = simulate_burn(gen, sys, sched)
    free = optical_generator(gen, sys, sched, W=0.0)
    return hole_decay(p, free, sched)


@dataclass
class AmplitudeScan:
    burn_durations: np.ndarray
    curves: list[DecayCurve]
    fit: object

    @property
    def x_f(self) -> np.ndarray:
        return self.fit.x_f

    @property
    def x_s(self) -> np.ndarray:
        return self.fit.x_s

    def rows(self) -> list[dict]:
        return [{"T_burn_s": float(T), "x_f": float(xf), "x_s": float(xs),
                 "d_f": float(df), "d_s": float(ds)}
                for T, xf, xs, df, ds in zip(self.burn_durations, self.x_f, self.x_s,
                                             self.fit.d_f, self.fit.d_s)]

    def crossing(self) -> float | None:
        """Burn duration where x_f = x_s, by log-linear interpolation."""
        diff = self.x_s - self.x_f
        T = self.burn_durations
        for k in range(len(T) - 1):
            if diff[k] <= 0 < diff[k + 1] or diff[k] < 0 <= diff[k + 1]:
                a, b = math.log(T[k]), math.log(T[k + 1])
                f = -diff[k] / (diff[k + 1] - diff[k])
                return math.exp(a + f * (b - a))
        return None


def amplitude_scan(gen: RateMatrix, sys: SpinSystem, sched: PumpSchedule, burn_durations,
                   classes=None) -> AmplitudeScan:
    """
    Simulate one decay curve per burn duration and fit the set with shared
    time constants.

    ``classes`` optionally lists several pumped-level sets (spectral classes
    of ions resonant through different transitions); their curves are
    averaged with equal weight.
    """
    burn_durations = np.asarray(burn_durations, dtype=float)
    if burn_durations.size < 2:
        raise ValueError("amplitude scan needs at least two burn durations")
    sets = [tuple(sched.pumped_levels)] if classes is None else [tuple(c) for c in classes]
    curves = []
    for T in burn_durations:
        acc = None
        for s in sets:
            c = burn_and_probe(gen, sys, replace(sched, burn_duration=float(T), pumped_levels=s))
            acc = c.amplitude if acc is None else acc + c.amplitude
        curves.append(DecayCurve(c.t, acc / len(sets), metadata=dict(c.metadata)))
    fit = fit_biexp_global(curves)
    return AmplitudeScan(burn_durations=burn_durations, curves=curves, fit=fit)


def calibrate_rates(levels, fp: FieldPoint, sys: SpinSystem, sched: PumpSchedule,
                    burn_durations, T_fast: float, T_slow: float, tol=1e-4, max_iter=60,
                    classes=None, initial=None) -> dict:
    """
    Find R0 and R_plus = R_minus such that the global bi-exponential fit of
    simulated hole decays returns (T_fast, T_slow).

    Fixed-point iteration: each rate is rescaled by the ratio of fitted to
    target lifetime. Also reports the hyperfine constant (MHz) implied by
    R_plus / R0 = (A / dE_g)^2.
    """
    R0, Rp = 1.0 / T_fast, 1.0 / T_slow
    if initial is not None:
        R0, Rp = initial
    for it in range(max_iter):
        gen = build_generator(levels, {"R0": R0, "R_plus": Rp, "R_minus": Rp}, fp)
        scan = amplitude_scan(gen, sys, sched, burn_durations, classes=classes)
        f = scan.fit
        if not math.isfinite(f.T_s):
            raise NumericalError("slow component vanished during calibration")
        ef, es = f.T_f / T_fast, f.T_s / T_slow
        if abs(ef - 1) < tol and abs(es - 1) < tol:
            break
        R0 *= ef
        Rp *= es
    else:
        raise NumericalError(f"rate calibration did not converge: fitted "
                             f"T_f={f.T_f:.4g} s, T_s={f.T_s:.4g} s")
    dE = zeeman_splitting(sys.g_factor, fp.B)
    return {"R0": R0, "R_plus": Rp, "R_minus": Rp, "T_f_fit": f.T_f, "T_s_fit": f.T_s,
            "iterations": it + 1, "implied_A_MHz": 1e3 * dE * math.sqrt(Rp / R0)}


def calibrate_crossing(levels, fp: FieldPoint, sys: SpinSystem, sched: PumpSchedule,
                       burn_durations, T_fast: float, T_slow: float, target_crossing: float,
                       eps_bounds=(1e-3, 1.0 / 3.0), xtol=1e-3, classes=None) -> dict:
    """
    Tune the symmetric branching epsilon so that x_f = x_s at
    ``target_crossing``, recalibrating the rates at every step.

    A larger epsilon moves population into the slow traps sooner, so the
    crossing burn duration decreases with epsilon; plain bisection is used.
    Returns the final rates, epsilon, the scan and the crossing found.
    """
    def run(eps, warm):
        sc = replace(sched, branching=BranchingTable.symmetric(eps, sched.branching.mS_split))
        rates = calibrate_rates(levels, fp, sys, sc, burn_durations, T_fast, T_slow,
                                classes=classes, initial=warm)
        gen = build_generator(levels, rates, fp)
        scan = amplitude_scan(gen, sys, sc, burn_durations, classes=classes)
        return rates, scan, sc

    lo, hi = eps_bounds
    warm = None
    result = None
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        rates, scan, sc = run(mid, warm)
        warm = (rates["R0"], rates["R_plus"])
        cross = scan.crossing()
        if cross is None:
            # no crossing: x_s never reaches x_f (eps too small) or always above
            above = bool(scan.x_s[0] > scan.x_f[0])
            cross = 0.0 if above else math.inf
        result = (mid, rates, scan, sc, cross)
        if cross > target_crossing:
            lo = mid
        else:
            hi = mid
    eps, rates, scan, sc, cross = result
    return {"epsilon": eps, "rates": rates, "scan": scan, "schedule": sc,
            "crossing": None if not math.isfinite(cross) or cross == 0.0 else cross}
