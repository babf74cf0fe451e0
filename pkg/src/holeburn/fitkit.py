"""
Global bi-exponential and power-law fitting.

The bi-exponential model shares two time constants across a set of decay
curves while every curve keeps its own pair of non-negative amplitudes:

    y_k(t) = d_f,k exp(-t/T_f) + d_s,k exp(-t/T_s)

For fixed (T_f, T_s) the amplitudes are a tiny non-negative least-squares
problem per curve, so the outer search only runs over the two time
constants (variable projection).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import NumericalError


class DegenerateFitError(NumericalError):
    """The two exponentials cannot be told apart."""


@dataclass
class DecayCurve:
    """Hole amplitude versus probe delay.

    ``sigma`` is optional; without it all points carry unit weight.
    ``metadata`` holds burn_duration (s), B (T) and T (K) when known.
    """

    t: np.ndarray
    amplitude: np.ndarray
    sigma: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        if self.t.shape != self.amplitude.shape or self.t.ndim != 1:
            raise ValueError("t and amplitude must be 1-D arrays of equal length")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
            if self.sigma.shape != self.t.shape:
                raise ValueError("sigma must match t")
            if np.any(self.sigma <= 0):
                raise ValueError("sigma must be positive")
        if np.any(np.diff(self.t) < 0) or (self.t.size and self.t[0] < 0):
            raise ValueError("delays must be non-negative and ascending")

    @property
    def points(self) -> list[tuple]:
        s = self.sigma if self.sigma is not None else [None] * len(self.t)
        return list(zip(self.t.tolist(), self.amplitude.tolist(), list(s)))

    @property
    def weights(self) -> np.ndarray:
        return np.ones_like(self.t) if self.sigma is None else 1.0 / self.sigma


@dataclass
class BiexpFit:
    T_f: float
    T_s: float
    d_f: np.ndarray
    d_s: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    objective: float
    flags: tuple[str, ...] = ()

    @property
    def x_f(self) -> np.ndarray:
        tot = self.d_f + self.d_s
        return np.divide(self.d_f, tot, out=np.full_like(tot, np.nan), where=tot > 0)

    @property
    def x_s(self) -> np.ndarray:
        tot = self.d_f + self.d_s
        return np.divide(self.d_s, tot, out=np.full_like(tot, np.nan), where=tot > 0)

    @property
    def sigma_T_f(self) -> float:
        return float(math.sqrt(max(self.covariance[0, 0], 0.0)))

    @property
    def sigma_T_s(self) -> float:
        return float(math.sqrt(max(self.covariance[1, 1], 0.0)))

    def to_dict(self) -> dict:
        return {
            "model": "biexp_global",
            "T_f_s": self.T_f,
            "T_s_s": self.T_s,
            "sigma_T_f_s": self.sigma_T_f,
            "sigma_T_s_s": self.sigma_T_s,
            "d_f": self.d_f.tolist(),
            "d_s": self.d_s.tolist(),
            "x_f": self.x_f.tolist(),
            "x_s": self.x_s.tolist(),
            "covariance": self.covariance.tolist(),
            "residual_norm": self.residual_norm,
            "objective": self.objective,
            "flags": list(self.flags),
        }


@dataclass
class PowerLawFit:
    """T = prefactor * B**(-exponent)."""

    exponent: float
    prefactor: float
    exponent_sigma: float
    residual_norm: float = 0.0

    def to_dict(self) -> dict:
        return {
            "model": "power_law",
            "exponent": self.exponent,
            "exponent_sigma": self.exponent_sigma,
            "prefactor": self.prefactor,
            "residual_norm": self.residual_norm,
        }


def nnls2(a1, a2, y):
    """
    Non-negative least squares with two columns, solved by enumerating the
    active sets. Returns (c1, c2, rss).
    """
    g11, g22, g12 = a1 @ a1, a2 @ a2, a1 @ a2
    b1, b2 = a1 @ y, a2 @ y
    yy = y @ y
    det = g11 * g22 - g12 * g12
    best = (0.0, 0.0, yy)
    if det > 1e-14 * g11 * g22:
        c1 = (g22 * b1 - g12 * b2) / det
        c2 = (g11 * b2 - g12 * b1) / det
        if c1 >= 0 and c2 >= 0:
            return c1, c2, max(yy - c1 * b1 - c2 * b2, 0.0)
    if g11 > 0 and b1 > 0:
        c1 = b1 / g11
        rss = yy - c1 * b1
        if rss < best[2]:
            best = (c1, 0.0, rss)
    if g22 > 0 and b2 > 0:
        c2 = b2 / g22
        rss = yy - c2 * b2
        if rss < best[2]:
            best = (0.0, c2, rss)
    return best[0], best[1], max(best[2], 0.0)


def _unconstrained2(a1, a2, y):
    A = np.column_stack([a1, a2])
    c, *_ = np.linalg.lstsq(A, y, rcond=None)
    return c


class _Problem:
    """Weighted data of a curve set, flattened for the projected residual."""

    def __init__(self, curves):
        if not curves:
            raise ValueError("need at least one decay curve")
        for k, c in enumerate(curves):
            if len(c.t) < 4:
                raise ValueError(f"curve {k} has fewer than 4 points")
        self.curves = curves
        self.t = [c.t for c in curves]
        self.w = [c.weights for c in curves]
        self.wy = [c.weights * c.amplitude for c in curves]
        t_all = np.concatenate(self.t)
        pos = np.unique(t_all)
        steps = np.diff(pos)
        self.t_span = float(pos[-1] - pos[0])
        if self.t_span <= 0:
            raise ValueError("decay curves must span a non-zero delay range")
        self.t_step = float(steps[steps > 0].min())
        self.log_lo = math.log(self.t_step / 100.0)
        self.log_hi = math.log(self.t_span * 100.0)

    def columns(self, k, T):
        return self.w[k] * np.exp(-self.t[k] / T)

    def solve(self, T_f, T_s):
        """Per-curve NNLS amplitudes, stacked residual and RSS."""
        amps, res, rss = [], [], 0.0
        for k in range(len(self.curves)):
            a1, a2 = self.columns(k, T_f), self.columns(k, T_s)
            c1, c2, r = nnls2(a1, a2, self.wy[k])
            amps.append((c1, c2))
            res.append(self.wy[k] - c1 * a1 - c2 * a2)
            rss += r
        return np.array(amps), np.concatenate(res), rss

    def rss(self, T_f, T_s):
        return self.solve(T_f, T_s)[2]

    def mono(self):
        """Best single shared exponential: log grid, then least-squares polish."""
        def resid(logT):
            T = math.exp(logT)
            out = []
            for k in range(len(self.curves)):
                a = self.columns(k, T)
                c = max(a @ self.wy[k], 0.0) / (a @ a)
                out.append(self.wy[k] - c * a)
            return np.concatenate(out)

        grid = np.linspace(self.log_lo, self.log_hi, 200)
        vals = [resid(g) @ resid(g) for g in grid]
        x0 = grid[int(np.argmin(vals))]
        r = optimize.least_squares(lambda x: resid(x[0]), [x0],
                                   bounds=([self.log_lo], [self.log_hi]),
                                   ftol=1e-15, xtol=1e-15, gtol=1e-15, diff_step=1e-7)
        rr = resid(r.x[0])
        return math.exp(r.x[0]), float(rr @ rr)


def _start_points(prob, n_grid, n_starts):
    grid = np.linspace(prob.log_lo, prob.log_hi, n_grid)
    cand = []
    for i in range(n_grid):
        for j in range(i + 1, n_grid):
            cand.append((prob.rss(math.exp(grid[i]), math.exp(grid[j])), grid[j], grid[i]))
    # sort by rss, then by smaller T_s
    cand.sort(key=lambda c: (c[0], c[1]))
    return [(c[2], c[1]) for c in cand[:n_starts]]


def _refine(prob, x0):
    def fun(x):
        return prob.solve(math.exp(x[0]), math.exp(x[1]))[1]

    lo, hi = prob.log_lo, prob.log_hi
    x0 = np.clip(np.asarray(x0, dtype=float), lo + 1e-9, hi - 1e-9)
    r = optimize.least_squares(fun, x0, bounds=([lo, lo], [hi, hi]), method="trf",
                               x_scale=1.0, ftol=1e-15, xtol=1e-15, gtol=1e-15,
                               max_nfev=2000, diff_step=1e-7)
    return r.x


def _covariance(prob, T_f, T_s, amps, rss, weighted):
    n = sum(len(t) for t in prob.t)
    ncur = len(prob.curves)
    p = 2 + 2 * ncur
    J = np.zeros((n, p))
    row = 0
    for k in range(ncur):
        t, w = prob.t[k], prob.w[k]
        m = len(t)
        ef, es = np.exp(-t / T_f), np.exp(-t / T_s)
        J[row:row + m, 0] = w * amps[k, 0] * ef * t / T_f ** 2
        J[row:row + m, 1] = w * amps[k, 1] * es * t / T_s ** 2
        J[row:row + m, 2 + 2 * k] = w * ef
        J[row:row + m, 3 + 2 * k] = w * es
        row += m
    cov = np.linalg.pinv(J.T @ J)
    if not weighted:
        dof = max(n - p, 1)
        cov = cov * (rss / dof)
    return cov


def fit_biexp_global(curves, n_grid=16, n_starts=6, collision_tol=1e-3, amp_tol=1e-6):
    """
    Fit two shared time constants and per-curve non-negative amplitudes.

    Parameters
    ----------
    curves : list of DecayCurve
    n_grid : int
        Log-spaced start grid size per axis for the multi-start search.
    n_starts : int
        Number of best grid pairs refined by least squares.
    collision_tol : float
        Relative T_s/T_f - 1 below which the fit is declared degenerate.
    amp_tol : float
        A component whose amplitudes are all below ``amp_tol`` times the
        largest total amplitude counts as absent.

    Returns
    -------
    BiexpFit
        With T_f < T_s. When the data hold only one exponential, T_s is NaN,
        d_s is zero and ``flags`` contains ``"slow_unidentifiable"``.

    Raises
    ------
    DegenerateFitError
        If both components are needed but their time constants collide.
    """
    prob = _Problem(list(curves))
    weighted = any(c.sigma is not None for c in prob.curves)

    best = None
    for x0 in _start_points(prob, n_grid, n_starts):
        x = _refine(prob, x0)
        T = sorted(math.exp(v) for v in x)
        rss = prob.rss(T[0], T[1])
        key = (rss, T[1])
        if best is None or key < best[0]:
            best = (key, T)
    (rss, _), (T_f, T_s) = best
    amps, res, rss = prob.solve(T_f, T_s)

    total = float((amps[:, 0] + amps[:, 1]).max()) if amps.size else 0.0
    if total <= 0:
        raise DegenerateFitError("all fitted amplitudes are zero; no decay to fit")
    fast_absent = bool(np.all(amps[:, 0] <= amp_tol * total))
    slow_absent = bool(np.all(amps[:, 1] <= amp_tol * total))
    collided = (T_s / T_f - 1.0) < collision_tol

    T_mono, rss_mono = prob.mono()
    mono_as_good = rss_mono <= rss * (1 + 1e-9) + 1e-24 * sum(v @ v for v in prob.wy)
    if fast_absent or slow_absent or (collided and mono_as_good):
        msg = "second exponential not supported by the data; slow time constant unidentifiable"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        d_f = []
        for k in range(len(prob.curves)):
            a = prob.columns(k, T_mono)
            d_f.append(max(a @ prob.wy[k], 0.0) / (a @ a))
        d_f = np.array(d_f)
        cov = np.full((2, 2), np.nan)
        cov[0, 0] = _covariance(prob, T_mono, T_mono, np.column_stack([d_f, 0 * d_f]),
                                rss_mono, weighted)[0, 0]
        return BiexpFit(T_f=T_mono, T_s=math.nan, d_f=d_f, d_s=np.zeros_like(d_f),
                        covariance=cov, residual_norm=math.sqrt(rss_mono),
                        objective=rss_mono, flags=("slow_unidentifiable",))
    if collided:
        raise DegenerateFitError(
            f"time constants collide: T_f={T_f:.6g} s and T_s={T_s:.6g} s "
            f"differ by less than {collision_tol:g} relative")

    flags = []
    for k in range(len(prob.curves)):
        c = _unconstrained2(prob.columns(k, T_f), prob.columns(k, T_s), prob.wy[k])
        if np.any(c < 0):
            flags.append("amplitude_clipped")
            break
    if math.log(T_s) > prob.log_hi - 1e-6:
        flags.append("T_s_at_upper_bound")
    if math.log(T_f) < prob.log_lo + 1e-6:
        flags.append("T_f_at_lower_bound")

    cov = _covariance(prob, T_f, T_s, amps, rss, weighted)
    return BiexpFit(T_f=T_f, T_s=T_s, d_f=amps[:, 0].copy(), d_s=amps[:, 1].copy(),
                    covariance=cov, residual_norm=math.sqrt(rss), objective=rss,
                    flags=tuple(flags))


def biexp_objective(curves, T_f, T_s):
    """Weighted RSS at fixed time constants with NNLS amplitudes."""
    return _Problem(list(curves)).rss(T_f, T_s)


def fit_power_law(points):
    """
    Linear regression of log T on log B.

    ``points`` is a sequence of (B, T) pairs. The exponent is reported with
    the sign convention T ~ B**(-a), so decaying lifetimes give a > 0.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (B, T) points")
    if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
        raise ValueError("power-law fit needs strictly positive, finite B and T")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(x) == 0:
        raise ValueError("all field values are identical")
    r = stats.linregress(x, y)
    resid = y - (r.intercept + r.slope * x)
    return PowerLawFit(exponent=-float(r.slope), prefactor=float(math.exp(r.intercept)),
                       exponent_sigma=float(abs(r.stderr)),
                       residual_norm=float(np.linalg.norm(resid)))


def _bootstrap_biexp(curves, resamples, rng):
    base = fit_biexp_global(curves)
    prob = _Problem(list(curves))
    x0 = (math.log(base.T_f), math.log(base.T_s))
    fitted, resid = [], []
    for k, c in enumerate(curves):
        model = base.d_f[k] * np.exp(-c.t / base.T_f) + base.d_s[k] * np.exp(-c.t / base.T_s)
        fitted.append(model)
        resid.append((c.amplitude - model) * c.weights)
    pool = np.concatenate(resid)
    samples = []
    for _ in range(resamples):
        new = []
        for k, c in enumerate(curves):
            r = rng.choice(pool, size=len(c.t), replace=True) / c.weights
            new.append(DecayCurve(c.t, fitted[k] + r, c.sigma, c.metadata))
        p = _Problem(new)
        x = _refine(p, x0)
        T = sorted(math.exp(v) for v in x)
        amps, _, _ = p.solve(T[0], T[1])
        samples.append([T[0], T[1], *amps[:, 0], *amps[:, 1]])
    samples = np.array(samples)
    sig = samples.std(axis=0, ddof=1)
    n = len(curves)
    return {"T_f": float(sig[0]), "T_s": float(sig[1]),
            "d_f": sig[2:2 + n].tolist(), "d_s": sig[2 + n:].tolist()}


def _bootstrap_power_law(points, resamples, rng):
    pts = np.asarray(points, dtype=float)
    base = fit_power_law(pts)
    x = np.log(pts[:, 0])
    model = math.log(base.prefactor) - base.exponent * x
    resid = np.log(pts[:, 1]) - model
    out = []
    for _ in range(resamples):
        y = model + rng.choice(resid, size=len(resid), replace=True)
        f = fit_power_law(np.column_stack([pts[:, 0], np.exp(y)]))
        out.append([f.exponent, f.prefactor])
    out = np.array(out)
    return {"exponent": float(out[:, 0].std(ddof=1)), "prefactor": float(out[:, 1].std(ddof=1))}


def bootstrap_uncertainty(data, resamples=500, seed=0, model="biexp"):
    """
    Residual-resampling bootstrap of a fit.

    ``data`` is a list of DecayCurve for ``model="biexp"`` or a sequence of
    (B, T) points for ``model="power_law"``. Returns a dict of parameter
    standard deviations. The same seed gives the same output.
    """
    if resamples < 100:
        raise ValueError("use at least 100 bootstrap resamples")
    rng = np.random.default_rng(seed)
    if model == "biexp":
        return _bootstrap_biexp(list(data), resamples, rng)
    if model == "power_law":
        return _bootstrap_power_law(data, resamples, rng)
    raise ValueError(f"unknown model {model!r}")
