"""Reduced generation-recombination kinetics and the optimal-rate analysis.

The mean density obeys dn/dt = -w(g) (n^2 - n_th(g)^2) along g(t) = g_i - v t.
Scaled distances from the critical point are x = beta (1 - g).  Rates are in
J/hbar, so with the asymptotic forms w ~ 8 pi alpha / beta and
n_th ~ sqrt(x / 2 pi) exp(-x) / beta the onset condition w n_th / beta = v reads
v_scaled = beta^3 v / (4 sqrt(2 pi) alpha) = sqrt(x0) exp(-x0).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .chain import (
    ASYMPTOTIC_MIN_X,
    AccuracyWarning,
    ModelParams,
    MomentumGrid,
    thermal_density_asymptotic,
    thermal_density_exact,
)
from .rates import C_D, diffusion_closed, recombination_rate_asymptotic, recombination_rate_exact
from .schedule import DensityTrajectory, Schedule

log = logging.getLogger(__name__)

__all__ = [
    "CrossoverReport",
    "NoRootError",
    "OptimumReport",
    "RateSource",
    "ScaledCurve",
    "crossover_mu",
    "glauber_time",
    "integrate_density",
    "kz_comparison",
    "log_law_density",
    "max_onset_rate",
    "optimum",
    "rate_source",
    "scaled_curves",
    "scaled_x_star",
    "solve_crossover",
    "solve_g0",
    "v_from_scaled",
]


class NoRootError(ValueError):
    """A bracketing solve found no sign change."""


class RateSource:
    """w(g) and n_th(g) from either exact band sums or the asymptotic closed forms.

    The exact source evaluates band sums directly; ``tabulate`` builds a cubic
    spline of log w and log n_th on a g-mesh for use inside ODE right-hand sides.
    """

    def __init__(self, kind: str, params: ModelParams, grid: MomentumGrid | None = None):
        if kind not in ("exact", "asymptotic"):
            raise ValueError(f"rate source must be 'exact' or 'asymptotic', got {kind!r}")
        self.kind = kind
        self.params = params
        self.grid = grid or params.grid
        self._spline = None

    def w(self, g) -> float:
        if self._spline is not None and self._in_mesh(g):
            return float(np.exp(self._spline[0](g)))
        if self.kind == "exact":
            return recombination_rate_exact(g, self.params, self.grid)
        return recombination_rate_asymptotic(g, self.params, warn=False)

    def n_th(self, g) -> float:
        if self._spline is not None and self._in_mesh(g):
            return float(np.exp(self._spline[1](g)))
        if self.kind == "exact":
            return thermal_density_exact(g, self.params.beta, self.grid)
        return thermal_density_asymptotic(g, self.params.beta, warn=False)

    def _in_mesh(self, g):
        return self._lo <= g <= self._hi

    def tabulate(self, g_lo: float, g_hi: float, spacing: float | None = None) -> "RateSource":
        """Spline-interpolate the exact sums on [g_lo, g_hi]; a no-op for the asymptotic source."""
        if self.kind == "asymptotic":
            return self
        spacing = spacing or 0.1 / self.params.beta
        n = max(16, int(np.ceil((g_hi - g_lo) / spacing)) + 1)
        mesh = np.linspace(g_lo, g_hi, n)
        lw = np.log([recombination_rate_exact(g, self.params, self.grid) for g in mesh])
        ln = np.log([thermal_density_exact(g, self.params.beta, self.grid) for g in mesh])
        self._spline = (CubicSpline(mesh, lw), CubicSpline(mesh, ln))
        self._lo, self._hi = g_lo, g_hi
        return self


def rate_source(kind, params: ModelParams, grid: MomentumGrid | None = None) -> RateSource:
    if isinstance(kind, RateSource):
        return kind
    return RateSource(kind, params, grid)


def integrate_density(schedule: Schedule, params: ModelParams, rate_source_kind="exact", k_order: float = 1.0,
                      c_d: float = C_D, n_out: int = 600, rtol: float = 1e-10) -> DensityTrajectory:
    """Solve the generation-recombination ODE from n = n_th(g_initial) down to g_final.

    Integration runs in g (dn/dg = w (n^2 - n_th^2) / v).  The diffusion-limited
    crossover n = k w / D is located by event detection and stored in
    ``meta['g_star']``, ``meta['n_star']`` (nan if it is not reached).

    The asymptotic n_th vanishes at g = 1, so with that source the run starts
    at g = 1 - 3/beta when g_initial lies above it; ``meta['g_start']`` records
    the actual start.
    """
    src = rate_source(rate_source_kind, params)
    beta = params.beta
    v = schedule.v
    g_start = schedule.g_initial
    if src.kind == "asymptotic":
        g_start = min(g_start, 1.0 - ASYMPTOTIC_MIN_X / beta)
        if g_start <= schedule.g_final:
            raise ValueError("schedule lies entirely in the region where the asymptotic source is invalid")
    src.tabulate(schedule.g_final, g_start)

    def rhs(g, y):
        nt = src.n_th(g)
        return [src.w(g) * (y[0] ** 2 - nt * nt) / v]

    def jac(g, y):
        return [[2.0 * src.w(g) * y[0] / v]]

    def crossing(g, y):
        if g >= 1.0:
            return y[0]
        return y[0] - k_order * src.w(g) / diffusion_closed(g, params, c_d)

    crossing.direction = -1
    g_eval = np.linspace(g_start, schedule.g_final, n_out)
    n0 = src.n_th(g_start)
    sol = solve_ivp(rhs, (g_start, schedule.g_final), [n0], method="Radau", jac=jac, t_eval=g_eval,
                    events=crossing, rtol=rtol, atol=1e-12 * src.n_th(schedule.g_final))
    if not sol.success:
        raise RuntimeError(f"density ODE failed: {sol.message}")
    g = sol.t
    n = sol.y[0]
    n_th = np.array([src.n_th(gi) for gi in g])
    n_asym = np.array([thermal_density_asymptotic(gi, beta, warn=False) for gi in g])
    t = (schedule.g_initial - g) / v
    meta = {"g_start": g_start, "k_order": k_order, "c_d": c_d}
    if len(sol.t_events[0]):
        meta["g_star"] = float(sol.t_events[0][0])
        meta["n_star"] = float(sol.y_events[0][0][0])
    else:
        meta["g_star"] = meta["n_star"] = float("nan")
    return DensityTrajectory(t, g, n, n_th, schedule, n_th_asym=n_asym, rate_source=src.kind, meta=meta)


def solve_g0(v: float, params: ModelParams, rate_source_kind="exact", g_lo: float = 0.02) -> float:
    """Onset field g0: w(g0) n_th(g0) / beta = v.

    The residual is increasing in g below 1 - 1/(2 beta) (the asymptotic n_th
    turns over above that), which fixes the upper end of the bracket.
    """
    if not v > 0:
        raise ValueError("v must be positive")
    src = rate_source(rate_source_kind, params)
    beta = params.beta

    def resid(g):
        return np.log(src.w(g) * src.n_th(g) / beta) - np.log(v)

    g_hi = 1.0 - 0.5 / beta
    r_lo, r_hi = resid(g_lo), resid(g_hi)
    if r_hi < 0:
        raise NoRootError(f"v = {v:.4g} too fast: w n_th / beta peaks at {np.exp(r_hi) * v:.4g} (g = {g_hi:.4g})")
    if r_lo > 0:
        raise NoRootError(f"v = {v:.4g} too slow: w n_th / beta = {np.exp(r_lo) * v:.4g} at g = {g_lo}")
    return float(brentq(resid, g_lo, g_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def max_onset_rate(params: ModelParams, rate_source_kind="asymptotic") -> float:
    """w n_th / beta at the upper end of the onset bracket; faster rates have no g0."""
    src = rate_source(rate_source_kind, params)
    g = 1.0 - 0.5 / params.beta
    return src.w(g) * src.n_th(g) / params.beta


def log_law_density(g, g0: float, params: ModelParams, rate_source_kind="asymptotic") -> float:
    """Frozen density n_th(g0) / (beta ln(g0 / g)) for g below g0."""
    if not g < g0:
        raise ValueError(f"log law needs g < g0, got g={g}, g0={g0}")
    beta = params.beta
    if beta * (g0 - g) < ASYMPTOTIC_MIN_X:
        warnings.warn(f"log law used at beta (g0 - g) = {beta * (g0 - g):.3g}; not yet in the frozen regime",
                      AccuracyWarning, stacklevel=2)
    src = rate_source(rate_source_kind, params)
    return src.n_th(g0) / (beta * np.log(g0 / g))


def crossover_mu(params: ModelParams, k_order: float = 1.0, c_d: float = C_D) -> float:
    """mu = c_D beta^2 / (8 k alpha^2 sqrt(2 pi^3))."""
    return c_d * params.beta**2 / (8.0 * k_order * params.alpha**2 * np.sqrt(2.0 * np.pi**3))


def scaled_x_star(mu: float, x0: float) -> float:
    """Root x* > x0 of mu sqrt(x0) exp(-x0) = x*^{3/2} (x* - x0); the right side increases in x*."""
    lhs = mu * np.sqrt(x0) * np.exp(-x0)

    def f(x):
        return x**1.5 * (x - x0) - lhs

    if not lhs > 0:
        raise NoRootError(f"no crossover at x0 = {x0}")
    # f(x0) = -lhs < 0; very small lhs puts the root below x0 + 1e-6, so bracket from x0 itself
    lo, hi = x0 + 1e-6, x0 + 50.0
    if f(lo) > 0:
        lo = x0
    while f(hi) < 0:  # far from the optimum x* can exceed x0 + 50; widen the bracket
        hi = x0 + 2.0 * (hi - x0)
        if hi > 1e8:
            raise NoRootError(f"no crossover at x0 = {x0}, mu = {mu:.4g}")
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


@dataclass(frozen=True)
class CrossoverReport:
    v: float
    g0: float
    g_star: float
    x0: float
    x_star: float
    n_star: float
    n_star_frozen: float
    mu: float
    k_order: float
    c_d: float
    valid: bool

    @property
    def route_ratio(self) -> float:
        """n* from n = k w / D over n* from the frozen log law at g*."""
        return self.n_star / self.n_star_frozen


def solve_crossover(v: float, params: ModelParams, k_order: float = 1.0, c_d: float = C_D,
                    rate_source_kind="asymptotic") -> CrossoverReport:
    mu = crossover_mu(params, k_order, c_d)
    if mu < 100:
        warnings.warn(f"mu = {mu:.3g} is not large; crossover asymptotics are unreliable", AccuracyWarning,
                      stacklevel=2)
    beta = params.beta
    src = rate_source(rate_source_kind, params)
    g0 = solve_g0(v, params, src)
    x0 = beta * (1.0 - g0)
    x_star = scaled_x_star(mu, x0)
    g_star = 1.0 - x_star / beta
    if g_star <= 0:
        raise NoRootError(f"crossover at x* = {x_star:.4g} lies beyond g = 0 for beta = {beta}")
    n_star = k_order * src.w(g_star) / diffusion_closed(g_star, params, c_d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        n_frozen = log_law_density(g_star, g0, params, src)
    valid = (x_star - x0 >= 1.0) and (beta > x_star)
    return CrossoverReport(v=v, g0=g0, g_star=g_star, x0=x0, x_star=x_star, n_star=float(n_star),
                           n_star_frozen=float(n_frozen), mu=mu, k_order=k_order, c_d=c_d, valid=valid)


@dataclass(frozen=True)
class OptimumReport:
    x_opt: float
    n_opt: float
    v_opt: float
    v_opt_closed: float
    mu: float
    k_order: float
    x_opt_numeric: float
    n_opt_numeric: float
    v_opt_numeric: float
    valid: bool
    extra: dict = field(default_factory=dict)


def _onset_rate(x0, params, src):
    g0 = 1.0 - x0 / params.beta
    return src.w(g0) * src.n_th(g0) / params.beta


def optimum(params: ModelParams, k_order: float = 1.0, c_d: float = C_D, rate_source_kind="asymptotic") -> OptimumReport:
    """Optimal annealing rate.

    x_opt = ln mu + 1 - ln ln mu and n_opt = 8 pi k alpha^2 x_opt^{3/2} / (c_D beta^3);
    v_opt is obtained by putting x0 = x_opt - 1 into the onset condition.
    ``v_opt_closed`` is the fully expanded closed form
    64 k pi^2 alpha^3 [2 ln(beta/alpha)]^{1/2} / (c_D beta^5), kept as a cross-check.
    The ``*_numeric`` fields minimize n* = k w(g*) / D(g*) over the onset point directly.
    """
    a, b = params.alpha, params.beta
    src = rate_source(rate_source_kind, params)
    mu = crossover_mu(params, k_order, c_d)
    L = np.log(mu)
    x_opt = L + 1.0 - np.log(L)
    n_opt = 8.0 * np.pi * k_order * a**2 * x_opt**1.5 / (c_d * b**3)
    v_opt = _onset_rate(x_opt - 1.0, params, src)
    v_closed = 64.0 * k_order * np.pi**2 * a**3 / (c_d * b**5) * np.sqrt(2.0 * np.log(b / a))
    valid = b > x_opt
    if not valid:
        warnings.warn(f"beta = {b} <= x_opt = {x_opt:.3g}: optimum lies outside the asymptotic regime",
                      AccuracyWarning, stacklevel=2)

    def n_star(x0):
        xs = scaled_x_star(mu, x0)
        g_star = 1.0 - xs / b
        if g_star <= 0:
            return np.inf
        return k_order * src.w(g_star) / diffusion_closed(g_star, params, c_d)

    hi = min(b - 1e-3, 60.0)
    res = minimize_scalar(n_star, bounds=(0.55, hi), method="bounded", options={"xatol": 1e-10})
    x0n = float(res.x)
    return OptimumReport(x_opt=float(x_opt), n_opt=float(n_opt), v_opt=float(v_opt), v_opt_closed=float(v_closed),
                         mu=float(mu), k_order=k_order, x_opt_numeric=scaled_x_star(mu, x0n),
                         n_opt_numeric=float(res.fun), v_opt_numeric=float(_onset_rate(x0n, params, src)),
                         valid=bool(valid), extra={"x0_numeric": x0n, "x0_opt": float(x_opt - 1.0)})


def v_from_scaled(v_scaled, params: ModelParams):
    """Physical rate from v_scaled = beta^3 v / (4 sqrt(2 pi) alpha)."""
    return np.asarray(v_scaled) * 4.0 * np.sqrt(2.0 * np.pi) * params.alpha / params.beta**3


def _x0_from_scaled_v(vs):
    peak = np.sqrt(0.5) * np.exp(-0.5)
    if not 0 < vs < peak:
        raise NoRootError(f"scaled rate {vs} outside (0, {peak:.4f})")
    return brentq(lambda x: 0.5 * np.log(x) - x - np.log(vs), 0.5, 1e4, xtol=1e-14)


@dataclass(frozen=True)
class ScaledCurve:
    """One curve n_scaled(v_scaled) = x*^{3/2} at fixed mu, ordered by increasing x0."""

    log_mu: float
    x0: np.ndarray
    x_star: np.ndarray
    v_scaled: np.ndarray
    n_scaled: np.ndarray
    valid: np.ndarray

    def minimum(self):
        """Refined minimum of x*(x0): returns (x0, x*, v_scaled, n_scaled)."""
        mu = np.exp(self.log_mu)
        i = int(np.argmin(self.x_star))
        lo = self.x0[max(i - 1, 0)]
        hi = self.x0[min(i + 1, len(self.x0) - 1)]
        res = minimize_scalar(lambda x: scaled_x_star(mu, x), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        xs = scaled_x_star(mu, res.x)
        return float(res.x), xs, float(np.sqrt(res.x) * np.exp(-res.x)), xs**1.5

    def interior_minima(self) -> int:
        """Number of interior local minima of the sampled curve."""
        d = np.sign(np.diff(self.n_scaled))
        return int(np.sum((d[:-1] < 0) & (d[1:] > 0)))


def scaled_curves(log_mu_values=(8, 9, 10, 11), v_scaled=None, beta: float | None = None, x0=None):
    """Scaled crossover curves for each ln(mu).

    The sweep is over x0 (default 0.6..25) or, if ``v_scaled`` is given, over
    those scaled rates.  Points with x* - x0 < 1, or x* >= beta when beta is
    given, are flagged invalid.
    """
    if v_scaled is not None:
        x0 = np.array([_x0_from_scaled_v(vs) for vs in np.atleast_1d(v_scaled)])
    elif x0 is None:
        x0 = np.linspace(0.6, 25.0, 489)
    x0 = np.sort(np.asarray(x0, dtype=float))
    out = []
    for lm in log_mu_values:
        mu = np.exp(lm)
        xs = np.array([scaled_x_star(mu, x) for x in x0])
        valid = xs - x0 >= 1.0
        if beta is not None:
            valid &= xs < beta
        out.append(ScaledCurve(float(lm), x0, xs, np.sqrt(x0) * np.exp(-x0), xs**1.5, valid))
    return out


@dataclass(frozen=True)
class KZComparison:
    v_kz: float
    v_opt: float
    ratio: float
    n_target: float


def kz_comparison(params: ModelParams, n_target: float | None = None, k_order: float = 1.0, c_d: float = C_D,
                  rate_source_kind="asymptotic") -> KZComparison:
    """Rate at which a coherent Kibble-Zurek sweep leaves density n_target, against v_opt."""
    opt = optimum(params, k_order, c_d, rate_source_kind)
    n = opt.n_opt if n_target is None else n_target
    if not 0 < n < 1:
        raise ValueError("n_target must lie in (0, 1)")
    v_kz = 8.0 * np.pi * n * n
    ratio = opt.v_opt / v_kz
    if ratio <= 1:
        log.info("v_opt / v_KZ = %.3g <= 1 at alpha=%g, beta=%g", ratio, params.alpha, params.beta)
    return KZComparison(v_kz=float(v_kz), v_opt=opt.v_opt, ratio=float(ratio), n_target=float(n))


def glauber_time(n, w_G: float = 1.0):
    """Time for classical kink diffusion to reach density n: 1 / (8 pi w_G n^2)."""
    n = np.asarray(n, dtype=float)
    if np.any(n <= 0) or w_G <= 0:
        raise ValueError("need n > 0 and w_G > 0")
    out = 1.0 / (8.0 * np.pi * w_G * n * n)
    return float(out) if out.ndim == 0 else out
