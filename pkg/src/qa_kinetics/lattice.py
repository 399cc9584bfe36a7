"""Stochastic lattice checks: A + A -> 0 kinetic Monte Carlo on a ring.

Particles are hard-core random walkers with total hop rate Gamma(t) (one
lattice spacing, left or right), so D(t) = Gamma(t) / 2.  A hop onto an
occupied site annihilates both particles with probability
p = min(1, w / (2 Gamma)); otherwise it is rejected.  In a well-mixed state
this gives dn/dt = -2 Gamma p n^2 = -w n^2, the mean-field pair-recombination
law with rate w.  Time-dependent rates are handled by thinning against a
piecewise-constant envelope.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .chain import ModelParams
from .rates import diffusion_closed, recombination_rate_asymptotic

__all__ = [
    "EnvelopeError",
    "KMCResult",
    "LatticeConfig",
    "RateScheduleHooks",
    "TouchingResult",
    "constant_hooks",
    "decaying_hooks",
    "diffusion_length",
    "fit_power_law",
    "glauber_kink_mc",
    "kmc_time_dependent",
    "model_g_schedule_hooks",
    "touching_crossover",
]


class EnvelopeError(RuntimeError):
    """A rate hook exceeded the bound used for thinning."""


@dataclass
class LatticeConfig:
    length: int
    positions: np.ndarray
    rng_seed: int
    time: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        if pos.size and (pos.min() < 0 or pos.max() >= self.length):
            raise ValueError("positions must lie in [0, length)")
        if np.unique(pos).size != pos.size:
            raise ValueError("positions must be distinct")
        self.positions = pos

    @property
    def density(self) -> float:
        return self.positions.size / self.length

    @classmethod
    def random(cls, length: int, density: float, seed: int) -> "LatticeConfig":
        rng = np.random.default_rng(seed)
        n = int(round(density * length))
        return cls(length, np.sort(rng.choice(length, size=n, replace=False)), seed)


@dataclass(frozen=True)
class RateScheduleHooks:
    """hop_rate(t) is the total hop rate per particle; reaction_rate(t) the mean-field pair rate w(t).

    ``reaction_rate`` may return inf for certain annihilation on contact.
    ``hop_bound(t0, t1)`` must bound hop_rate on [t0, t1]; the default
    assumes monotone rates and pads the larger endpoint value by 5%.
    """

    hop_rate: callable
    reaction_rate: callable
    name: str = "custom"
    hop_bound: callable = None
    params: dict = field(default_factory=dict)

    def diffusion(self, t):
        return 0.5 * self.hop_rate(t)

    def bound(self, t0, t1):
        if self.hop_bound is not None:
            return self.hop_bound(t0, t1)
        return 1.05 * max(self.hop_rate(t0), self.hop_rate(t1))

    def reaction_probability(self, t) -> float:
        w = self.reaction_rate(t)
        if np.isinf(w):
            return 1.0
        return min(1.0, w / (2.0 * self.hop_rate(t)))


class _Constant:
    # module-level callables keep hooks picklable for the process pool
    def __init__(self, value):
        self.value = value

    def __call__(self, *t):
        return self.value


class _PowerDecay:
    def __init__(self, hop0, t0, power):
        self.hop0, self.t0, self.power = hop0, t0, power

    def __call__(self, t):
        return self.hop0 * (1.0 + t / self.t0) ** (-self.power)


class _AtStart:
    # envelope for a non-increasing rate: its value at the left end of the cell
    def __init__(self, f):
        self.f = f

    def __call__(self, a, b):
        return self.f(a)


class _ModelRate:
    def __init__(self, params, g_start, v, c_d, time_scale, kind):
        self.params, self.g_start, self.v = params, g_start, v
        self.c_d, self.time_scale, self.kind = c_d, time_scale, kind

    def g_of(self, t):
        g = self.g_start - self.v * self.time_scale * t
        if g <= 0:
            raise ValueError(f"schedule reached g <= 0 at t = {t}")
        return g

    def __call__(self, t):
        g = self.g_of(t)
        if self.kind == "hop":
            return 2.0 * self.time_scale * diffusion_closed(g, self.params, self.c_d)
        return self.time_scale * recombination_rate_asymptotic(g, self.params, warn=False)


def constant_hooks(hop: float, react: float) -> RateScheduleHooks:
    if hop <= 0 or react < 0:
        raise ValueError("need hop > 0 and react >= 0")
    return RateScheduleHooks(_Constant(hop), _Constant(react), "constant", _Constant(hop),
                             {"hop": hop, "react": react})


def decaying_hooks(hop0: float, t0: float, react: float, power: float = 1.5) -> RateScheduleHooks:
    """Gamma(t) = hop0 (1 + t / t0)^(-power), constant w: diffusion shutting off as after a field ramp."""
    hop = _PowerDecay(hop0, t0, power)
    return RateScheduleHooks(hop, _Constant(react), "decaying", _AtStart(hop),
                             {"hop0": hop0, "t0": t0, "react": react, "power": power})


def model_g_schedule_hooks(params: ModelParams, g_start: float, v: float, c_d: float | None = None,
                           time_scale: float = 1.0) -> RateScheduleHooks:
    """Hop and reaction rates following D(g) and w(g) along g(t) = g_start - v t (0 < g < 1).

    ``time_scale`` rescales lattice time to model time, t_model = time_scale * t.
    """
    from .rates import C_D

    c_d = C_D if c_d is None else c_d
    if not 0 < g_start < 1:
        raise ValueError("model schedule needs 0 < g_start < 1")
    hop = _ModelRate(params, g_start, v, c_d, time_scale, "hop")
    react = _ModelRate(params, g_start, v, c_d, time_scale, "react")
    return RateScheduleHooks(hop, react, "model_g_schedule", _AtStart(hop),
                             {"g_start": g_start, "v": v, "time_scale": time_scale})


def diffusion_length(t, tau, hooks: RateScheduleHooks) -> float:
    """l_D(t, tau) = [4 int_tau^t D(t') dt']^(1/2)."""
    if t < tau:
        raise ValueError("need t >= tau")
    if t == tau:
        return 0.0
    val, _ = quad(hooks.diffusion, tau, t, limit=200)
    return float(np.sqrt(4.0 * val))


def _run_replica(length, density, hooks, seed, t_samples, mesh):
    """One KMC trajectory; returns particle counts at t_samples."""
    rng = np.random.default_rng(seed)
    n0 = int(round(density * length))
    pos = rng.choice(length, size=n0, replace=False).astype(np.int64)
    occ = np.full(length, -1, dtype=np.int64)  # site -> index into pos, -1 if empty
    occ[pos] = np.arange(n0)
    pos = list(pos)
    counts = np.empty(len(t_samples), dtype=np.int64)
    si = 0
    t = 0.0
    block = 4096
    u = rng.random((block, 4))
    bi = 0
    for ci in range(len(mesh) - 1):
        c0, c1 = mesh[ci], mesh[ci + 1]
        gmax = hooks.bound(c0, c1)
        t = max(t, c0)
        while True:
            npart = len(pos)
            if npart == 0:
                t = c1
                break
            if bi == block:
                u = rng.random((block, 4))
                bi = 0
            r = u[bi]
            bi += 1
            dt = -np.log1p(-r[0]) / (npart * gmax)
            if t + dt >= c1:
                t = c1  # memoryless: restart at the cell boundary with the new envelope
                break
            t += dt
            while si < len(t_samples) and t_samples[si] < t:
                counts[si] = npart
                si += 1
            gam = hooks.hop_rate(t)
            if gam > gmax * (1 + 1e-12):
                raise EnvelopeError(f"hop rate {gam:.6g} exceeds envelope {gmax:.6g} at t = {t:.6g}")
            if r[1] * gmax >= gam:
                continue
            i = int(r[2] * npart)
            x = pos[i]
            step = 1 if r[3] < 0.5 else -1
            y = (x + step) % length
            j = occ[y]
            if j < 0:
                occ[x] = -1
                occ[y] = i
                pos[i] = y
                continue
            # contact: reuse the direction draw to decide the reaction
            p = hooks.reaction_probability(t)
            u_react = (r[3] * 2.0) % 1.0
            if u_react >= p:
                continue
            occ[x] = -1
            occ[y] = -1
            for k in sorted((i, j), reverse=True):
                last = pos.pop()
                if k < len(pos):
                    pos[k] = last
                    occ[last] = k
        if si >= len(t_samples):
            break
    while si < len(t_samples):
        counts[si] = len(pos)
        si += 1
    return counts


@dataclass(frozen=True)
class KMCResult:
    t: np.ndarray
    n_mean: np.ndarray
    n_stderr: np.ndarray
    n_replicas: int
    length: int
    reached_target: bool = True
    counts: np.ndarray | None = None

    def columns(self) -> dict:
        return {"t": self.t, "n_mean": self.n_mean, "n_stderr": self.n_stderr,
                "n_replicas": np.full(self.t.shape, self.n_replicas)}

    def time_to_density(self, n: float) -> float:
        """First time the ensemble mean falls to n (log-linear interpolation)."""
        below = np.flatnonzero(self.n_mean <= n)
        if below.size == 0:
            return float("nan")
        i = below[0]
        if i == 0:
            return float(self.t[0])
        lt = np.log(self.t[i - 1:i + 1])
        ln = np.log(self.n_mean[i - 1:i + 1])
        return float(np.exp(np.interp(np.log(n), ln[::-1], lt[::-1])))


def _workers():
    env = os.environ.get("QA_KINETICS_THREADS")
    return max(1, int(env)) if env else 1


def kmc_time_dependent(length: int, initial_density: float, hooks: RateScheduleHooks, seed: int,
                       horizon: float, n_replicas: int = 32, t_samples=None, mesh_points: int = 400,
                       workers: int | None = None, keep_counts: bool = False) -> KMCResult:
    """Ensemble of KMC runs; replica r uses the r-th child of SeedSequence(seed).

    ``t_samples`` defaults to a geometric grid on [1e-3 horizon, horizon].
    Replica results are combined in index order, so the output does not
    depend on the number of workers.
    """
    if not 0 < initial_density <= 1:
        raise ValueError("initial_density must be in (0, 1]")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if t_samples is None:
        t_samples = np.geomspace(1e-3 * horizon, horizon, 120)
    t_samples = np.asarray(t_samples, dtype=float)
    # envelope mesh: geometric in t so that cells stay short where rates change fast
    mesh = np.concatenate([[0.0], np.geomspace(min(1e-3, 1e-3 * horizon), horizon, mesh_points)])
    seeds = [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(n_replicas)]
    workers = workers or _workers()
    args = [(length, initial_density, hooks, s, t_samples, mesh) for s in seeds]
    if workers > 1 and n_replicas > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            counts = list(ex.map(_run_replica_star, args))
    else:
        counts = [_run_replica(*a) for a in args]
    counts = np.array(counts, dtype=float)
    dens = counts / length
    mean = dens.mean(axis=0)
    err = dens.std(axis=0, ddof=1) / np.sqrt(n_replicas) if n_replicas > 1 else np.zeros_like(mean)
    return KMCResult(t_samples, mean, err, n_replicas, length, counts=dens if keep_counts else None)


def _run_replica_star(a):
    return _run_replica(*a)


def glauber_kink_mc(length: int, initial_density: float, w_G: float, seed: int, horizon: float,
                    n_replicas: int = 32, t_samples=None, target_density: float | None = None,
                    workers: int | None = None) -> KMCResult:
    """Kinks of a Glauber chain: walkers with D = w_G that annihilate on every contact."""
    if not 0 < initial_density <= 0.5:
        raise ValueError("initial_density must be in (0, 0.5]")
    if w_G <= 0:
        raise ValueError("w_G must be positive")
    hooks = RateScheduleHooks(_Constant(2.0 * w_G), _Constant(np.inf), "glauber", _Constant(2.0 * w_G),
                              {"w_G": w_G})
    res = kmc_time_dependent(length, initial_density, hooks, seed, horizon, n_replicas, t_samples, workers=workers)
    if target_density is not None and res.n_mean[-1] > target_density:
        return KMCResult(res.t, res.n_mean, res.n_stderr, res.n_replicas, length, reached_target=False)
    return res


def fit_power_law(t, n, t_min, t_max) -> float:
    """Slope of log n against log t over [t_min, t_max]."""
    t = np.asarray(t)
    sel = (t >= t_min) & (t <= t_max) & (np.asarray(n) > 0)
    if sel.sum() < 3:
        raise ValueError("fewer than 3 points in the fit window")
    return float(np.polyfit(np.log(t[sel]), np.log(np.asarray(n)[sel]), 1)[0])


@dataclass(frozen=True)
class TouchingResult:
    t_star: float
    t_touch: float
    n_star: float
    k_implied: float


def touching_crossover(hooks: RateScheduleHooks, density_law, horizon: float, t_grid=None,
                       require_tangency: bool = True) -> TouchingResult:
    """Critical start time tau at which l_D(t, tau) just touches l(t) = 1/n(t) for some t >= tau.

    With C(t) = int_0^t D, the tangency function is
    G(tau) = max_{t >= tau} [4 C(t) - l(t)^2] - 4 C(tau);  G(tau*) = 0.
    Returns tau* (``t_star``), the touching time, the density there and the
    implied k = n D / w at the touching time.  When diffusion never
    catches up with the inter-particle distance on the horizon, raises
    ValueError unless ``require_tangency`` is False (then tau* = t_grid[0]).
    A tangency found at the last grid point means the horizon is too short.
    """
    if t_grid is None:
        t_grid = np.concatenate([[0.0], np.geomspace(1e-4 * horizon, horizon, 4000)])
    t_grid = np.asarray(t_grid, dtype=float)
    D = np.array([hooks.diffusion(t) for t in t_grid])
    C = np.concatenate([[0.0], np.cumsum(0.5 * (D[1:] + D[:-1]) * np.diff(t_grid))])
    ell2 = 1.0 / np.array([density_law(t) for t in t_grid]) ** 2
    h = 4.0 * C - ell2
    # suffix maximum of h and where it is attained
    suf = np.maximum.accumulate(h[::-1])[::-1]
    G = suf - 4.0 * C
    # G at the horizon is -l^2 < 0, so G always changes sign unless it starts negative
    if G[0] < 0:
        if require_tangency:
            raise ValueError("diffusion never catches up with the inter-particle distance on this horizon")
        i, tau = 0, t_grid[0]
    else:
        i = int(np.flatnonzero(G < 0)[0])
        f = G[i - 1] / (G[i - 1] - G[i])
        tau = t_grid[i - 1] + f * (t_grid[i] - t_grid[i - 1])
    j = i + int(np.argmax(h[i:]))
    t_touch = float(t_grid[j])
    n_star = float(density_law(t_touch))
    w = hooks.reaction_rate(t_touch)
    k = n_star * hooks.diffusion(t_touch) / w if np.isfinite(w) and w > 0 else float("nan")
    return TouchingResult(t_star=float(tau), t_touch=t_touch, n_star=n_star, k_implied=float(k))
