"""Linear annealing schedules and density trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Schedule:
    """g(t) = g_initial - v t, stopped at g_final.  v in J/hbar, t in hbar/J."""

    g_initial: float = 1.2
    v: float = 2.85e-7
    g_final: float = 0.6

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"annealing rate must be positive, got v={self.v}")
        if not self.g_initial > self.g_final >= 0:
            raise ValueError(f"need g_initial > g_final >= 0, got {self.g_initial}, {self.g_final}")

    @property
    def duration(self) -> float:
        return (self.g_initial - self.g_final) / self.v

    def g(self, t):
        return self.g_initial - self.v * np.asarray(t, dtype=float)

    def t(self, g):
        return (self.g_initial - np.asarray(g, dtype=float)) / self.v


@dataclass
class DensityTrajectory:
    """Samples (t, g, n_mean, n_th) along a schedule.

    ``n_th`` is the thermal density used by the run (exact band sum or the
    asymptotic form, see ``rate_source``); ``n_th_asym`` is always the
    asymptotic value, kept for export.
    """

    t: np.ndarray
    g: np.ndarray
    n_mean: np.ndarray
    n_th: np.ndarray
    schedule: Schedule
    n_th_asym: np.ndarray | None = None
    rate_source: str = "exact"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self.n_mean = np.asarray(self.n_mean, dtype=float)
        self.n_th = np.asarray(self.n_th, dtype=float)
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if np.any(self.n_mean < 0):
            raise ValueError("negative density in trajectory")

    def __len__(self):
        return len(self.t)

    @property
    def ratio(self) -> np.ndarray:
        return self.n_mean / self.n_th

    def departure_g(self, factor: float = 2.0) -> float:
        """Largest sampled g at which n_mean exceeds factor * n_th (interpolated in log ratio)."""
        r = np.log(self.ratio / factor)
        idx = np.flatnonzero(r > 0)
        if idx.size == 0:
            return float("nan")
        i = idx[0]
        if i == 0:
            return float(self.g[0])
        # linear interpolation of log(n/n_th) between the bracketing samples
        f = r[i - 1] / (r[i - 1] - r[i])
        return float(self.g[i - 1] + f * (self.g[i] - self.g[i - 1]))

    def at_g(self, g: float) -> float:
        """n_mean interpolated (log-linear) at field g."""
        order = np.argsort(self.g)
        return float(np.exp(np.interp(g, self.g[order], np.log(self.n_mean[order]))))

    def columns(self) -> dict:
        asym = self.n_th_asym if self.n_th_asym is not None else np.full_like(self.t, np.nan)
        return {"t": self.t, "g": self.g, "n_mean": self.n_mean, "n_th": self.n_th, "n_th_asym": asym}
