"""Isolated transverse-field Ising chain in the fermion representation.

Reduced units throughout: hbar = J = 1, so energies are in units of J and
times in units of hbar/J.  The scaled band energy ``eps_k`` is in units of
2J (physical energy ``E_k = 2 eps_k``) and temperature enters only through
``beta = 2J / k_B T``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import expit

__all__ = [
    "ASYMPTOTIC_MIN_X",
    "AccuracyWarning",
    "ModelParams",
    "MomentumGrid",
    "bogoliubov_angle",
    "dispersion",
    "effective_mass",
    "fermi_dirac",
    "gap",
    "kz_density",
    "thermal_density_asymptotic",
    "thermal_density_exact",
    "thermal_momentum",
    "thermal_wavelength",
]

#: Asymptotic (large beta*|1-g|) formulas warn below this value of beta*|1-g|.
ASYMPTOTIC_MIN_X = 3.0


class AccuracyWarning(UserWarning):
    """An asymptotic formula was used outside its validity window."""


def _warn_if_marginal(x: float, what: str) -> None:
    if x < ASYMPTOTIC_MIN_X:
        warnings.warn(
            f"{what}: beta*|1-g| = {x:.3g} < {ASYMPTOTIC_MIN_X}; asymptotic form is inaccurate",
            AccuracyWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the chain + Ohmic bath.

    alpha        -- dimensionless Ohmic coupling
    beta         -- 2J / k_B T
    omega_c      -- bath cutoff frequency, units of 2J/hbar
    omega_cutoff -- polaron-transformation cutoff, units of 2J/hbar
    n_sites      -- number of sites N (even, >= 4)
    """

    alpha: float = 0.06
    beta: float = 25.0
    omega_c: float = 20.0
    omega_cutoff: float = 10.0
    n_sites: int = 1024

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.alpha >= 0.2:
            warnings.warn(f"alpha = {self.alpha} is not small; weak-coupling results are unreliable",
                          AccuracyWarning, stacklevel=3)
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if int(self.n_sites) != self.n_sites or self.n_sites < 4 or self.n_sites % 2:
            raise ValueError(f"n_sites must be an even integer >= 4, got {self.n_sites}")
        if self.omega_c <= 0 or self.omega_cutoff <= 0:
            raise ValueError("bath frequencies must be positive")
        if self.omega_c > 1 and self.omega_cutoff > self.omega_c:
            raise ValueError("omega_cutoff must not exceed omega_c in the broadband regime")

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)

    @property
    def grid(self) -> "MomentumGrid":
        return MomentumGrid(self.n_sites)


@dataclass(frozen=True)
class MomentumGrid:
    """Antiperiodic momentum grid k_m = pi (2m + 1 - N) / N, m = 0..N-1.

    Every k has its partner -k on the grid (index N-1-m) and k = 0 is absent.
    """

    n_sites: int

    def __post_init__(self):
        if self.n_sites < 4 or self.n_sites % 2:
            raise ValueError(f"grid size must be even and >= 4, got {self.n_sites}")

    @cached_property
    def momenta(self) -> np.ndarray:
        m = np.arange(self.n_sites)
        k = np.pi * (2 * m + 1 - self.n_sites) / self.n_sites
        k.flags.writeable = False
        return k

    @property
    def weight(self) -> float:
        return 1.0 / self.n_sites

    @property
    def positive(self) -> np.ndarray:
        """The N/2 positive momenta, ascending."""
        return self.momenta[self.n_sites // 2:]

    def mirror_index(self) -> np.ndarray:
        """Index of -k for each k."""
        return np.arange(self.n_sites)[::-1]

    def __len__(self) -> int:
        return self.n_sites


def dispersion(g, k):
    """Scaled band energy eps_k = sqrt((g - cos k)^2 + sin^2 k)."""
    g = np.asarray(g, dtype=float)
    k = np.asarray(k, dtype=float)
    # (g - cos k)^2 + sin^2 k written to stay accurate near the band bottom
    return np.sqrt((g - 1.0) ** 2 + 4.0 * g * np.sin(0.5 * k) ** 2)


def bogoliubov_angle(g, k):
    """theta_k = atan2(sin k, g - cos k), so cos theta = (g - cos k)/eps, sin theta = sin k/eps."""
    g_arr = np.asarray(g, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    if np.any((g_arr == 1.0) & (k_arr == 0.0)):
        raise ValueError("Bogoliubov angle is undefined at g = 1, k = 0")
    return np.arctan2(np.sin(k_arr), g_arr - np.cos(k_arr))


def gap(g):
    """Spectral gap Delta = 2|1 - g| in units of J."""
    return 2.0 * np.abs(1.0 - np.asarray(g, dtype=float))


def _check_ferro(g, name):
    g_arr = np.asarray(g, dtype=float)
    if np.any((g_arr <= 0) | (g_arr >= 1)):
        raise ValueError(f"{name} requires 0 < g < 1, got {g}")
    return g_arr


def effective_mass(g):
    """Band-bottom effective mass m_e = (1 - g) / 2g."""
    g = _check_ferro(g, "effective_mass")
    return (1.0 - g) / (2.0 * g)


def thermal_momentum(g, beta):
    """Thermal momentum k_th = sqrt((1 - g) / (beta g)); K = k / k_th is the scaled momentum."""
    g = _check_ferro(g, "thermal_momentum")
    return np.sqrt((1.0 - g) / (beta * g))


def thermal_wavelength(g, beta):
    """lambda_T = 2 pi sqrt(beta g / 2(1 - g)) in lattice units."""
    g = _check_ferro(g, "thermal_wavelength")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return 2.0 * np.pi * np.sqrt(beta * g / (2.0 * (1.0 - g)))


def thermal_density_exact(g, beta, grid: MomentumGrid) -> float:
    """Band sum n_th = N^-1 sum_k exp(-beta eps_k)."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    eps = dispersion(g, grid.momenta)
    return float(np.mean(np.exp(-beta * eps)))


def thermal_density_asymptotic(g, beta, warn: bool = True) -> float:
    """n_th ~ sqrt(|1-g| / (2 pi beta g)) exp(-beta |1-g|), valid for beta|1-g| >> 1.

    Written with |1-g| so that it also covers the paramagnetic side, whose
    band bottom has the same quadratic form.
    """
    if g <= 0:
        raise ValueError(f"g must be positive, got {g}")
    d = abs(1.0 - g)
    if warn:
        _warn_if_marginal(beta * d, "thermal_density_asymptotic")
    return float(np.sqrt(d / (2.0 * np.pi * beta * g)) * np.exp(-beta * d))


def fermi_dirac(g, beta, grid: MomentumGrid) -> np.ndarray:
    """Zero-chemical-potential occupations 1 / (exp(beta eps_k) + 1)."""
    eps = dispersion(g, grid.momenta)
    return expit(-beta * eps)


def kz_density(v):
    """Kibble-Zurek defect density n_v = sqrt(v / 8 pi) for sweep rate v (units J/hbar)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("sweep rate must be non-negative")
    out = np.sqrt(v / (8.0 * np.pi))
    return float(out) if out.ndim == 0 else out
