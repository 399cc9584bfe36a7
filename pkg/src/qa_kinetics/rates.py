"""Bath-induced transition rates and the transport coefficients built from them.

Rates are returned in units of J/hbar (time unit hbar/J).  Frequencies passed
to :func:`bose_occupation` and :func:`emission_weight` are in units of 2J/hbar,
i.e. on the same scale as the band energy eps_k, so that hbar*omega/k_B T is
simply ``beta * omega``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .chain import (
    ASYMPTOTIC_MIN_X,
    AccuracyWarning,
    ModelParams,
    MomentumGrid,
    bogoliubov_angle,
    dispersion,
)

__all__ = [
    "C_D",
    "ConvergenceError",
    "DiffusionEstimate",
    "KernelSpectrum",
    "TransitionRateTable",
    "bose_occupation",
    "coupling_coeffs",
    "diffusion_closed",
    "diffusion_quadrature",
    "emission_weight",
    "intraband_kernel",
    "kernel_spectrum",
    "momentum_relaxation_rate",
    "rate_table",
    "recombination_rate_asymptotic",
    "recombination_rate_exact",
    "scale_free_rate",
    "transition_rate",
]

#: Diffusion constant prefactor quoted for the closed-form D(g).
C_D = 0.17


class ConvergenceError(RuntimeError):
    """A quadrature or iteration did not reach its tolerance."""


def bose_occupation(omega, beta):
    """n(omega) = 1 / (exp(beta omega) - 1); negative omega allowed, omega = 0 is singular."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega == 0):
        raise ZeroDivisionError("Bose occupation diverges at omega = 0; use emission_weight")
    out = 1.0 / np.expm1(beta * omega)
    return float(out) if out.ndim == 0 else out


def emission_weight(omega, beta):
    """h(omega) = omega (n(omega) + 1), continuous through h(0) = 1/beta.

    For omega < 0 it is evaluated as h(|omega|) exp(-beta |omega|), which makes
    the detailed-balance ratio h(-x)/h(x) = exp(-beta x) hold to rounding.
    """
    omega = np.asarray(omega, dtype=float)
    a = np.abs(omega)
    y = beta * a
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.where(y > 1e-8, a / -np.expm1(-np.where(y > 1e-8, y, 1.0)), (1.0 + 0.5 * y) / beta)
    out = np.where(omega < 0, pos * np.exp(-y), pos)
    return float(out) if out.ndim == 0 else out


def coupling_coeffs(g, k, kp):
    """(c, |s|) without the N^-1/2 factor: c = 2 cos[(th_k + th_k')/2], |s| = |sin[(th_k + th_k')/2]|."""
    half = 0.5 * (bogoliubov_angle(g, k) + bogoliubov_angle(g, kp))
    return 2.0 * np.cos(half), np.abs(np.sin(half))


def _angles(g, k):
    eps = dispersion(g, k)
    cos_t = (g - np.cos(k)) / eps
    sin_t = np.sin(k) / eps
    return eps, cos_t, sin_t


def transition_rate(mu: int, nu: int, g, k, q, params: ModelParams):
    """W^{mu nu}_{kq} in units of J/hbar, including the 1/N per-mode factor.

    mu, nu = +1/-1.  (+,-) is intraband scattering k -> q, (+,+) pair
    recombination and (-,-) pair generation.
    """
    if mu not in (1, -1) or nu not in (1, -1):
        raise ValueError("band indices must be +1 or -1")
    if (mu, nu) == (-1, 1):
        raise ValueError("use (mu, nu) = (+1, -1) for intraband scattering")
    if np.any((np.asarray(g) == 1.0) & ((np.asarray(k) == 0.0) | (np.asarray(q) == 0.0))):
        raise ValueError("rates are singular at g = 1, k = 0")
    eps_k, ck, sk = _angles(g, np.asarray(k, dtype=float))
    eps_q, cq, sq = _angles(g, np.asarray(q, dtype=float))
    sign = mu * nu
    # 1 - mu nu cos(mu th_k - nu th_q) = 1 - mu nu cos th_k cos th_q - sin th_k sin th_q
    angular = np.maximum(1.0 - sign * ck * cq - sk * sq, 0.0)
    omega = mu * eps_k + nu * eps_q
    # Omega in units of 2J/hbar -> factor 2 converts the rate to units of J/hbar
    return (4.0 * np.pi * params.alpha / params.n_sites) * emission_weight(omega, params.beta) * angular


@dataclass(frozen=True)
class TransitionRateTable:
    """Dense W^{+-}, W^{++}, W^{--} on a momentum grid at fixed g (rows k, columns q)."""

    g: float
    params: ModelParams
    grid: MomentumGrid
    intra: np.ndarray
    rec: np.ndarray
    gen: np.ndarray

    def __getitem__(self, key):
        return {"+-": self.intra, "++": self.rec, "--": self.gen}[key]


def rate_table(g: float, params: ModelParams, grid: MomentumGrid | None = None) -> TransitionRateTable:
    grid = grid or params.grid
    k = grid.momenta
    eps, c, s = _angles(g, k)
    beta = params.beta
    pref = 4.0 * np.pi * params.alpha / grid.n_sites
    cc = np.multiply.outer(c, c)
    ss = np.multiply.outer(s, s)
    intra = pref * emission_weight(np.subtract.outer(eps, eps), beta) * np.maximum(1.0 + cc - ss, 0.0)
    big = np.add.outer(eps, eps)
    ang = np.maximum(1.0 - cc - ss, 0.0)  # clip rounding below zero
    rec = pref * emission_weight(big, beta) * ang
    gen = pref * emission_weight(-big, beta) * ang
    for a in (intra, rec, gen):
        a.flags.writeable = False
    return TransitionRateTable(float(g), params, grid, intra, rec, gen)


def momentum_relaxation_rate(g, params: ModelParams) -> float:
    """1/tau_r = (4 alpha / beta) sqrt((1 - g) / (beta g))."""
    if not 0 < g < 1:
        raise ValueError(f"momentum_relaxation_rate requires 0 < g < 1, got {g}")
    b = params.beta
    return 4.0 * params.alpha / b * np.sqrt((1.0 - g) / (b * g))


def recombination_rate_exact(g, params: ModelParams, grid: MomentumGrid | None = None) -> float:
    """w(g) = sum_{kq} W^{++}_{kq} exp[-beta(eps_k + eps_q)] / (N n_th^2)."""
    grid = grid or params.grid
    # fold q -> -q and k -> -k: the sin-sin term cancels, leaving 4 (1 - c_k c_q) on k, q > 0
    eps, c, _ = _angles(g, grid.positive)
    beta = params.beta
    e0 = eps.min()
    big = np.add.outer(eps, eps)
    ang = np.maximum(1.0 - np.multiply.outer(c, c), 0.0)
    # W^{++} exp(-beta X) = pref X n(X) ang; rescale by exp(2 beta e0) against underflow
    weight = emission_weight(-big, beta) * np.exp(2.0 * beta * e0)
    pref = 4.0 * np.pi * params.alpha / grid.n_sites
    num = 4.0 * pref * np.sum(weight * ang)
    nth_scaled = np.mean(np.exp(-beta * (dispersion(g, grid.momenta) - e0)))
    return float(num / (grid.n_sites * nth_scaled**2))


def recombination_rate_asymptotic(g, params: ModelParams, warn: bool = True) -> float:
    """w(g) ~ 8 pi alpha / (beta g), valid for beta >> |1-g|^-1, 1/g."""
    if g <= 0:
        raise ValueError(f"g must be positive, got {g}")
    b = params.beta
    if warn and (b * abs(1.0 - g) < ASYMPTOTIC_MIN_X or b * g < ASYMPTOTIC_MIN_X):
        warnings.warn(f"recombination_rate_asymptotic outside its regime at g={g}, beta={b}",
                      AccuracyWarning, stacklevel=2)
    return 8.0 * np.pi * params.alpha / (b * g)


def diffusion_closed(g, params: ModelParams, c_d: float = C_D):
    """D = c_D (sqrt(beta) / alpha) (g / (1 - g))^{3/2}, lattice units squared per hbar/J."""
    g = np.asarray(g, dtype=float)
    if np.any((g <= 0) | (g >= 1)):
        raise ValueError(f"diffusion_closed requires 0 < g < 1, got {g}")
    out = c_d * np.sqrt(params.beta) / params.alpha * (g / (1.0 - g)) ** 1.5
    return float(out) if out.ndim == 0 else out


def scale_free_rate(K, Q):
    """Leading-order intraband rate K -> Q in units of 4 alpha / beta.

    y / (1 - exp(-y)) with y = (K^2 - Q^2) / 2.
    """
    y = 0.5 * (np.asarray(K, dtype=float) ** 2 - np.asarray(Q, dtype=float) ** 2)
    small = np.abs(y) < 1e-8
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.where(small, 1.0 + 0.5 * y, y / -np.expm1(-np.where(small, 1.0, y)))
    return float(out) if out.ndim == 0 else out


def intraband_kernel(K, Q):
    """Off-diagonal (gain) part of the scale-free kernel: rate Q -> K."""
    return scale_free_rate(Q, K)


def _symmetric_rate(y):
    # F(y) exp(-y/2) = (y/2) / sinh(y/2), even in y
    h = 0.5 * np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(np.abs(h) < 1e-8, 1.0 - h * h / 6.0, h / np.sinh(np.where(h == 0, 1.0, h)))


@dataclass(frozen=True)
class DiffusionEstimate:
    D: float
    c_d: float
    abserr: float


def _loss_rate(K: float, epsabs: float) -> tuple[float, float]:
    """tau_s^-1(K) tau_r = int dQ F((K^2 - Q^2)/2), using evenness in Q."""
    f = lambda Q: scale_free_rate(K, Q)  # noqa: E731
    K = abs(K)
    a, ea = quad(f, 0.0, K, epsabs=epsabs / 4, limit=200) if K > 0 else (0.0, 0.0)
    b, eb = quad(f, K, np.inf, epsabs=epsabs / 4, limit=200)
    return 2.0 * (a + b), 2.0 * (ea + eb)


def diffusion_quadrature(g, params: ModelParams, inner_tol: float = 1e-9, outer_tol: float = 1e-8):
    """Diffusion coefficient from the relaxation-time solution of the Wigner kinetics.

    D = int dk rho_0(k) tau_s(k) v(k)^2 with the Maxwell weight rho_0, the
    leading-order scale-free scattering rate and the band-bottom velocity.
    In scaled momenta this collapses to D = I (sqrt(beta)/alpha) (g/(1-g))^{3/2},
    I = int dK exp(-K^2/2) K^2 / (sqrt(2 pi) Gamma(K)), so c_D = I.
    """
    if not 0 < g < 1:
        raise ValueError(f"diffusion_quadrature requires 0 < g < 1, got {g}")
    inner_errs = []

    def integrand(K):
        gam, err = _loss_rate(K, inner_tol)
        inner_errs.append(err / gam)
        return np.exp(-0.5 * K * K) * K * K / (np.sqrt(2.0 * np.pi) * gam)

    half, err = quad(integrand, 0.0, np.inf, epsabs=outer_tol / 2, limit=200)
    c_d = 2.0 * half
    # inner relative errors propagate linearly into the outer integral
    total_err = 2.0 * err + c_d * max(inner_errs)
    if err > outer_tol or max(inner_errs) > 1e3 * inner_tol:
        raise ConvergenceError(f"diffusion quadrature did not converge: error estimate {total_err:.3g}")
    D = c_d * np.sqrt(params.beta) / params.alpha * (g / (1.0 - g)) ** 1.5
    return DiffusionEstimate(D=float(D), c_d=float(c_d), abserr=float(total_err))


@dataclass(frozen=True)
class KernelSpectrum:
    """Spectrum of the discretized scale-free intraband operator (units of 1/tau_r)."""

    eigenvalues: np.ndarray
    grid_size: int
    k_max: float
    momenta: np.ndarray
    ground_state: np.ndarray

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1])


def _kernel_symmetric(grid_size: int, k_max: float):
    K = np.linspace(-k_max, k_max, grid_size)
    dK = K[1] - K[0]
    w = np.full(grid_size, dK)
    w[0] = w[-1] = 0.5 * dK
    y = np.subtract.outer(K**2, K**2) / 2.0  # y_ij: rate i -> j argument
    rate = scale_free_rate(K[:, None], K[None, :])
    loss = rate @ w  # probability-conserving loss on the truncated grid
    sw = np.sqrt(w)
    S = np.outer(sw, sw) * _symmetric_rate(y)
    S[np.diag_indices_from(S)] -= loss
    return K, w, S


def kernel_spectrum(grid_size: int = 401, k_max: float = 6.0, check_drift: bool = False) -> KernelSpectrum:
    """Eigenvalues (descending) of the scale-free intraband kernel on [-k_max, k_max].

    Trapezoid discretization; the operator is similarity-symmetrized with the
    Maxwell weight exp(-K^2/2) before diagonalization.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    K, w, S = _kernel_symmetric(grid_size, k_max)
    vals, vecs = np.linalg.eigh(S)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    v0 = vecs[:, order[0]]
    # back to population coordinates: rho_i = v_i sqrt(m_i / w_i)... up to normalization
    rho0 = v0 * np.exp(-0.25 * K**2) / np.sqrt(w)
    rho0 = rho0 / (rho0 @ w)
    if check_drift:
        wider = kernel_spectrum(2 * grid_size - 1, 2 * k_max)
        drift = abs(wider.gap - vals[1]) / abs(wider.gap)
        if drift > 1e-3:
            raise ConvergenceError(f"kernel gap drifts by {drift:.2e} when k_max is doubled; increase k_max")
    return KernelSpectrum(eigenvalues=vals, grid_size=grid_size, k_max=k_max, momenta=K, ground_state=rho0)
