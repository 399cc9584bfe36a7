"""Second-order polaronic shift of the fermion band and the bath-induced mixing term.

Zero-temperature bosons only.  The frequency integral

    I(a) = v.p. int_0^L  w exp(-w / w_c) / (a - w) dw

has the closed form -w_c (1 - e^{-L/w_c}) + a e^{-a/w_c} [Ei(a/w_c) - Ei((a - L)/w_c)],
used by default; :func:`pv_integral_quad` evaluates the same integral by
singularity subtraction and serves as an independent check.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expi

from .chain import AccuracyWarning, ModelParams, MomentumGrid, bogoliubov_angle, dispersion

__all__ = [
    "RenormResult",
    "integration_limit",
    "ising_renorm_factor",
    "linear_spectrum_fit",
    "mixing_term",
    "polaron_shift",
    "pv_integral",
    "pv_integral_quad",
    "renormalize",
]


def ising_renorm_factor(alpha: float, omega_c: float, omega_cutoff: float):
    """(W, exp(-W)) with W = 2 alpha ln(omega_c / omega_cutoff) for a broadband bath, else W = 0."""
    if omega_c <= 1.0:
        return 0.0, 1.0
    if omega_cutoff > omega_c:
        raise ValueError("omega_cutoff must not exceed omega_c")
    W = 2.0 * alpha * np.log(omega_c / omega_cutoff)
    if W > 0.1:
        warnings.warn(f"Ising renormalization exponent W = {W:.3g} is not small", AccuracyWarning, stacklevel=2)
    return float(W), float(np.exp(-W))


def integration_limit(params: ModelParams) -> float:
    """Upper limit of the boson frequency integral: infinite for a narrow band, omega_cutoff otherwise."""
    return np.inf if params.omega_c <= 1.0 else params.omega_cutoff


def _exp_ei(x):
    """exp(-x) Ei(x), with the asymptotic series (valid for either sign) where exp or Ei overflows."""
    x = np.asarray(x, dtype=float)
    big = np.abs(x) > 600.0
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.exp(-x) * expi(np.where(big, 1.0, x))
    xi = 1.0 / np.where(big, x, 1.0)
    series = xi * (1.0 + xi * (1.0 + xi * (2.0 + xi * (6.0 + 24.0 * xi))))
    return np.where(big, series, direct)


def pv_integral(a, omega_c: float, limit: float = np.inf):
    """Closed-form I(a) (see module docstring); a = 0 and a = L are handled as limits where finite."""
    a = np.asarray(a, dtype=float)
    c = omega_c
    if np.isinf(limit):
        base = -c
        with np.errstate(invalid="ignore"):
            pole = np.where(a == 0, 0.0, a * _exp_ei(a / c))
        out = base + pole
    else:
        base = -c * (-np.expm1(-limit / c))
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            ei_hi = np.where(a == limit, 0.0, expi(np.where(a == limit, 1.0, (a - limit) / c)))
            pole = np.where(a == 0, 0.0, a * (_exp_ei(a / c) - np.exp(-a / c) * ei_hi))
        if np.any(a == limit):
            raise ValueError("pole at the upper integration limit: principal value diverges")
        out = base + pole
    return float(out) if out.ndim == 0 else out


def pv_integral_quad(a: float, omega_c: float, limit: float = np.inf, window: float = 0.05,
                     epsabs: float = 1e-13, epsrel: float = 1e-12):
    """I(a) by singularity subtraction.

    Outside [a - d, a + d] the integrand is regular.  Inside, the symmetric
    principal value of f(a)/(a - w) vanishes, so only the regular difference
    (f(w) - f(a)) / (a - w) is integrated.  Returns (value, error estimate).
    """
    def f(w):
        return w * np.exp(-w / omega_c)

    def plain(lo, hi):
        return quad(lambda w: f(w) / (a - w), lo, hi, epsabs=epsabs, epsrel=epsrel, limit=400)

    if a <= 0 or a >= limit:
        val, err = plain(0.0, limit)
        return val, err
    d = min(window, a, (limit - a) if np.isfinite(limit) else window)
    fa = f(a)
    fp = (1.0 - a / omega_c) * np.exp(-a / omega_c)

    def regular(w):
        dw = a - w
        if abs(dw) < 1e-7:
            return -fp  # (f(w) - f(a)) / (a - w) -> -f'(a)
        return (f(w) - fa) / dw

    parts = [quad(regular, a - d, a + d, epsabs=epsabs, epsrel=epsrel, limit=400)]
    if a - d > 0:
        parts.append(plain(0.0, a - d))
    parts.append(plain(a + d, limit))
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


def _pair_terms(g, k, grid: MomentumGrid):
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kp = grid.momenta
    eps_k = dispersion(g, k)[:, None]
    eps_p = dispersion(g, kp)[None, :]
    total = bogoliubov_angle(g, k)[:, None] + bogoliubov_angle(g, kp)[None, :]
    return eps_k, eps_p, total


def polaron_shift(g, k, params: ModelParams, grid: MomentumGrid | None = None):
    """Sigma_k (scaled; the physical shift is 2 J Sigma_k), zero-temperature bosons.

    Sigma_k = (alpha/2) N^-1 sum_k' [4 cos^2(h) I(eps_k - eps_k') + 4 sin^2(h) I(eps_k + eps_k')],
    h = (theta_k + theta_k')/2.
    """
    grid = grid or params.grid
    scalar = np.ndim(k) == 0
    eps_k, eps_p, total = _pair_terms(g, k, grid)
    L = integration_limit(params)
    oc = params.omega_c
    # 4 cos^2(h) = 2 (1 + cos total), 4 sin^2(h) = 2 (1 - cos total)
    cs = np.cos(total)
    terms = 2.0 * (1.0 + cs) * pv_integral(eps_k - eps_p, oc, L) + 2.0 * (1.0 - cs) * pv_integral(eps_k + eps_p, oc, L)
    out = 0.5 * params.alpha * terms.mean(axis=1)
    return float(out[0]) if scalar else out


def mixing_term(g, k, params: ModelParams, grid: MomentumGrid | None = None):
    """Sigma^(c)_k = (alpha/2) N^-1 sum_k' sin(theta_k + theta_k') [I(eps_k - eps_k') - I(eps_k + eps_k')]."""
    grid = grid or params.grid
    scalar = np.ndim(k) == 0
    eps_k, eps_p, total = _pair_terms(g, k, grid)
    L = integration_limit(params)
    oc = params.omega_c
    terms = np.sin(total) * (pv_integral(eps_k - eps_p, oc, L) - pv_integral(eps_k + eps_p, oc, L))
    out = 0.5 * params.alpha * terms.mean(axis=1)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class RenormResult:
    k: np.ndarray
    eps: np.ndarray
    sigma: np.ndarray
    sigma_mix: np.ndarray
    sigma0: float
    slope_C: float
    residual: float


def linear_spectrum_fit(g, params: ModelParams, grid: MomentumGrid | None = None, eps_max: float = 0.3,
                        k=None):
    """Least-squares Sigma_k = sigma0 + C eps_k over positive grid momenta with eps_k < eps_max.

    Returns (sigma0, C, residual) where residual is the largest absolute fit
    error divided by the range of Sigma over the window.
    """
    grid = grid or params.grid
    if k is None:
        kp = grid.positive
        k = kp[dispersion(g, kp) < eps_max]
    k = np.asarray(k, dtype=float)
    if k.size < 8:
        raise ValueError(f"fit window holds {k.size} momenta; need at least 8")
    eps = dispersion(g, k)
    sig = polaron_shift(g, k, params, grid)
    A = np.column_stack([np.ones_like(eps), eps])
    (s0, C), *_ = np.linalg.lstsq(A, sig, rcond=None)
    span = np.ptp(sig)
    res = np.max(np.abs(A @ [s0, C] - sig)) / span if span > 0 else 0.0
    return float(s0), float(C), float(res)


def renormalize(g, params: ModelParams, grid: MomentumGrid | None = None, k=None, eps_max: float = 0.3):
    """Sigma_k and Sigma^(c)_k on the positive momenta (or on ``k``) plus the long-wavelength fit."""
    grid = grid or params.grid
    k = grid.positive if k is None else np.asarray(k, dtype=float)
    s0, C, res = linear_spectrum_fit(g, params, grid, eps_max)
    return RenormResult(k=k, eps=dispersion(g, k), sigma=polaron_shift(g, k, params, grid),
                        sigma_mix=mixing_term(g, k, params, grid), sigma0=s0, slope_C=C, residual=res)
