"""Spatially uniform quantum Boltzmann equation for the fermion populations.

The state is the occupation rho_k on a :class:`MomentumGrid`.  Because all
rates are symmetric under k -> -k, the time integration works on the N/2
positive momenta; the +-q partner terms are folded into reduced rate matrices.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import BDF

from .chain import (
    AccuracyWarning,
    ModelParams,
    MomentumGrid,
    dispersion,
    fermi_dirac,
    thermal_density_asymptotic,
    thermal_density_exact,
)
from .rates import emission_weight, rate_table
from .schedule import DensityTrajectory, Schedule

log = logging.getLogger(__name__)

__all__ = [
    "PopulationState",
    "StiffnessError",
    "evolve",
    "fermi_dirac_state",
    "mean_density",
    "qbe_rhs",
    "reduced_rates",
    "relax",
]

BOUND_TOL = 1e-12


class StiffnessError(RuntimeError):
    def __init__(self, t, msg):
        super().__init__(f"integration failed at t = {t:.6g}: {msg}")
        self.t = t


@dataclass(frozen=True)
class PopulationState:
    rho: np.ndarray
    t: float
    g: float
    grid: MomentumGrid

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != (self.grid.n_sites,):
            raise ValueError(f"rho has shape {rho.shape}, grid has {self.grid.n_sites} modes")
        if np.any(rho < -BOUND_TOL) or np.any(rho > 1 + BOUND_TOL):
            raise ValueError("occupations must lie in [0, 1]")
        object.__setattr__(self, "rho", rho)

    @property
    def positive_half(self) -> np.ndarray:
        return self.rho[self.grid.n_sites // 2:]

    @classmethod
    def from_half(cls, half, t, g, grid):
        half = np.clip(half, 0.0, 1.0)
        return cls(np.concatenate([half[::-1], half]), t, g, grid)


def fermi_dirac_state(g, params: ModelParams, t: float = 0.0, grid: MomentumGrid | None = None):
    grid = grid or params.grid
    return PopulationState(fermi_dirac(g, params.beta, grid), t, g, grid)


def mean_density(state: PopulationState) -> float:
    return float(np.mean(state.rho))


def qbe_rhs(state: PopulationState, params: ModelParams, table=None) -> np.ndarray:
    """d rho_k / dt on the full grid, with rates evaluated at state.g."""
    table = table or rate_table(state.g, params, state.grid)
    rho = state.rho
    hole = 1.0 - rho
    Wi, Wr, Wg = table.intra, table.rec, table.gen
    gain = hole * (Wi.T @ rho)
    loss = rho * (Wi @ hole)
    return gain - loss + hole * (Wg @ hole) - rho * (Wr @ rho)


def reduced_rates(g, params: ModelParams, grid: MomentumGrid):
    """Rate matrices on the positive momenta with the -q partners folded in.

    Returns (intra, rec, gen); intra[k, q] is the rate k -> q summed over +-q.
    """
    k = grid.positive
    eps = dispersion(g, k)
    c = (g - np.cos(k)) / eps
    pref = 8.0 * np.pi * params.alpha / grid.n_sites
    cc = np.multiply.outer(c, c)
    beta = params.beta
    intra = pref * emission_weight(np.subtract.outer(eps, eps), beta) * (1.0 + cc)
    big = np.add.outer(eps, eps)
    ang = np.maximum(1.0 - cc, 0.0)
    rec = pref * emission_weight(big, beta) * ang
    gen = pref * emission_weight(-big, beta) * ang
    return intra, rec, gen


class _ReducedSystem:
    """RHS and Jacobian of the reduced QBE, caching rate matrices on the last g."""

    def __init__(self, params, grid, g_of_t, interband=True):
        self.params = params
        self.interband = interband
        self.grid = grid
        self.g_of_t = g_of_t
        self._g = None
        self._mats = None

    def mats(self, t):
        g = float(self.g_of_t(t))
        if g != self._g:
            self._mats = reduced_rates(g, self.params, self.grid)
            if not self.interband:
                self._mats = (self._mats[0], np.zeros_like(self._mats[1]), np.zeros_like(self._mats[2]))
            self._g = g
        return self._mats

    def rhs(self, t, rho):
        Wi, Wr, Wg = self.mats(t)
        hole = 1.0 - rho
        return hole * (Wi.T @ rho) - rho * (Wi @ hole) + hole * (Wg @ hole) - rho * (Wr @ rho)

    def jac(self, t, rho):
        Wi, Wr, Wg = self.mats(t)
        hole = 1.0 - rho
        J = hole[:, None] * Wi.T + rho[:, None] * Wi - hole[:, None] * Wg - rho[:, None] * Wr
        diag = -(Wi.T @ rho) - (Wi @ hole) - (Wg @ hole) - (Wr @ rho)
        J[np.diag_indices_from(J)] += diag
        return J


def _audit(y) -> int:
    return int(np.count_nonzero((y < -BOUND_TOL) | (y > 1 + BOUND_TOL)))


def _integrate(system, y0, t0, t_end, rtol, atol, on_step, max_step=np.inf):
    solver = BDF(system.rhs, t0, y0, t_end, rtol=rtol, atol=atol, jac=system.jac, max_step=max_step)
    violations = 0
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessError(solver.t, msg)
        violations += _audit(solver.y)
        on_step(solver)
    return solver, violations


def evolve(initial: PopulationState, schedule: Schedule, params: ModelParams, output_stride: int = 1,
           rtol: float = 1e-8, atol: float = 1e-14):
    """Integrate the QBE along the linear schedule from initial.g down to schedule.g_final.

    Returns (trajectory, final_state).  The trajectory records every
    ``output_stride``-th accepted step; ``trajectory.meta['bound_violations']``
    counts steps where a population left [0, 1] by more than 1e-12.
    """
    if output_stride < 1:
        raise ValueError("output_stride must be >= 1")
    v = schedule.v
    if v >= 2.0 / params.beta:
        warnings.warn(f"v = {v} is not slow compared with the collision rate k_B T / hbar",
                      AccuracyWarning, stacklevel=2)
    grid = initial.grid
    g_start = initial.g
    t0 = initial.t
    t_end = t0 + (g_start - schedule.g_final) / v

    def g_of_t(t):
        return g_start - v * (t - t0)

    system = _ReducedSystem(params, grid, g_of_t)
    rows = [(t0, g_start, mean_density(initial))]
    count = [0]

    def record(solver):
        count[0] += 1
        if count[0] % output_stride == 0 or solver.status == "finished":
            rows.append((solver.t, g_of_t(solver.t), float(np.mean(solver.y))))

    solver, violations = _integrate(system, initial.positive_half.copy(), t0, t_end, rtol, atol, record)
    if violations:
        log.warning("QBE populations left [0, 1] on %d mode-steps", violations)
    t, g, n = map(np.array, zip(*rows))
    g = np.maximum(g, schedule.g_final)
    n_exact = np.array([thermal_density_exact(gi, params.beta, grid) for gi in g])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        n_asym = np.array([thermal_density_asymptotic(gi, params.beta) for gi in g])
    traj = DensityTrajectory(t, g, n, n_exact, schedule, n_th_asym=n_asym, rate_source="qbe",
                             meta={"bound_violations": violations, "steps": count[0]})
    final = PopulationState.from_half(solver.y, solver.t, float(g_of_t(solver.t)), grid)
    return traj, final


def relax(initial: PopulationState, params: ModelParams, t_eval, rtol: float = 1e-10, atol: float = 1e-16,
          interband: bool = True):
    """Evolve at fixed g = initial.g; returns the populations (positive half) at t_eval.

    interband=False keeps only intraband scattering, which conserves the
    particle number and isolates momentum relaxation.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    grid = initial.grid
    system = _ReducedSystem(params, grid, lambda t: initial.g, interband)
    out = np.empty((len(t_eval), grid.n_sites // 2))
    pos = [0]
    t0 = initial.t
    while pos[0] < len(t_eval) and t_eval[pos[0]] <= t0:
        out[pos[0]] = initial.positive_half
        pos[0] += 1

    def record(solver):
        if pos[0] >= len(t_eval):
            return
        dense = None
        while pos[0] < len(t_eval) and t_eval[pos[0]] <= solver.t:
            dense = dense or solver.dense_output()
            out[pos[0]] = dense(t_eval[pos[0]])
            pos[0] += 1

    _, violations = _integrate(system, initial.positive_half.copy(), t0, t_eval[-1], rtol, atol, record)
    if violations:
        log.warning("QBE populations left [0, 1] on %d mode-steps", violations)
    return out


def linearized_operator(g, params: ModelParams, grid: MomentumGrid | None = None, interband: bool = False):
    """Jacobian of the reduced QBE at the Fermi-Dirac fixed point."""
    grid = grid or params.grid
    fd = fermi_dirac(g, params.beta, grid)[grid.n_sites // 2:]
    return _ReducedSystem(params, grid, lambda t: g, interband).jac(0.0, fd), fd


def relaxation_rate(g, params: ModelParams, grid: MomentumGrid | None = None, window=(3.0, 12.0), n_t: int = 200):
    """Late-time decay rate (units of 1/tau_r) of an energy perturbation of Fermi-Dirac at fixed g.

    The perturbation is the number-conserving mode rho_FD(1-rho_FD)(eps - <eps>),
    i.e. a temperature change of the Maxwell tail.  Linear evolution under
    the intraband operator is done exactly by eigen-decomposition of its
    detailed-balance symmetrization, and ln|dE(t)| is fitted over ``window``
    (in units of tau_r) to c - rate t - p ln t, which absorbs the algebraic
    prefactor from the continuum edge.
    """
    from .rates import momentum_relaxation_rate

    grid = grid or params.grid
    J, fd = linearized_operator(g, params, grid)
    m = fd * (1.0 - fd)
    eps = dispersion(g, grid.positive)
    # detailed balance: diag(1/sqrt m) J diag(sqrt m) is symmetric
    r = np.sqrt(m)
    S = J * r[None, :] / r[:, None]
    S = 0.5 * (S + S.T)
    lam, U = np.linalg.eigh(S)
    c = np.sum(m * eps) / np.sum(m)
    delta0 = m * (eps - c)
    coeff = U.T @ (delta0 / r)
    proj = U.T @ (r * (eps - c))  # energy observable sum_k (eps_k - c) delta_k
    tr = momentum_relaxation_rate(g, params)
    tau = np.linspace(window[0], window[1], n_t)
    obs = np.array([np.sum(proj * coeff * np.exp(lam * ti / tr)) for ti in tau])
    A = np.column_stack([np.ones_like(tau), -tau, -np.log(tau)])
    sol = np.linalg.lstsq(A, np.log(np.abs(obs)), rcond=None)[0]
    return float(sol[1])
