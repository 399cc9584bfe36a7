import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qa_kinetics.chain import AccuracyWarning, ModelParams, MomentumGrid, dispersion
from qa_kinetics.qbe import (
    PopulationState,
    evolve,
    fermi_dirac_state,
    linearized_operator,
    mean_density,
    qbe_rhs,
    relax,
    relaxation_rate,
    _ReducedSystem,
)
from qa_kinetics.schedule import Schedule

SMALL = ModelParams(n_sites=32, beta=10.0)


def _symmetric_state(half, g, grid):
    return PopulationState.from_half(half, 0.0, g, grid)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), g=st.floats(0.3, 1.5))
def test_reduced_rhs_matches_full(seed, g):
    grid = SMALL.grid
    half = np.random.default_rng(seed).uniform(0, 1, grid.n_sites // 2)
    state = _symmetric_state(half, g, grid)
    full = qbe_rhs(state, SMALL)
    red = _ReducedSystem(SMALL, grid, lambda t: g).rhs(0.0, half)
    assert np.allclose(full[grid.n_sites // 2:], red, rtol=1e-11, atol=1e-16)
    # mirror symmetry survives
    assert np.allclose(full, full[::-1])


def test_jacobian_against_finite_differences():
    grid = SMALL.grid
    sys_ = _ReducedSystem(SMALL, grid, lambda t: 0.7)
    y = np.random.default_rng(3).uniform(0.1, 0.9, grid.n_sites // 2)
    J = sys_.jac(0.0, y)
    h = 1e-5
    num = np.column_stack([(sys_.rhs(0, y + h * e) - sys_.rhs(0, y - h * e)) / (2 * h) for e in np.eye(len(y))])
    assert np.allclose(J, num, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("g", [0.5, 0.8, 1.1])
def test_fermi_dirac_is_fixed_point(g):
    p = ModelParams(n_sites=128)
    state = fermi_dirac_state(g, p)
    assert np.max(np.abs(qbe_rhs(state, p))) < 1e-15


def test_state_validation():
    grid = MomentumGrid(8)
    with pytest.raises(ValueError):
        PopulationState(np.full(8, 1.5), 0.0, 0.5, grid)
    with pytest.raises(ValueError):
        PopulationState(np.zeros(6), 0.0, 0.5, grid)



@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_relaxation_h_theorem(seed):
    # the relative entropy to Fermi-Dirac never grows and populations stay in [0, 1]
    g = 0.7
    grid = SMALL.grid
    half = np.random.default_rng(seed).uniform(0.05, 0.95, grid.n_sites // 2)
    state = _symmetric_state(half, g, grid)
    t = np.linspace(0, 200, 21)
    out = relax(state, SMALL, t)
    eps = dispersion(g, grid.positive)
    b = SMALL.beta

    def free(r):
        r = np.clip(r, 1e-300, 1 - 1e-16)
        return np.sum(b * eps * r + r * np.log(r) + (1 - r) * np.log1p(-r))

    F = np.array([free(r) for r in out])
    assert np.all(np.diff(F) <= 1e-9 * np.abs(F).max())
    assert out.min() >= -1e-12 and out.max() <= 1 + 1e-12


def test_intraband_relaxation_conserves_number():
    g = 0.7
    grid = SMALL.grid
    half = np.linspace(0.9, 0.1, grid.n_sites // 2)
    out = relax(_symmetric_state(half, g, grid), SMALL, [0.0, 50.0, 500.0], interband=False)
    assert np.allclose(out.sum(axis=1), half.sum(), rtol=1e-8)


def test_relax_reaches_fermi_dirac():
    g = 0.7
    grid = SMALL.grid
    half = np.full(grid.n_sites // 2, 0.5)
    out = relax(_symmetric_state(half, g, grid), SMALL, [1e5])
    fd = fermi_dirac_state(g, SMALL).positive_half
    assert np.allclose(out[-1], fd, atol=1e-6)


def test_linearized_operator_spectrum():
    J, fd = linearized_operator(0.8, ModelParams(n_sites=256))
    m = fd * (1 - fd)
    r = np.sqrt(m)
    S = J * r[None, :] / r[:, None]
    assert np.allclose(S, S.T, rtol=1e-8, atol=1e-12 * np.abs(S).max())
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    # number conservation leaves a zero mode, everything else decays
    assert abs(lam.max()) < 1e-10 * np.abs(lam).max()
    assert np.sort(lam)[-2] < 0


def test_relaxation_rate_near_kernel_gap():
    p = ModelParams(n_sites=1024)
    rate = relaxation_rate(0.8, p)
    assert rate == pytest.approx(3.36, rel=0.03)


def test_evolve_short_sweep():
    p = ModelParams(n_sites=64, beta=10.0)
    sched = Schedule(g_initial=1.0, v=1e-3, g_final=0.8)
    traj, final = evolve(fermi_dirac_state(1.0, p), sched, p, output_stride=2)
    assert traj.g[0] == 1.0 and traj.g[-1] == pytest.approx(0.8)
    assert np.all(np.diff(traj.g) < 0)
    assert traj.meta["bound_violations"] == 0
    assert final.g == pytest.approx(0.8)
    assert mean_density(final) == pytest.approx(traj.n_mean[-1])
    # slow relative to nothing: the density lags above equilibrium on the way down
    assert traj.n_mean[-1] > traj.n_th[-1]
    with pytest.raises(ValueError):
        evolve(fermi_dirac_state(1.0, p), sched, p, output_stride=0)


def test_evolve_warns_on_fast_sweep():
    p = ModelParams(n_sites=16, beta=10.0)
    sched = Schedule(g_initial=1.0, v=0.5, g_final=0.9)
    with pytest.warns(AccuracyWarning):
        evolve(fermi_dirac_state(1.0, p), sched, p)
