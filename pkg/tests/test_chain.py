import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qa_kinetics.chain import (
    AccuracyWarning,
    ModelParams,
    MomentumGrid,
    bogoliubov_angle,
    dispersion,
    effective_mass,
    fermi_dirac,
    gap,
    kz_density,
    thermal_density_asymptotic,
    thermal_density_exact,
    thermal_wavelength,
)


def test_dispersion_examples():
    assert dispersion(1.0, 0.0) == 0.0
    assert np.allclose(dispersion(0.0, np.linspace(-3, 3, 7)), 1.0)
    assert dispersion(2.0, np.pi) == pytest.approx(3.0)


def test_dispersion_matches_textbook_form():
    g, k = 0.73, np.linspace(-np.pi, np.pi, 101)
    assert np.allclose(dispersion(g, k), np.sqrt((g - np.cos(k)) ** 2 + np.sin(k) ** 2), rtol=1e-13)


def test_angle_examples():
    assert bogoliubov_angle(2.0, 0.0) == 0.0
    assert bogoliubov_angle(0.7, np.pi) == pytest.approx(0.0, abs=1e-15)
    k = 0.01
    # at g = 1 the angle is exactly pi/2 - k/2
    assert bogoliubov_angle(1.0, k) == pytest.approx(np.pi / 2 - k / 2, abs=1e-12)
    with pytest.raises(ValueError):
        bogoliubov_angle(1.0, 0.0)


def test_angle_components():
    g, k = 0.8, np.linspace(-3, 3, 13)
    th, eps = bogoliubov_angle(g, k), dispersion(g, k)
    assert np.allclose(np.cos(th), (g - np.cos(k)) / eps)
    assert np.allclose(np.sin(th), np.sin(k) / eps)


def test_gap_and_mass():
    assert gap(1.0) == 0.0
    assert gap(0.9) == pytest.approx(0.2)
    assert gap(1.1) == pytest.approx(0.2)
    assert effective_mass(0.5) == pytest.approx(0.5)
    assert effective_mass(0.8) == pytest.approx(0.125)
    assert effective_mass(1 - 1e-12) < 1e-11
    with pytest.raises(ValueError):
        effective_mass(1.0)


def test_thermal_wavelength():
    assert thermal_wavelength(0.5, 2.0) == pytest.approx(2 * np.pi)
    assert thermal_wavelength(0.9, 25.0) == pytest.approx(2 * np.pi * np.sqrt(112.5))
    assert thermal_wavelength(0.9, 25.0) == pytest.approx(66.64, abs=0.01)
    with pytest.raises(ValueError):
        thermal_wavelength(1.2, 25.0)


def test_grid_convention():
    grid = MomentumGrid(8)
    assert np.allclose(grid.momenta, np.pi * (2 * np.arange(8) + 1 - 8) / 8)
    assert np.allclose(grid.momenta[grid.mirror_index()], -grid.momenta)
    assert 0.0 not in grid.momenta
    with pytest.raises(ValueError):
        MomentumGrid(7)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(alpha=-1)
    with pytest.raises(ValueError):
        ModelParams(n_sites=6 + 1)
    with pytest.warns(AccuracyWarning):
        ModelParams(alpha=0.3)


def test_thermal_density_limits():
    grid = MomentumGrid(256)
    assert thermal_density_exact(0.5, 0.0, grid) == 1.0
    assert thermal_density_exact(0.5, 1e4, grid) == 0.0


def test_thermal_density_against_integral():
    # oracle: the continuum integral int dk / 2pi exp(-beta eps_k)
    g, beta = 0.9, 25.0
    ref, _ = quad(lambda k: np.exp(-beta * dispersion(g, k)) / np.pi, 0, np.pi, epsabs=1e-14, points=[0.1])
    assert thermal_density_exact(g, beta, MomentumGrid(4096)) == pytest.approx(ref, rel=1e-9)


def test_thermal_density_converged_in_n():
    for g in (0.96, 0.9, 0.7):
        a = thermal_density_exact(g, 25.0, MomentumGrid(4096))
        b = thermal_density_exact(g, 25.0, MomentumGrid(8192))
        assert abs(a / b - 1) < 1e-6


def test_thermal_density_asymptotic_values():
    assert thermal_density_asymptotic(0.9, 25.0) == pytest.approx(np.sqrt(0.1 / (2 * np.pi * 22.5)) * np.exp(-2.5), rel=1e-12)
    assert thermal_density_asymptotic(1 - 1e-9, 25.0) < 1e-5
    assert thermal_density_asymptotic(0.9, 1e3) < 1e-45
    with warnings.catch_warnings():
        warnings.simplefilter("error", AccuracyWarning)
        with pytest.raises(AccuracyWarning):
            thermal_density_asymptotic(0.95, 25.0)


def test_asymptotic_ratio_approaches_one():
    # frozen from the continuum quad integral; the leading-order closed form underestimates
    grid = MomentumGrid(8192)
    beta = 25.0
    ratios = []
    for x in (3.0, 5.0, 8.0):
        g = 1 - x / beta
        ratios.append(thermal_density_exact(g, beta, grid) / thermal_density_asymptotic(g, beta))
    assert ratios[0] > ratios[1] > ratios[2] > 1.0
    assert ratios == pytest.approx([1.115823, 1.072736, 1.048192], abs=1e-5)
    # marginal regime: about 30% above the closed form at beta (1 - g) = 1
    r = thermal_density_exact(0.96, beta, MomentumGrid(4096)) / thermal_density_asymptotic(0.96, beta)
    assert r == pytest.approx(1.3062, abs=1e-3)


def test_ratio_to_one_at_large_beta():
    # fixed beta (1 - g) = 5, growing beta: the curvature correction of the band vanishes
    x = 5.0
    r = [thermal_density_exact(1 - x / b, b, MomentumGrid(8192)) / thermal_density_asymptotic(1 - x / b, b)
         for b in (25.0, 100.0, 400.0)]
    assert r[0] > r[1] > r[2] > 1.0


def test_fermi_dirac_small_beta_eps():
    grid = MomentumGrid(64)
    fd = fermi_dirac(0.5, 1e-9, grid)
    assert np.allclose(fd, 0.5, atol=1e-8)
    assert np.all(fermi_dirac(0.5, 300.0, grid) > 0)


def test_kz_density():
    assert kz_density(8 * np.pi) == pytest.approx(1.0)
    assert kz_density(2.85e-7) == pytest.approx(1.065e-4, rel=1e-3)
    assert kz_density(0.0) == 0.0


def test_semiclassical_expansion():
    # E_k = 2 eps_k against Delta + k^2 / 2 m_e: the remainder is O(k^4)
    g = 0.8
    k = np.array([0.01, 0.02, 0.04])
    m = effective_mass(g)
    rem = np.abs(2 * dispersion(g, k) - (gap(g) + k**2 / (2 * m)))
    C = rem / k**4
    assert np.all(np.isfinite(C))
    assert C.max() / C.min() < 1.1


@given(g=st.floats(0.0, 3.0), k=st.floats(-np.pi, np.pi))
def test_band_minimum_and_symmetry(g, k):
    eps = dispersion(g, k)
    assert eps >= abs(g - 1) - 1e-12
    assert dispersion(g, -k) == eps


@given(g=st.floats(0.01, 3.0).filter(lambda g: abs(g - 1) > 1e-6), k=st.floats(1e-6, np.pi))
def test_angle_odd(g, k):
    assert bogoliubov_angle(g, -k) == pytest.approx(-bogoliubov_angle(g, k), abs=1e-14)


@settings(max_examples=30)
@given(g=st.floats(0.05, 0.95), beta=st.floats(1.0, 60.0))
def test_density_in_unit_interval(g, beta):
    grid = MomentumGrid(128)
    n = thermal_density_exact(g, beta, grid)
    fd = fermi_dirac(g, beta, grid)
    assert 0 <= fd.mean() <= n * (1 + 1e-12) <= 1
