"""Kinetics of bath-assisted annealing in the transverse-field Ising chain."""
from .annealing import (
    CrossoverReport,
    OptimumReport,
    glauber_time,
    integrate_density,
    kz_comparison,
    log_law_density,
    optimum,
    scaled_curves,
    solve_crossover,
    solve_g0,
)
from .chain import (
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
    thermal_momentum,
    thermal_wavelength,
)
from .qbe import PopulationState, evolve, fermi_dirac_state, mean_density, qbe_rhs, relaxation_rate
from .rates import (
    C_D,
    KernelSpectrum,
    TransitionRateTable,
    bose_occupation,
    coupling_coeffs,
    diffusion_closed,
    diffusion_quadrature,
    emission_weight,
    intraband_kernel,
    kernel_spectrum,
    momentum_relaxation_rate,
    rate_table,
    recombination_rate_asymptotic,
    recombination_rate_exact,
    transition_rate,
)
from .schedule import DensityTrajectory, Schedule

__version__ = "0.1.0"
