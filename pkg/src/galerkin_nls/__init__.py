"""Spectral Galerkin simulation of the stochastic nonlinear Schroedinger equation
with multiplicative Stratonovich noise and Littlewood-Paley smoothed projectors."""

from .integrator import (
    BlowUpError,
    ConvergenceError,
    CoupledRuns,
    SchemeConfig,
    Trajectory,
    coupled_runs,
    read_coeff_dump,
    run_ensemble,
    run_path,
    step_euler_maruyama,
    step_split_midpoint,
    write_coeff_dump,
    write_trajectory_csv,
)
from .littlewood_paley import (
    DyadicPartition,
    ProjectorKind,
    apply_projector,
    opnorm_lower_bound,
    psi,
    rho_dot,
    rho_m,
)
from .noise import NoiseModel, WienerDriver, apply_Bm, mu, mu_n, noise_drift_cancellation
from .physics import PowerNonlinearity, Sign, energy, eval_F, eval_Fhat, galerkin_F
from .spectral import (
    Field,
    GeometryKind,
    SpectralBasis,
    analyze,
    apply_operator_power,
    build_basis,
    norm,
    synthesize,
)

__version__ = "0.1.0"
