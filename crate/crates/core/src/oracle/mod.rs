//! Deterministic reference computations: the mean-field ODE, exact
//! power-control equilibria, feasibility and local stability.

mod equilibrium;
mod ode;
mod spectrum;

pub use equilibrium::{
    check_feasibility, minimal_equilibrium, power_control_equilibrium_linear, EquilibriumReport, EquilibriumStatus,
    Feasibility, SpectrumSummary, INTERIOR_MARGIN,
};
pub use ode::{integrate_ode, OdeOptions, OdeTrajectory};
pub use spectrum::{
    jacobian_spectrum, reward_jacobian, BlockSpectrum, Eigenvalue, DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE,
};
