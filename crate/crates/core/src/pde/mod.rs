//! Scalar conservation law `u_t + G(u)_x = 0` with a tabulated flux.

mod godunov;
mod profile;
mod riemann;

pub use godunov::{
    evolve_grid, godunov_flux, godunov_step, initial_grid, solve_cauchy, solve_cauchy_snapshots, InitialData, PdeParams,
};
pub use profile::{
    approximate_by_steps, delta_distance, GridFunction, MassMeasure, PiecewiseProfile, StepApproximation, StepProfile,
};
pub use riemann::{
    riemann_cells, riemann_mass, riemann_profile, riemann_profile_with_step, riemann_value, riemann_value_unchecked,
    RiemannValue, PROFILE_STEP,
};
