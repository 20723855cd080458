//! Finite-`N` eigenvalue dynamics and their comparison with the limiting
//! Burgers solution.

pub mod bru;
pub mod burgers;

pub use bru::{
    bru_step, bru_step_with, drift, initial_spectrum, integrate, sampled_spectrum, sde_endpoint, EigenState,
};
pub use burgers::{burgers_validate, z_grid, BurgersPoint, BurgersReport};
