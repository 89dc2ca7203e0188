//! The discrete open quantum Brownian motion.

pub mod dilation;
pub mod kraus;
pub mod lattice;
pub mod params;
pub mod toyfock;
pub mod unravel;

pub use dilation::{dilation_check, r_tau, shift_matrix};
pub use kraus::{completeness_defect, gyro_channel, kraus_exact, kraus_from_v, kraus_pair, kraus_truncated, v_tau, v_tau_generator};
pub use lattice::{
    lattice_kernel, oqbm_iterate, oqbm_step, oqbm_step_kraus, window_half_sites, window_half_width, BoundaryPolicy,
    LatticeField,
};
pub use params::OQBMParams;
pub use toyfock::{noise_operator_dense, toyfock_evolve, toyfock_evolve_factorized, ToyFockRegister, MAX_PROBES};
pub use unravel::{probe_measurement_unravel, unravel_final_positions, ProbeStepper};
