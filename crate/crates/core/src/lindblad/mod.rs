//! Deterministic evolutions: the gyroscope semigroup, the position-resolved
//! PDEs and the invariant-state analysis.

pub mod generator;
pub mod pde;

pub use generator::{
    ballistic_speed, evolve_exact, evolve_rho_g, invariant_state, lindblad_rhs, residual, semigroup, BallisticSpeed,
    InvariantStates, LindbladGenerator, RhsWorkspace,
};
pub use pde::{evolve_k, evolve_q, Grid, KKernel, QField, CFL};
