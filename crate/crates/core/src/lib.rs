//! Open quantum random walks and the open quantum Brownian motion: discrete
//! Kraus dynamics, unitary dilations, diffusive trajectories and the Lindblad
//! limit, all on small dense Hilbert spaces.
//!
//! Numerical code is generic over [`Real`]; the aliases below fix `f64`.

pub mod belavkin;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod measure;
pub mod nondemolition;
pub mod oqbm;
pub mod oqw;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tolerance;

pub use error::{Error, Result};
pub use scalar::{Real, C};
pub use tolerance::Tolerances;

pub type Complex64 = C<f64>;
pub type Matrix = linalg::CMatrix<f64>;
pub type Density = linalg::DensityMatrix<f64>;
pub type Channel = channel::KrausChannel<f64>;
pub type Kernel = oqw::OQWKernel<f64>;
pub type Params = oqbm::OQBMParams<f64>;
pub type Field = oqbm::LatticeField<f64>;
