pub mod density;
pub mod eigen;
pub mod expm;
pub mod matrix;
pub mod ops;
pub mod pauli;
pub mod random;
pub mod svd;

pub use density::DensityMatrix;
pub use eigen::{min_eigenvalue, HermitianEigen};
pub use expm::matrix_exp;
pub use matrix::{inner, mul_adjoint_into, mul_into, require_finite, vec_norm, CMatrix};
pub use ops::{embed_operator, partial_trace, partial_trace_middle, psd_project, trace_distance, trace_norm, Subsystem};
pub use svd::Svd;
