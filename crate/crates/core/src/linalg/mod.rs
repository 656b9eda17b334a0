//! Dense kernels for small symmetric/Hermitian matrices.
//!
//! Everything is plain `Vec`-backed, row-major, and sized for desk-scale
//! problems (dimensions in the tens). Eigendecompositions use cyclic Jacobi
//! sweeps: slow in the O() sense, but bit-for-bit deterministic, accurate to
//! machine precision on symmetric input, and free of external BLAS.

mod complex;
mod real;

pub use complex::{CMat, cdot, cnorm_sqr};
pub use real::{RChol, RMat};

/// Scalar type used for complex data throughout the crate.
pub type Cplx = num_complex::Complex<f64>;
