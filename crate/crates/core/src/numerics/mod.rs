//! Small dense linear algebra, a bounded simplex optimizer and distribution
//! functions. Dimensions here are tiny (2 to ~10), so everything is direct.

pub mod dist;
pub mod linalg;
pub mod matrix;
pub mod optimize;

pub use dist::{cdf, normal_cdf, normal_pdf, normal_quantile, sf, Distribution};
pub use linalg::{
    cholesky, covariance, generalized_symmetric_eigen, ols, spd_inverse, spectral_radius,
    symmetric_eigen, EigenSolution, LeastSquares,
};
pub use matrix::Matrix;
pub use optimize::{minimize, minimize_default, Minimum};

/// Relative pivot size below which a design is rank deficient.
pub const PIVOT_TOLERANCE: f64 = 1e-10;
/// Relative asymmetry tolerated by symmetric routines.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Simplex spread tolerance.
pub const OPTIMIZER_TOLERANCE: f64 = 1e-8;
/// Objective evaluation cap for the simplex optimizer.
pub const OPTIMIZER_MAX_ITER: usize = 5000;
/// Spectral radius above `1 + STABILITY_MARGIN` marks a companion matrix unstable.
pub const STABILITY_MARGIN: f64 = 1e-8;
