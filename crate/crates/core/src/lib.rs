//! Simulation and exact theory for pair-counting statistics
//! `S_N(f) = sum_{i != j} f(theta_i - theta_j)` of circular random-matrix
//! ensembles.
//!
//! * [`spectral`]: even test functions given by Fourier coefficients.
//! * [`ensembles`]: exact CUE sampling and a Metropolis sampler for general `beta`.
//! * [`statistics`]: power traces and `S_N` by two independent routes.
//! * [`exact`]: the CUE variance formula, off-diagonal sums, operator norms,
//!   trace cumulants.
//! * [`limit`]: the exponential-sum limit law and its MGF.
//! * [`montecarlo`]: estimators and the seeded parallel experiment runner.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the summation formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod ensembles;
pub mod error;
pub mod exact;
pub mod limit;
pub mod montecarlo;
pub mod spectral;
pub mod statistics;
pub mod stream;
pub mod summation;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
