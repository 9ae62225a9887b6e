//! Closed-form quantities for the CUE pair statistic: the four-term variance
//! formula, the off-diagonal sums that it is controlled by, the structured
//! operators used to bound them, and the known joint cumulants of traces.

mod cumulants;
mod lemma;
mod operators;
mod variance;

pub use cumulants::{joint_cumulant_exact, moment_identity_rhs};
pub use lemma::{lemma21_sums, CoefficientVector, Lemma21Sums};
pub use operators::{a_matrix_apply, a_matrix_norm, r_operator_norm, OperatorNorms};
pub use variance::{variance_exact, variance_tail_exact, VarianceBreakdown};

/// Default truncation of infinite tails: `32 N`.
pub fn default_k_tail(n: usize) -> usize {
    32 * n
}
