//! Numerical tolerances shared by every module.
//!
//! Relative thresholds are multiplied by a problem scale (usually a
//! Frobenius norm or the power budget) at the point of use.

/// Maximum relative asymmetry `|m_ij - conj(m_ji)|` admitted into a [`HermMatrix`](crate::HermMatrix).
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative positive-definiteness threshold: `min eig > PD_TOL * ||M||_F`.
pub const PD_TOL: f64 = 1e-10;

/// Relative dead zone used for eigenvalue sign and rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Relative threshold below which a Hermitian difference counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Slack on the trace constraint `Tr(K) <= P`.
pub const TRACE_SLACK: f64 = 1e-9;

/// Bound on the condition number of any matrix we invert while
/// assembling Riccati solutions.
pub const MAX_BASIS_COND: f64 = 1e12;

/// Residual ceiling for a constructed Riccati solution.
pub const RICCATI_TOL: f64 = 1e-8;

/// Tolerance on `|achievability - converse|` for a certified report.
pub const GAP_TOL: f64 = 1e-6;

/// Definiteness threshold `PD_TOL * ‖M‖_F` for a matrix of the given norm.
pub fn pd_threshold(frobenius: f64) -> f64 {
    PD_TOL * frobenius.max(f64::MIN_POSITIVE)
}
