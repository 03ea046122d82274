//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is small-dimension, allocation-happy and pure; the
//! problem sizes of interest are a handful of antennas.

mod block;
mod eigen;
mod lu;
mod matrix;
mod psd;

pub use block::block2x2_inv;
pub use eigen::{eig_general, eig_herm, svd, EigenGeneral, EigenH, Svd};
pub use lu::{inverse, log_det_general, solve, solve_right, Lu};
pub use matrix::{HermMatrix, Matrix, C64, ONE, ZERO};
pub use psd::{
    cholesky, inv_pd, is_pd, logdet_chol, logdet_pd, loewner_compare, project_capped_simplex, project_psd_trace,
    spd_product_eigs, sqrt_pd, sqrt_psd, LoewnerClass,
};
