//! Dense kernels: Householder thin QR, cyclic Jacobi eigensolver, truncated
//! symmetric SVD by subspace iteration, and a three-real-root cubic solver.

mod cubic;
mod eig;
mod qr;
mod svd;

pub use cubic::{cubic_real_roots, CubicCoeffs};
pub use eig::{eig_sym, SymEig, JACOBI_MAX_SWEEPS};
pub use qr::{thin_qr, QrThin, QR_RANK_TOL};
pub use svd::{subspace_iteration, svd_sym_truncated, SubspaceOptions, SubspaceResult, SymSvd};

use nalgebra::DMatrix;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
