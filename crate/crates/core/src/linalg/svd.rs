//! Truncated SVD of symmetric matrices by blocked subspace iteration.
//!
//! For symmetric `S = U Λ Uᵀ` the SVD is `U |Λ| (U sign(Λ))ᵀ`: singular
//! values are `|λ|`, left vectors are eigenvectors and right vectors differ
//! only by the eigenvalue signs.

use nalgebra::DMatrix;

use super::{eig_sym, thin_qr};
use crate::error::{Error, Result};
use crate::rng::CounterRng;

const START_SEED: u64 = 0x005E_ED0F_5B5D;

#[derive(Debug, Clone)]
pub struct SubspaceOptions {
    /// Extra block columns beyond the requested `k`.
    pub oversample: usize,
    /// Residual tolerance relative to `σ₁`.
    pub tol: f64,
    pub max_iter: usize,
    /// Ritz pairs with `|λ|` at or below this value are not required to converge.
    pub residual_floor: f64,
    /// Initial block; padded with deterministic pseudo-random columns as needed.
    pub start: Option<DMatrix<f64>>,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self {
            oversample: 2,
            tol: 1e-10,
            max_iter: 500,
            residual_floor: 0.0,
            start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceResult {
    /// Top-`k` eigenvalues by decreasing magnitude.
    pub eigvals: Vec<f64>,
    /// `N x k` eigenvectors.
    pub vectors: DMatrix<f64>,
    /// Full orthonormal block after the last Rayleigh–Ritz step; useful as a
    /// warm start for a nearby matrix.
    pub block: DMatrix<f64>,
    pub iterations: usize,
    /// Largest relative residual `‖S q − λ q‖ / σ₁` among checked pairs.
    pub max_residual: f64,
    pub converged: bool,
}

/// Truncated symmetric SVD: `k` singular values (`|λ|`, decreasing), left
/// vectors, and the sign vector that turns them into right vectors.
#[derive(Debug, Clone)]
pub struct SymSvd {
    pub singular_values: Vec<f64>,
    pub left: DMatrix<f64>,
    pub signs: Vec<f64>,
    pub iterations: usize,
}

impl SymSvd {
    /// `U · diag(sign)`.
    pub fn right(&self) -> DMatrix<f64> {
        let mut v = self.left.clone();
        for (j, mut col) in v.column_iter_mut().enumerate() {
            col *= self.signs[j];
        }
        v
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.singular_values
            .iter()
            .zip(&self.signs)
            .map(|(s, g)| s * g)
            .collect()
    }
}

pub fn svd_sym_truncated(s: &DMatrix<f64>, k: usize) -> Result<SymSvd> {
    let res = subspace_iteration(s, k, &SubspaceOptions::default())?;
    if !res.converged {
        return Err(Error::NoConvergence {
            what: "subspace iteration",
            iterations: res.iterations,
            residual: res.max_residual,
        });
    }
    Ok(SymSvd {
        singular_values: res.eigvals.iter().map(|v| v.abs()).collect(),
        signs: res
            .eigvals
            .iter()
            .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
            .collect(),
        left: res.vectors,
        iterations: res.iterations,
    })
}

/// Top-`k` eigenpairs by magnitude. Never errors on non-convergence; the
/// caller inspects `converged`.
pub fn subspace_iteration(
    s: &DMatrix<f64>,
    k: usize,
    opts: &SubspaceOptions,
) -> Result<SubspaceResult> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", s.nrows(), s.ncols()),
        });
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds N = {n}")));
    }
    if k == 0 {
        return Ok(SubspaceResult {
            eigvals: Vec::new(),
            vectors: DMatrix::zeros(n, 0),
            block: DMatrix::zeros(n, 0),
            iterations: 0,
            max_residual: 0.0,
            converged: true,
        });
    }
    let p = (k + opts.oversample).min(n);
    let mut q = thin_qr(&start_block(n, p, opts.start.as_ref()))?.v;

    let mut last = None;
    for it in 1..=opts.max_iter.max(1) {
        let z = s * &q;
        let h = q.transpose() * &z;
        let h = (&h + h.transpose()) * 0.5;
        let eig = eig_sym(&h)?;
        let w = &eig.eigvecs;
        let ritz = &q * w;
        let sz = &z * w;

        let sigma1 = eig.eigvals[0].abs();
        let mut max_res = 0.0f64;
        for j in 0..k {
            let lam = eig.eigvals[j];
            if lam.abs() <= opts.residual_floor {
                continue;
            }
            let r = (sz.column(j) - ritz.column(j) * lam).norm();
            let rel = if sigma1 > 0.0 { r / sigma1 } else { 0.0 };
            max_res = max_res.max(rel);
        }
        // The first pass only projects the random start; never accept it alone.
        let converged = sigma1 == 0.0 || (it >= 2 && max_res <= opts.tol);
        if converged || it == opts.max_iter.max(1) {
            last = Some(SubspaceResult {
                eigvals: eig.eigvals[..k].to_vec(),
                vectors: ritz.columns(0, k).into_owned(),
                block: ritz,
                iterations: it,
                max_residual: max_res,
                converged,
            });
            break;
        }
        q = thin_qr(&sz)?.v;
    }
    Ok(last.expect("at least one iteration"))
}

fn start_block(n: usize, p: usize, start: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let mut rng = CounterRng::new(START_SEED ^ ((n as u64) << 20) ^ p as u64);
    let mut m = DMatrix::from_fn(n, p, |_, _| 2.0 * rng.next_open01() - 1.0);
    if let Some(st) = start {
        if st.nrows() == n {
            let cols = st.ncols().min(p);
            m.columns_mut(0, cols).copy_from(&st.columns(0, cols));
        }
    }
    m
}
