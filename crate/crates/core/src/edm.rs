//! Euclidean distance matrices and their rank-(d+2) factorization.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Default relative tolerance for [`numerical_rank`].
pub const RANK_REL_TOL: f64 = 1e-10;

/// `N x d` node coordinates, one node per row.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCloud {
    pub coords: DMatrix<f64>,
    pub seed: u64,
    pub dist_id: String,
}

impl NodeCloud {
    /// A cloud that did not come from a sampler.
    pub fn from_coords(coords: DMatrix<f64>) -> Self {
        Self {
            coords,
            seed: 0,
            dist_id: "explicit".into(),
        }
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        Self::from_coords(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn d(&self) -> usize {
        self.coords.ncols()
    }
}

/// Symmetric matrix of squared pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct EdmMatrix {
    pub entries: DMatrix<f64>,
}

impl EdmMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// `Δ = X D Xᵀ` with row `i` of `X` equal to `[1, p_iᵀ, ‖p_i‖²]`.
///
/// `D` is `-2 I_d` on the coordinate block and pairs the constant column
/// with the squared-norm column: `D[0][d+1] = D[d+1][0] = 1`, every other
/// entry zero. This yields `‖p_i‖² − 2⟨p_i, p_j⟩ + ‖p_j‖²`. The purely
/// diagonal `diag(1, -2, ..., -2, 1)` would give `1 + ‖p_i‖²‖p_j‖² − 2⟨p_i, p_j⟩`
/// instead; both are invertible, so the column space of `Δ` is `span(X)`
/// either way.
#[derive(Debug, Clone)]
pub struct EdmFactorization {
    pub x: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl EdmFactorization {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.x * &self.d * self.x.transpose()
    }
}

fn require_pairs(cloud: &NodeCloud) -> Result<()> {
    if cloud.n() < 2 {
        return Err(Error::InvalidParameter(format!(
            "N must be >= 2, got {}",
            cloud.n()
        )));
    }
    Ok(())
}

/// `Δ(i,j) = Σ_k (x_ik − x_jk)²`, each unordered pair computed once.
pub fn build_edm(cloud: &NodeCloud) -> Result<EdmMatrix> {
    require_pairs(cloud)?;
    let (n, d) = (cloud.n(), cloud.d());
    let p = &cloud.coords;
    let mut entries = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in 0..d {
                let diff = p[(i, k)] - p[(j, k)];
                s += diff * diff;
            }
            entries[(i, j)] = s;
            entries[(j, i)] = s;
        }
    }
    Ok(EdmMatrix { entries })
}

/// The `(d+2) x (d+2)` middle factor of `Δ = X D Xᵀ`.
pub fn structural_d(d: usize) -> DMatrix<f64> {
    let k = d + 2;
    let mut m = DMatrix::zeros(k, k);
    m[(0, k - 1)] = 1.0;
    m[(k - 1, 0)] = 1.0;
    for i in 1..=d {
        m[(i, i)] = -2.0;
    }
    m
}

pub fn factor_edm(cloud: &NodeCloud) -> Result<EdmFactorization> {
    require_pairs(cloud)?;
    let (n, d) = (cloud.n(), cloud.d());
    let mut x = DMatrix::zeros(n, d + 2);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        let mut sq = 0.0;
        for k in 0..d {
            let v = cloud.coords[(i, k)];
            x[(i, k + 1)] = v;
            sq += v * v;
        }
        x[(i, d + 1)] = sq;
    }
    Ok(EdmFactorization {
        x,
        d: structural_d(d),
    })
}

/// Number of singular values above `rel_tol · σ₁`, singular values taken as
/// absolute eigenvalues of the symmetric input.
pub fn numerical_rank(edm: &EdmMatrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rel-tol must be in (0, 1), got {rel_tol}"
        )));
    }
    Ok(rank_of_symmetric(&edm.entries, rel_tol))
}

pub(crate) fn rank_of_symmetric(s: &DMatrix<f64>, rel_tol: f64) -> usize {
    if s.iter().all(|&v| v == 0.0) {
        return 0;
    }
    let eig = SymmetricEigen::new(s.clone());
    let sigma: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    sigma.iter().filter(|&&s| s > rel_tol * top).count()
}
