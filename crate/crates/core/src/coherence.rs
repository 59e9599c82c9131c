//! Exact subspace coherence of an EDM, computed two independent ways.
//!
//! The QR path works from the node cloud: with `X = V A` the column space of
//! `Δ = X D Xᵀ` is spanned by `V`, so `μ(U) = N/(d+2) · max_i ‖V_i‖²`. The SVD
//! path works from the matrix alone via its truncated symmetric SVD.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::edm::{factor_edm, EdmMatrix, NodeCloud, RANK_REL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eig_sym, svd_sym_truncated, thin_qr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherencePath {
    Qr,
    Svd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTolerances {
    pub rank_rel_tol: f64,
    pub qr_rank_tol: f64,
    pub svd_residual_tol: f64,
}

impl Default for CoherenceTolerances {
    fn default() -> Self {
        Self {
            rank_rel_tol: RANK_REL_TOL,
            qr_rank_tol: crate::linalg::QR_RANK_TOL,
            svd_residual_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub path: CoherencePath,
    /// Coherence of the column space.
    pub mu_u: f64,
    /// Coherence of the row space `U · sign(Λ)`.
    pub mu_u_pm: f64,
    /// Smallest μ1 with `‖Σ sign(λ_i) u_i u_iᵀ‖_max = μ1 √r / N`.
    pub mu1_emp: f64,
    /// `λ_min(AᵀA)`; QR path only.
    pub sigma_min_sq_a: Option<f64>,
    /// `N/r · max_i ‖X_i‖² / σ²_min(A)`; QR path only.
    pub mu_bound: Option<f64>,
    pub n: usize,
    pub d: usize,
    pub effective_rank: usize,
    pub tolerances: CoherenceTolerances,
}

fn max_row_norm_sq(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max)
}

/// `max_{i,j} |left_i · right_j|`.
fn max_abs_cross(left: &DMatrix<f64>, right: &DMatrix<f64>) -> f64 {
    let n = left.nrows();
    let r = left.ncols();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..r {
                s += left[(i, k)] * right[(j, k)];
            }
            best = best.max(s.abs());
        }
    }
    best
}

pub fn coherence_qr_path(cloud: &NodeCloud) -> Result<CoherenceReport> {
    let fact = factor_edm(cloud)?;
    let (n, d) = (cloud.n(), cloud.d());
    let r = d + 2;
    if n < r {
        return Err(Error::RankDeficient {
            rank: n,
            expected: r,
            detail: format!("N = {n} nodes cannot span d + 2 = {r} columns"),
        });
    }
    let qr = thin_qr(&fact.x)?;
    if qr.is_rank_deficient() {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            expected: r,
            detail: format!(
                "structural columns {:?} of [1, p, |p|^2] are linearly dependent (degenerate cloud)",
                qr.deficient_columns
            ),
        });
    }
    let v = &qr.v;
    let a = &qr.a;
    let nf = n as f64;
    let rf = r as f64;
    let mu_u = nf / rf * max_row_norm_sq(v);

    // A D Aᵀ = Q Λ̃ Qᵀ
    let core = eig_sym(&(a * &fact.d * a.transpose()))?;
    let signs: Vec<f64> = core
        .eigvals
        .iter()
        .map(|&l| if l < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let u = v * &core.eigvecs;
    let mut u_pm = u.clone();
    for (j, mut col) in u_pm.column_iter_mut().enumerate() {
        col *= signs[j];
    }
    let mu_u_pm = nf / rf * max_row_norm_sq(&u_pm);
    let mu1_emp = max_abs_cross(&u, &u_pm) * nf / rf.sqrt();

    let gram = eig_sym(&(a.transpose() * a))?;
    let sigma_min_sq_a = gram.min_eigval();
    let mu_bound = nf / rf * max_row_norm_sq(&fact.x) / sigma_min_sq_a;

    Ok(CoherenceReport {
        path: CoherencePath::Qr,
        mu_u,
        mu_u_pm,
        mu1_emp,
        sigma_min_sq_a: Some(sigma_min_sq_a),
        mu_bound: Some(mu_bound),
        n,
        d,
        effective_rank: r,
        tolerances: CoherenceTolerances::default(),
    })
}

pub fn coherence_svd_path(edm: &EdmMatrix, d: usize) -> Result<CoherenceReport> {
    let n = edm.n();
    let tol = CoherenceTolerances::default();
    let bound = d + 2;
    // one extra pair to detect a rank above d + 2
    let k = (bound + 1).min(n);
    let svd = svd_sym_truncated(&edm.entries, k)?;
    let s1 = svd.singular_values.first().copied().unwrap_or(0.0);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol.rank_rel_tol * s1)
        .count();
    if rank > bound {
        return Err(Error::RankExceeded { rank, bound });
    }
    if rank == 0 {
        return Err(Error::RankDeficient {
            rank: 0,
            expected: 1,
            detail: "zero matrix has no column space".into(),
        });
    }
    let u = svd.left.columns(0, rank).into_owned();
    let mut u_pm = u.clone();
    for (j, mut col) in u_pm.column_iter_mut().enumerate() {
        col *= svd.signs[j];
    }
    let nf = n as f64;
    let rf = rank as f64;
    let mu_u = nf / rf * max_row_norm_sq(&u);
    let mu_u_pm = nf / rf * max_row_norm_sq(&u_pm);
    let mu1_emp = max_abs_cross(&u, &u_pm) * nf / rf.sqrt();

    Ok(CoherenceReport {
        path: CoherencePath::Svd,
        mu_u,
        mu_u_pm,
        mu1_emp,
        sigma_min_sq_a: None,
        mu_bound: None,
        n,
        d,
        effective_rank: rank,
        tolerances: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edm::build_edm;

    #[test]
    fn square_case_has_unit_coherence() {
        let c = NodeCloud::from_rows(&[&[0.0], &[1.0], &[2.0]]);
        let rep = coherence_qr_path(&c).unwrap();
        assert!((rep.mu_u - 1.0).abs() < 1e-14);
        let svd = coherence_svd_path(&build_edm(&c).unwrap(), 1).unwrap();
        assert!((svd.mu_u - 1.0).abs() < 1e-12);
        assert_eq!(svd.effective_rank, 3);
    }

    #[test]
    fn two_point_exchange_matrix() {
        let e = EdmMatrix {
            entries: DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]),
        };
        let rep = coherence_svd_path(&e, 1).unwrap();
        assert_eq!(rep.effective_rank, 2);
        assert!((rep.mu_u - 1.0).abs() < 1e-14);
        assert_eq!(rep.mu_u_pm, rep.mu_u);
        assert!((rep.mu1_emp - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn collinear_cloud_rejected_by_qr_path() {
        // all nodes on the line y = x: columns p_1 and p_2 coincide
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64 * 0.1, i as f64 * 0.1])
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let c = NodeCloud::from_rows(&refs);
        assert!(matches!(
            coherence_qr_path(&c),
            Err(Error::RankDeficient { .. })
        ));
        // the SVD path falls back to the true rank
        let rep = coherence_svd_path(&build_edm(&c).unwrap(), 2).unwrap();
        assert_eq!(rep.effective_rank, 3);
    }

    #[test]
    fn rank_above_bound_rejected() {
        // identity minus ones is not an EDM of 1-D points and has full rank
        let n = 6;
        let e = EdmMatrix {
            entries: DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 + (i * j) as f64 }),
        };
        assert!(matches!(
            coherence_svd_path(&e, 1),
            Err(Error::RankExceeded { .. })
        ));
    }

    #[test]
    fn zero_edm_rejected() {
        let e = EdmMatrix {
            entries: DMatrix::zeros(4, 4),
        };
        assert!(coherence_svd_path(&e, 2).is_err());
    }
}
