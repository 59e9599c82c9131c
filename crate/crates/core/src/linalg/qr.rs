use nalgebra::DMatrix;

use super::max_abs;
use crate::error::{Error, Result};

/// Relative threshold on `|A_jj|` below which the input counts as rank deficient.
pub const QR_RANK_TOL: f64 = 1e-13;

/// `M = V A` with orthonormal `V` (`N x k`) and upper-triangular `A` (`k x k`)
/// carrying a nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct QrThin {
    pub v: DMatrix<f64>,
    pub a: DMatrix<f64>,
    /// Columns `j` whose `A_jj` fell below `QR_RANK_TOL · ‖M‖_max`.
    pub deficient_columns: Vec<usize>,
}

impl QrThin {
    pub fn is_rank_deficient(&self) -> bool {
        !self.deficient_columns.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.a.nrows() - self.deficient_columns.len()
    }
}

/// Householder thin QR of a tall matrix.
pub fn thin_qr(m: &DMatrix<f64>) -> Result<QrThin> {
    let (n, k) = m.shape();
    if n < k {
        return Err(Error::ShapeMismatch {
            expected: format!("N >= k for an {n}x{k} input"),
            got: format!("{n}x{k}"),
        });
    }
    let mut r = m.clone();
    // Reflector j acts on rows j..n; stored as (v, beta) with H = I - beta v vᵀ.
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k);

    for j in 0..k {
        let norm = (j..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
        let x0 = r[(j, j)];
        let tail = (j + 1..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>();
        if norm == 0.0 || tail == 0.0 {
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        let beta = 2.0 / vtv;
        for c in j..k {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * r[(j + t, c)]).sum();
            let s = beta * dot;
            for (t, vi) in v.iter().enumerate() {
                r[(j + t, c)] -= s * vi;
            }
        }
        for i in (j + 1)..n {
            r[(i, j)] = 0.0;
        }
        r[(j, j)] = alpha;
        reflectors.push((v, beta));
    }

    // V = H_0 H_1 ... H_{k-1} [I_k; 0], accumulated backwards.
    let mut v_mat = DMatrix::zeros(n, k);
    for j in 0..k {
        v_mat[(j, j)] = 1.0;
    }
    for (j, (v, beta)) in reflectors.iter().enumerate().rev() {
        if *beta == 0.0 {
            continue;
        }
        for c in 0..k {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi * v_mat[(j + t, c)])
                .sum();
            let s = beta * dot;
            for (t, vi) in v.iter().enumerate() {
                v_mat[(j + t, c)] -= s * vi;
            }
        }
    }

    let mut a = r.rows(0, k).into_owned();
    for j in 0..k {
        if a[(j, j)] < 0.0 {
            a.row_mut(j).neg_mut();
            v_mat.column_mut(j).neg_mut();
        }
    }

    let scale = max_abs(m);
    let deficient_columns = (0..k)
        .filter(|&j| a[(j, j)] <= QR_RANK_TOL * scale)
        .collect();

    Ok(QrThin {
        v: v_mat,
        a,
        deficient_columns,
    })
}
