use nalgebra::DMatrix;

use super::max_abs;
use crate::error::{Error, Result};

pub const JACOBI_MAX_SWEEPS: usize = 30;
const OFFDIAG_REL_TOL: f64 = 1e-14;
const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Eigenpairs sorted by decreasing `|λ|`; ties put the positive eigenvalue first.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigvals: Vec<f64>,
    /// Column `i` pairs with `eigvals[i]`.
    pub eigvecs: DMatrix<f64>,
    pub sweeps: usize,
}

impl SymEig {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut ql = self.eigvecs.clone();
        for (j, mut col) in ql.column_iter_mut().enumerate() {
            col *= self.eigvals[j];
        }
        &ql * self.eigvecs.transpose()
    }

    pub fn min_eigval(&self) -> f64 {
        self.eigvals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Cyclic Jacobi eigensolver for small dense symmetric matrices.
pub fn eig_sym(s: &DMatrix<f64>) -> Result<SymEig> {
    let k = s.nrows();
    if s.ncols() != k {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", s.nrows(), s.ncols()),
        });
    }
    let scale = max_abs(s);
    let asym = max_abs(&(s - s.transpose()));
    if asym > SYMMETRY_REL_TOL * scale {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            allowed: SYMMETRY_REL_TOL * scale,
        });
    }
    let mut a = (s + s.transpose()) * 0.5;
    let mut q = DMatrix::identity(k, k);
    let threshold = OFFDIAG_REL_TOL * a.norm();

    let off_max = |a: &DMatrix<f64>| {
        let mut m = 0.0f64;
        for j in 0..k {
            for i in 0..j {
                m = m.max(a[(i, j)].abs());
            }
        }
        m
    };

    let mut sweeps = 0;
    while off_max(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolver",
                iterations: sweeps,
                residual: off_max(&a),
            });
        }
        sweeps += 1;
        for p in 0..k {
            for r in (p + 1)..k {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                // Rutishauser's rotation: t = sgn(θ)/(|θ| + sqrt(θ² + 1)).
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                } else {
                    0.0
                };
                if t == 0.0 {
                    a[(p, r)] = 0.0;
                    a[(r, p)] = 0.0;
                    continue;
                }
                let c = 1.0 / t.hypot(1.0);
                let sn = t * c;
                rotate(&mut a, &mut q, p, r, c, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (a[(i, i)], a[(j, j)]);
        y.abs().total_cmp(&x.abs()).then(y.total_cmp(&x))
    });
    let eigvals = order.iter().map(|&i| a[(i, i)]).collect();
    let eigvecs = DMatrix::from_fn(k, k, |row, col| q[(row, order[col])]);
    Ok(SymEig {
        eigvals,
        eigvecs,
        sweeps,
    })
}

/// Applies `Jᵀ A J` for the plane rotation in `(p, r)` and accumulates `Q J`.
fn rotate(a: &mut DMatrix<f64>, q: &mut DMatrix<f64>, p: usize, r: usize, c: f64, s: f64) {
    let k = a.nrows();
    for i in 0..k {
        let (aip, air) = (a[(i, p)], a[(i, r)]);
        a[(i, p)] = c * aip - s * air;
        a[(i, r)] = s * aip + c * air;
    }
    for j in 0..k {
        let (apj, arj) = (a[(p, j)], a[(r, j)]);
        a[(p, j)] = c * apj - s * arj;
        a[(r, j)] = s * apj + c * arj;
    }
    a[(p, r)] = 0.0;
    a[(r, p)] = 0.0;
    for i in 0..k {
        let (qip, qir) = (q[(i, p)], q[(i, r)]);
        q[(i, p)] = c * qip - s * qir;
        q[(i, r)] = s * qip + c * qir;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input() {
        let e = eig_sym(&DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0])).unwrap();
        assert_eq!(e.eigvals, vec![2.0, 1.0]);
        let want = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        assert_eq!(e.eigvecs, want);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn zero_trace_pair() {
        let delta = 0.75;
        let e = eig_sym(&DMatrix::from_row_slice(2, 2, &[0., delta, delta, 0.])).unwrap();
        assert!((e.eigvals[0] - delta).abs() < 1e-15);
        assert!((e.eigvals[1] + delta).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1., 2., 3., 1.]);
        assert!(matches!(eig_sym(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn zero_matrix() {
        let e = eig_sym(&DMatrix::zeros(3, 3)).unwrap();
        assert!(e.eigvals.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_r2_spectrum() {
        // R_2 for U[-1,1]; spectrum {(73 ± √3889)/90, 1/3, 1/3}
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0,
                0.0,
                0.0,
                2.0 / 3.0, //
                0.0,
                1.0 / 3.0,
                0.0,
                0.0, //
                0.0,
                0.0,
                1.0 / 3.0,
                0.0, //
                2.0 / 3.0,
                0.0,
                0.0,
                28.0 / 45.0,
            ],
        );
        let e = eig_sym(&m).unwrap();
        let s = 3889f64.sqrt();
        let want = [(73.0 + s) / 90.0, 1.0 / 3.0, 1.0 / 3.0, (73.0 - s) / 90.0];
        for (g, w) in e.eigvals.iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
    }
}
