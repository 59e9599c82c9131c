//! Partial EDM observations and their recovery by singular value
//! thresholding (SVT).

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{subspace_iteration, SubspaceOptions};
use crate::rng::CounterRng;

/// Iterations the residual may stay above `DIVERGENCE_FACTOR` times its
/// initial value before the solver gives up.
pub const DIVERGENCE_WINDOW: usize = 20;
pub const DIVERGENCE_FACTOR: f64 = 10.0;

const INNER_ITERS: usize = 8;
const INNER_OVERSAMPLE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// Uniform over all `N²` coordinates, diagonal included.
    AllEntries,
    /// Uniform over unordered off-diagonal pairs; each pair contributes both
    /// `(i, j)` and `(j, i)`.
    SymmetricOffdiag,
}

/// Observed coordinates, 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMask {
    pub n: usize,
    pub coords: Vec<(usize, usize)>,
    pub mode: MaskMode,
    pub m: usize,
    pub seed: u64,
}

impl SampleMask {
    /// Builds a mask from explicit coordinates, checking the mode invariants.
    pub fn from_coords(n: usize, mut coords: Vec<(usize, usize)>, mode: MaskMode) -> Result<Self> {
        coords.sort_unstable();
        coords.dedup();
        if let Some(&(i, j)) = coords.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::InvalidParameter(format!(
                "coordinate ({i}, {j}) outside a {n}x{n} matrix"
            )));
        }
        if mode == MaskMode::SymmetricOffdiag {
            if coords.iter().any(|&(i, j)| i == j) {
                return Err(Error::InvalidParameter(
                    "symmetric-offdiag mask contains a diagonal entry".into(),
                ));
            }
            if coords
                .iter()
                .any(|&(i, j)| coords.binary_search(&(j, i)).is_err())
            {
                return Err(Error::InvalidParameter(
                    "symmetric-offdiag mask is not closed under transposition".into(),
                ));
            }
        }
        let m = coords.len();
        Ok(Self {
            n,
            coords,
            mode,
            m,
            seed: 0,
        })
    }

    /// Every entry is pinned, counting the implied zero diagonal in
    /// symmetric mode.
    pub fn is_complete(&self) -> bool {
        let implied = match self.mode {
            MaskMode::AllEntries => 0,
            MaskMode::SymmetricOffdiag => self.n,
        };
        self.m + implied == self.n * self.n
    }
}

/// Uniform sample without replacement over the admissible coordinates,
/// deterministic in `seed`.
pub fn sample_mask(n: usize, m: usize, mode: MaskMode, seed: u64) -> Result<SampleMask> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let n64 = n as u64;
    let mut coords: Vec<(usize, usize)> = match mode {
        MaskMode::AllEntries => {
            let total = n64 * n64;
            if m as u64 > total {
                return Err(Error::InvalidParameter(format!(
                    "m = {m} exceeds N^2 = {total}"
                )));
            }
            partial_shuffle(total, m as u64, seed)
                .into_iter()
                .map(|k| ((k / n64) as usize, (k % n64) as usize))
                .collect()
        }
        MaskMode::SymmetricOffdiag => {
            let total = n64 * (n64 - 1) / 2;
            if !m.is_multiple_of(2) || m as u64 > 2 * total {
                return Err(Error::InvalidParameter(format!(
                    "m = {m} must be even and at most N^2 - N = {}",
                    2 * total
                )));
            }
            partial_shuffle(total, (m / 2) as u64, seed)
                .into_iter()
                .flat_map(|k| {
                    let (i, j) = unrank_pair(k, n64);
                    [(i, j), (j, i)]
                })
                .collect()
        }
    };
    coords.sort_unstable();
    Ok(SampleMask {
        n,
        coords,
        mode,
        m,
        seed,
    })
}

/// First `k` entries of a Fisher–Yates shuffle of `0..total`, with the
/// permutation stored sparsely.
fn partial_shuffle(total: u64, k: u64, seed: u64) -> Vec<u64> {
    let mut rng = CounterRng::new(seed);
    let mut swapped: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(k as usize);
    for i in 0..k {
        let j = i + rng.next_below(total - i);
        let vi = *swapped.get(&i).unwrap_or(&i);
        let vj = *swapped.get(&j).unwrap_or(&j);
        swapped.insert(j, vi);
        out.push(vj);
    }
    out
}

/// Maps `k` in `0..N(N-1)/2` to the strict upper-triangular pair `(i, j)`,
/// `i < j`, in row-major order.
fn unrank_pair(k: u64, n: u64) -> (usize, usize) {
    let mut i = 0u64;
    let mut rest = k;
    loop {
        let row = n - 1 - i;
        if rest < row {
            return (i as usize, (i + 1 + rest) as usize);
        }
        rest -= row;
        i += 1;
    }
}

/// Values of `matrix` at the mask coordinates.
pub fn observe(matrix: &DMatrix<f64>, mask: &SampleMask) -> Vec<f64> {
    mask.coords.iter().map(|&(i, j)| matrix[(i, j)]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvtParams {
    pub tau: f64,
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Starting size of the truncated SVD.
    pub initial_rank: usize,
}

impl SvtParams {
    /// `τ = 5N`, `step = 1.2 N²/m`, `tol = 1e-4`, 1000 iterations, rank `d + 4`.
    pub fn standard(n: usize, m: usize, d: usize) -> Self {
        let nf = n as f64;
        Self {
            tau: 5.0 * nf,
            step: 1.2 * nf * nf / m.max(1) as f64,
            max_iter: 1000,
            tol: 1e-4,
            initial_rank: d + 4,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.step > 0.0 && self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "tau, step, tol and max-iter must be positive".into(),
            ));
        }
        if self.initial_rank == 0 {
            return Err(Error::InvalidParameter("initial rank must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub estimate: DMatrix<f64>,
    pub iterations: usize,
    /// `‖P_Ω(X − M)‖_F / ‖P_Ω M‖_F` after each iteration.
    pub residual_history: Vec<f64>,
    pub rel_error: Option<f64>,
    pub converged: bool,
    /// Rank of the final iterate.
    pub rank: usize,
}

impl CompletionResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Ω as a dense 0/1 matrix plus observed values, with the zero diagonal
/// added in symmetric mode.
fn dense_observations(values: &[f64], mask: &SampleMask) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = mask.n;
    let mut w = DMatrix::zeros(n, n);
    let mut pm = DMatrix::zeros(n, n);
    for (&(i, j), &v) in mask.coords.iter().zip(values) {
        w[(i, j)] = 1.0;
        pm[(i, j)] = v;
    }
    if mask.mode == MaskMode::SymmetricOffdiag {
        for i in 0..n {
            w[(i, i)] = 1.0;
            pm[(i, i)] = 0.0;
        }
    }
    (w, pm)
}

/// Singular value soft-thresholding `D_τ(Y)` with an adaptively sized
/// truncated SVD. Returns the shrunk matrix and its rank.
struct Shrinker {
    tau: f64,
    rank: usize,
    warm: Option<DMatrix<f64>>,
}

impl Shrinker {
    /// The warm start carries subspace progress from one SVT step to the
    /// next, so a few inner sweeps per step suffice.
    fn options(&self) -> SubspaceOptions {
        SubspaceOptions {
            oversample: INNER_OVERSAMPLE,
            residual_floor: self.tau,
            start: self.warm.clone(),
            tol: 1e-10,
            max_iter: INNER_ITERS,
        }
    }

    fn shrink_symmetric(&mut self, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
        let n = y.nrows();
        loop {
            let k = self.rank.min(n);
            let opts = self.options();
            let res = subspace_iteration(y, k, &opts)?;
            let smallest = res.eigvals.last().map_or(0.0, |v| v.abs());
            if smallest > self.tau && k < n {
                self.rank = (self.rank + 2).min(n);
                self.warm = Some(res.block);
                continue;
            }
            let mut x = DMatrix::zeros(n, n);
            let mut kept = 0;
            for (j, &lam) in res.eigvals.iter().enumerate() {
                let s = lam.abs() - self.tau;
                if s <= 0.0 {
                    continue;
                }
                kept += 1;
                let u = res.vectors.column(j);
                x.ger(s * lam.signum(), &u, &u, 1.0);
            }
            self.warm = Some(res.block);
            return Ok((x, kept));
        }
    }

    /// General square case through the symmetric embedding
    /// `[[0, Y], [Yᵀ, 0]]`, whose eigenvalues are `±σ_i`.
    fn shrink_general(&mut self, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
        let n = y.nrows();
        let mut b = DMatrix::zeros(2 * n, 2 * n);
        b.view_mut((0, n), (n, n)).copy_from(y);
        b.view_mut((n, 0), (n, n)).copy_from(&y.transpose());
        loop {
            let k = (2 * self.rank).min(2 * n);
            let opts = self.options();
            let res = subspace_iteration(&b, k, &opts)?;
            let smallest = res.eigvals.last().map_or(0.0, |v| v.abs());
            if smallest > self.tau && k < 2 * n {
                self.rank = (self.rank + 2).min(n);
                self.warm = Some(res.block);
                continue;
            }
            let mut x = DMatrix::zeros(n, n);
            let mut kept = 0;
            for (j, &lam) in res.eigvals.iter().enumerate() {
                if lam - self.tau <= 0.0 {
                    continue;
                }
                kept += 1;
                let col = res.vectors.column(j);
                let u = col.rows(0, n);
                let v = col.rows(n, n);
                // each half has norm 1/√2
                x.ger(2.0 * (lam - self.tau), &u, &v, 1.0);
            }
            self.warm = Some(res.block);
            return Ok((x, kept));
        }
    }
}

/// Runs SVT on the observations `values` (aligned with `mask.coords`).
pub fn svt_complete(
    values: &[f64],
    mask: &SampleMask,
    params: &SvtParams,
) -> Result<CompletionResult> {
    params.validate()?;
    if values.len() != mask.coords.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} observed values", mask.coords.len()),
            got: format!("{}", values.len()),
        });
    }
    if mask.m == 0 {
        return Err(Error::InvalidParameter("mask is empty".into()));
    }
    let n = mask.n;
    let (w, pm) = dense_observations(values, mask);
    let norm_obs = pm.norm();

    if mask.is_complete() || norm_obs == 0.0 {
        // the feasible set is a single point, or the zero matrix fits exactly
        let estimate = if mask.is_complete() {
            pm
        } else {
            DMatrix::zeros(n, n)
        };
        let rank = if estimate.iter().all(|&v| v == 0.0) {
            0
        } else {
            n
        };
        return Ok(CompletionResult {
            estimate,
            iterations: 0,
            residual_history: vec![0.0],
            rel_error: None,
            converged: true,
            rank,
        });
    }

    let symmetric =
        mask.mode == MaskMode::SymmetricOffdiag || (pm == pm.transpose() && w == w.transpose());
    let mut shrinker = Shrinker {
        tau: params.tau,
        rank: params.initial_rank.min(n),
        warm: None,
    };

    let spectral = spectral_norm_estimate(&pm)?;
    let k0 = (params.tau / (params.step * spectral)).ceil().max(1.0);
    let mut y = &pm * (k0 * params.step);

    let mut history = Vec::new();
    let mut above = 0usize;
    let mut x = DMatrix::zeros(n, n);
    let mut rank = 0;
    let mut converged = false;
    for _ in 0..params.max_iter {
        let (xk, r) = if symmetric {
            shrinker.shrink_symmetric(&y)?
        } else {
            shrinker.shrink_general(&y)?
        };
        x = xk;
        rank = r;
        if symmetric {
            x = (&x + x.transpose()) * 0.5;
        }
        let resid = (&pm - x.component_mul(&w)).component_mul(&w);
        let rel = resid.norm() / norm_obs;
        history.push(rel);
        if rel <= params.tol {
            converged = true;
            break;
        }
        if rel > DIVERGENCE_FACTOR * history[0] {
            above += 1;
            if above >= DIVERGENCE_WINDOW {
                return Err(Error::Divergence {
                    iterations: history.len(),
                    history,
                });
            }
        } else {
            above = 0;
        }
        y += resid * params.step;
    }
    Ok(CompletionResult {
        estimate: x,
        iterations: history.len(),
        residual_history: history,
        rel_error: None,
        converged,
        rank,
    })
}

/// `‖P_Ω M‖₂`, by the symmetric path when possible.
fn spectral_norm_estimate(pm: &DMatrix<f64>) -> Result<f64> {
    let opts = SubspaceOptions {
        tol: 1e-8,
        ..SubspaceOptions::default()
    };
    if *pm == pm.transpose() {
        let res = subspace_iteration(pm, 1, &opts)?;
        Ok(res.eigvals[0].abs())
    } else {
        let g = pm.transpose() * pm;
        let res = subspace_iteration(&g, 1, &opts)?;
        Ok(res.eigvals[0].abs().sqrt())
    }
}

/// `‖estimate − truth‖_F / ‖truth‖_F`, or `‖estimate‖_F` for a zero truth.
pub fn recovery_error(truth: &DMatrix<f64>, estimate: &DMatrix<f64>) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", truth.nrows(), truth.ncols()),
            got: format!("{}x{}", estimate.nrows(), estimate.ncols()),
        });
    }
    let t = truth.norm();
    let diff = (estimate - truth).norm();
    Ok(if t == 0.0 { estimate.norm() } else { diff / t })
}

/// Samples `truth`, completes it and fills in `rel_error`.
pub fn complete_from_truth(
    truth: &DMatrix<f64>,
    mask: &SampleMask,
    params: &SvtParams,
) -> Result<CompletionResult> {
    let values = observe(truth, mask);
    let mut res = svt_complete(&values, mask, params)?;
    res.rel_error = Some(recovery_error(truth, &res.estimate)?);
    Ok(res)
}
