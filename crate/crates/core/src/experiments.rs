//! Monte Carlo checks of the probabilistic claims, the completion success
//! curve and the corrections to earlier work.
//!
//! Trial `k` of a run with master seed `s` uses the cloud seed
//! `hash64(s, k)`, so any single trial can be replayed on its own and results
//! do not depend on how trials are scheduled.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{coherence_qr_path, CoherenceReport};
use crate::completion::{complete_from_truth, sample_mask, MaskMode, SvtParams};
use crate::distributions::{make_distribution, sample_coordinates, Distribution, DistributionSpec};
use crate::edm::{build_edm, EdmMatrix};
use crate::error::{Error, Result};
use crate::linalg::eig_sym;
use crate::rng::hash64;
use crate::theory::{self, PriorWorkCheck};

/// Completion runs with relative error at or below this count as recovered.
pub const SUCCESS_REL_ERROR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub dist: DistributionSpec,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub t: f64,
    pub gamma: f64,
    pub master_seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be >= 2, got {}",
                self.n
            )));
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.t) {
            return Err(Error::InvalidParameter(format!(
                "t = {} must lie in [0, 1)",
                self.t
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must lie in (0, 1]",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Claim {
    /// `σ²_min(A) ≤ t N λ*`.
    Chernoff,
    /// `μ(U) > μ0` or `μ1_emp > μ1`.
    Coherence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub mu_u: Option<f64>,
    pub mu1_emp: Option<f64>,
    pub sigma_min_sq_a: Option<f64>,
    pub rank: Option<usize>,
    pub failure: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub claim: Claim,
    pub config: McConfig,
    pub trials: usize,
    pub failures: usize,
    /// Trials aborted by a kernel error; not counted as failures.
    pub errors: usize,
    pub empirical_rate: f64,
    /// `min(ε(t), 1)` at the configured `N`.
    pub bound: f64,
    pub eps_t: f64,
    pub bound_vacuous: bool,
    /// `3 √(p(1−p)/T)` with `p = bound`.
    pub slack: f64,
    pub claim_holds: bool,
    pub lambda_star: f64,
    pub theta: f64,
    pub mu0: f64,
    pub mu1: f64,
    #[serde(rename = "N_min")]
    pub n_min: u64,
    pub below_n_min: bool,
    pub rows: Vec<TrialRow>,
}

struct Constants {
    dist: Distribution,
    lambda_star: f64,
    theta: f64,
    mu0: f64,
    mu1: f64,
    n_min: u64,
}

fn constants(cfg: &McConfig) -> Result<Constants> {
    cfg.validate()?;
    let dist = make_distribution(cfg.dist)?;
    let lambda_star = theory::lambda_star_general(&dist.moments, cfg.d)?;
    let theta = theory::row_norm_bound(dist.moments.c, cfg.d) / lambda_star;
    // t = 0 makes μ0 infinite, which the coherence claim reads as "never fails"
    let (mu0, mu1) = if cfg.t > 0.0 {
        (
            theory::mu0(theta, cfg.d, cfg.t),
            theory::mu1(theta, cfg.d, cfg.t),
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let n_min = theory::min_nodes(theta, cfg.d, cfg.t, cfg.gamma)?;
    Ok(Constants {
        dist,
        lambda_star,
        theta,
        mu0,
        mu1,
        n_min,
    })
}

/// One trial's cloud seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    hash64(master, trial as u64)
}

fn run_trials<F>(cfg: &McConfig, k: &Constants, failed: F) -> Vec<TrialRow>
where
    F: Fn(&CoherenceReport) -> bool + Sync,
{
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(cfg.master_seed, trial);
            let outcome = sample_coordinates(&k.dist, cfg.n, cfg.d, seed)
                .and_then(|cloud| coherence_qr_path(&cloud));
            match outcome {
                Ok(rep) => TrialRow {
                    trial,
                    seed,
                    mu_u: Some(rep.mu_u),
                    mu1_emp: Some(rep.mu1_emp),
                    sigma_min_sq_a: rep.sigma_min_sq_a,
                    rank: Some(rep.effective_rank),
                    failure: failed(&rep),
                    error: None,
                },
                Err(e) => TrialRow {
                    trial,
                    seed,
                    mu_u: None,
                    mu1_emp: None,
                    sigma_min_sq_a: None,
                    rank: None,
                    failure: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn summarize(claim: Claim, cfg: &McConfig, k: Constants, rows: Vec<TrialRow>) -> McReport {
    let failures = rows.iter().filter(|r| r.failure).count();
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    let empirical_rate = failures as f64 / cfg.trials as f64;
    let eps = theory::chernoff_failure(k.theta, cfg.d, cfg.t, cfg.n as u64);
    let bound = eps.eps.min(1.0);
    let slack = 3.0 * (bound * (1.0 - bound) / cfg.trials as f64).sqrt();
    McReport {
        claim,
        config: cfg.clone(),
        trials: cfg.trials,
        failures,
        errors,
        empirical_rate,
        bound,
        eps_t: eps.eps,
        bound_vacuous: eps.vacuous,
        slack,
        claim_holds: empirical_rate <= bound + slack,
        lambda_star: k.lambda_star,
        theta: k.theta,
        mu0: k.mu0,
        mu1: k.mu1,
        n_min: k.n_min,
        below_n_min: (cfg.n as u64) < k.n_min,
        rows,
    }
}

/// Frequency of `σ²_min(A) ≤ t N λ*` against the Chernoff bound `ε(t)`.
pub fn run_chernoff_mc(cfg: &McConfig) -> Result<McReport> {
    let k = constants(cfg)?;
    let threshold = cfg.t * cfg.n as f64 * k.lambda_star;
    let rows = run_trials(cfg, &k, |rep| {
        rep.sigma_min_sq_a.is_some_and(|s| s <= threshold)
    });
    Ok(summarize(Claim::Chernoff, cfg, k, rows))
}

/// Frequency of `μ(U) > μ0` or `μ1_emp > μ1`.
pub fn run_coherence_mc(cfg: &McConfig) -> Result<McReport> {
    let k = constants(cfg)?;
    let (mu0, mu1) = (k.mu0, k.mu1);
    let rows = run_trials(cfg, &k, |rep| rep.mu_u > mu0 || rep.mu1_emp > mu1);
    Ok(summarize(Claim::Coherence, cfg, k, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dist: DistributionSpec,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub m_grid: Vec<usize>,
    pub seeds: usize,
    pub mode: MaskMode,
    pub master_seed: u64,
    /// Overrides the default `max_iter`.
    pub max_iter: Option<usize>,
    /// Overrides the default `τ = 5N`.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub seed_index: usize,
    pub instance_seed: u64,
    pub mask_seed: u64,
    pub rel_error: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub success: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub points: Vec<SweepPoint>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Grid steps at which the success rate drops.
    pub fn inversions(&self) -> usize {
        self.points
            .windows(2)
            .filter(|w| w[1].success_rate < w[0].success_rate)
            .count()
    }
}

/// Success rate of SVT recovery across `m_grid`. Seed index `s` fixes one
/// EDM instance for every `m`; the mask seed is `hash64(instance_seed, m)`.
pub fn run_completion_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.n < 2 || cfg.d == 0 || cfg.seeds == 0 || cfg.m_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs N >= 2, d >= 1, seeds >= 1 and a nonempty m-grid".into(),
        ));
    }
    let dist = make_distribution(cfg.dist)?;
    let instances: Vec<(u64, EdmMatrix)> = (0..cfg.seeds)
        .map(|s| {
            let seed = trial_seed(cfg.master_seed, s);
            let cloud = sample_coordinates(&dist, cfg.n, cfg.d, seed)?;
            Ok((seed, build_edm(&cloud)?))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| (0..cfg.seeds).map(move |s| (m, s)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .into_par_iter()
        .map(|(m, s)| {
            let (instance_seed, edm) = &instances[s];
            let mask_seed = hash64(*instance_seed, m as u64);
            let mut row = SweepRow {
                m,
                seed_index: s,
                instance_seed: *instance_seed,
                mask_seed,
                rel_error: None,
                iterations: 0,
                converged: false,
                success: false,
                error: None,
            };
            let mut params = SvtParams::standard(cfg.n, m, cfg.d);
            if let Some(it) = cfg.max_iter {
                params.max_iter = it;
            }
            if let Some(tau) = cfg.tau {
                params.tau = tau;
            }
            let outcome = sample_mask(cfg.n, m, cfg.mode, mask_seed)
                .and_then(|mask| complete_from_truth(&edm.entries, &mask, &params));
            match outcome {
                Ok(res) => {
                    row.rel_error = res.rel_error;
                    row.iterations = res.iterations;
                    row.converged = res.converged;
                    row.success = res.rel_error.is_some_and(|e| e <= SUCCESS_REL_ERROR);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();

    let points = cfg
        .m_grid
        .iter()
        .enumerate()
        .map(|(gi, &m)| {
            let block = &rows[gi * cfg.seeds..(gi + 1) * cfg.seeds];
            let successes = block.iter().filter(|r| r.success).count();
            SweepPoint {
                m,
                trials: cfg.seeds,
                successes,
                success_rate: successes as f64 / cfg.seeds as f64,
                max_iterations: block.iter().map(|r| r.iterations).max().unwrap_or(0),
            }
        })
        .collect();
    Ok(SweepReport {
        config: cfg.clone(),
        points,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignFlipCheck {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub mu_u: f64,
    pub mu_u_pm: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section4Report {
    pub prior_work: Vec<PriorWorkCheck>,
    pub lambda_min_d2: f64,
    pub gap_d2: f64,
    pub claimed_lambda_min: f64,
    pub two_point_edm: [[f64; 2]; 2],
    pub not_psd_eigenvalues: Vec<f64>,
    pub not_psd: bool,
    pub sign_flip: SignFlipCheck,
}

pub const SECTION4_SEED: u64 = 2024;

/// Corrections to earlier work: the moment matrix's smallest eigenvalue is
/// not 1/3, EDMs are not PSD, and signs do not change coherence.
pub fn section4_checks() -> Result<Section4Report> {
    let prior_work = (1..=3)
        .map(theory::prior_work_lambda_min)
        .collect::<Result<Vec<_>>>()?;
    let d2 = prior_work[1];

    let two = [[0.0, 1.0], [1.0, 0.0]];
    let eig = eig_sym(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))?;

    let (n, d) = (100, 2);
    let dist = make_distribution(DistributionSpec::uniform(-1.0, 1.0))?;
    let cloud = sample_coordinates(&dist, n, d, SECTION4_SEED)?;
    let rep = coherence_qr_path(&cloud)?;

    Ok(Section4Report {
        prior_work,
        lambda_min_d2: d2.lambda_min,
        gap_d2: d2.gap,
        claimed_lambda_min: 1.0 / 3.0,
        two_point_edm: two,
        not_psd: eig.eigvals.iter().any(|&l| l < 0.0),
        not_psd_eigenvalues: eig.eigvals,
        sign_flip: SignFlipCheck {
            n,
            d,
            seed: SECTION4_SEED,
            mu_u: rep.mu_u,
            mu_u_pm: rep.mu_u_pm,
            difference: (rep.mu_u_pm - rep.mu_u).abs(),
        },
    })
}
