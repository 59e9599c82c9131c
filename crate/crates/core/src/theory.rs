//! Closed-form coherence constants for random EDMs.
//!
//! Everything here is a deterministic function of the centered moments
//! `(m2, m3, m4)`, the support radius `c` and the dimension `d`. Logarithms
//! are natural throughout.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::MomentSet;
use crate::error::{Error, Result};
use crate::linalg::{cubic_real_roots, eig_sym, CubicCoeffs};

/// Eigenvalue candidates at or below this are treated as a singular `R_d`.
pub const LAMBDA_FLOOR: f64 = 1e-14;
/// `m3` magnitude accepted as zero by the symmetric-law closed form.
pub const SYMMETRIC_M3_TOL: f64 = 1e-12;

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    Ok(())
}

/// Expected Gramian of one structural row `[1, pᵀ, ‖p‖²]`:
///
/// ```text
/// [ 1      0          d m2                  ]
/// [ 0      m2 I_d     m3 1_d                ]
/// [ d m2   m3 1_dᵀ    d(m4 − m2²) + d² m2²  ]
/// ```
pub fn build_rd(m: &MomentSet, d: usize) -> DMatrix<f64> {
    let k = d + 2;
    let df = d as f64;
    let mut r = DMatrix::zeros(k, k);
    r[(0, 0)] = 1.0;
    r[(0, k - 1)] = df * m.m2;
    r[(k - 1, 0)] = df * m.m2;
    for i in 1..=d {
        r[(i, i)] = m.m2;
        r[(i, k - 1)] = m.m3;
        r[(k - 1, i)] = m.m3;
    }
    r[(k - 1, k - 1)] = df * (m.m4 - m.m2 * m.m2) + df * df * m.m2 * m.m2;
    r
}

/// Cubic factor of `det(R_d − λI) = (m2 − λ)^{d−1} · Σ αᵢ λⁱ`.
pub fn cubic_coeffs(m: &MomentSet, d: usize) -> CubicCoeffs {
    let df = d as f64;
    let (m2, m3, m4) = (m.m2, m.m3, m.m4);
    let m2_3 = m2 * m2 * m2;
    CubicCoeffs {
        alpha0: (m4 * m2 - m2_3 - m3 * m3) * df,
        alpha1: -m2_3 * df * df + (m2_3 + m3 * m3 + m2 * m2 - m4 - m4 * m2) * df - m2,
        alpha2: m2 * m2 * df * df + (m4 - m2 * m2) * df + m2 + 1.0,
        alpha3: -1.0,
    }
}

/// `λ* = min{λ1, λ2, λ3, m2}` over the cubic roots.
pub fn lambda_star_general(m: &MomentSet, d: usize) -> Result<f64> {
    check_d(d)?;
    let roots = cubic_real_roots(cubic_coeffs(m, d))?;
    let lam = roots.iter().cloned().fold(m.m2, f64::min);
    if lam <= LAMBDA_FLOOR {
        return Err(Error::SingularMoments { value: lam });
    }
    Ok(lam)
}

/// Symmetric-law closed form `min{ζ − √(ζ² − 4d(m4 − m2²)), 2 m2}` with
/// `ζ = d(m4 − m2²) + d² m2² + 1`. This is twice the smallest eigenvalue of
/// `R_d`; pair it with [`theta_symmetric`].
pub fn lambda_star_symmetric(m: &MomentSet, d: usize) -> Result<f64> {
    check_d(d)?;
    if m.m3.abs() > SYMMETRIC_M3_TOL {
        return Err(Error::InvalidParameter(format!(
            "m3 = {:e} is nonzero; use the general path",
            m.m3
        )));
    }
    let df = d as f64;
    let kurt = m.m4 - m.m2 * m.m2;
    let zeta = df * kurt + df * df * m.m2 * m.m2 + 1.0;
    let det4 = 4.0 * df * kurt;
    // ζ − √(ζ² − 4dκ) in cancellation-free form
    let small = det4 / (zeta + (zeta * zeta - det4).max(0.0).sqrt());
    let lam = small.min(2.0 * m.m2);
    if lam <= 2.0 * LAMBDA_FLOOR {
        return Err(Error::SingularMoments { value: lam / 2.0 });
    }
    Ok(lam)
}

/// Row-norm bound `1 + d c² + d² c⁴` on `‖X_i‖²`.
pub fn row_norm_bound(c: f64, d: usize) -> f64 {
    let df = d as f64;
    let c2 = c * c;
    1.0 + df * c2 + df * df * c2 * c2
}

/// `θ = (1 + d c² + d² c⁴) / λ*`.
pub fn theta(m: &MomentSet, d: usize) -> Result<f64> {
    Ok(row_norm_bound(m.c, d) / lambda_star_general(m, d)?)
}

/// Symmetric-law `θ = 2(1 + d a² + d² a⁴) / λ*` with `a = c`.
pub fn theta_symmetric(m: &MomentSet, d: usize) -> Result<f64> {
    Ok(2.0 * row_norm_bound(m.c, d) / lambda_star_symmetric(m, d)?)
}

/// `θ` for coordinates uniform on `[-1, 1]`:
/// `90(1 + d + d²) / (ζ − √(ζ² − 720 d))`, `ζ = 5d² + 4d + 45`.
pub fn theta_closed_form(d: usize) -> Result<f64> {
    check_d(d)?;
    let df = d as f64;
    let zeta = 5.0 * df * df + 4.0 * df + 45.0;
    let root = (zeta * zeta - 720.0 * df).sqrt();
    // 1 / (ζ − root) = (ζ + root) / (720 d)
    Ok(90.0 * (1.0 + df + df * df) * (zeta + root) / (720.0 * df))
}

/// `μ0 = θ / (t(d+2))`.
pub fn mu0(theta: f64, d: usize, t: f64) -> f64 {
    theta / (t * (d + 2) as f64)
}

/// `μ1 = μ0 √(d+2) = θ / (t √(d+2))`.
pub fn mu1(theta: f64, d: usize, t: f64) -> f64 {
    mu0(theta, d, t) * ((d + 2) as f64).sqrt()
}

/// Smallest integer `N ≥ 2θ(ln(d+2) − ln γ)/(1−t)²`.
pub fn min_nodes(theta: f64, d: usize, t: f64, gamma: f64) -> Result<u64> {
    check_d(d)?;
    if !(0.0..1.0).contains(&t) {
        if t >= 1.0 {
            return Err(Error::Unbounded("t must be < 1 for N_min"));
        }
        return Err(Error::InvalidParameter(format!(
            "t = {t} must lie in [0, 1)"
        )));
    }
    if gamma <= 0.0 {
        return Err(Error::Unbounded("gamma must be > 0 for N_min"));
    }
    if gamma > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be <= 1"
        )));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "theta = {theta} must be positive"
        )));
    }
    let raw = 2.0 * theta * (((d + 2) as f64).ln() - gamma.ln()) / ((1.0 - t) * (1.0 - t));
    Ok(raw.ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffBound {
    pub eps: f64,
    /// `eps > 1`: the bound says nothing.
    pub vacuous: bool,
}

/// `ε(t) = (d+2) exp(−N(1−t)²/(2θ))`, the lower-tail matrix Chernoff bound
/// on `P{σ²_min(A) ≤ tNλ*}`.
pub fn chernoff_failure(theta: f64, d: usize, t: f64, n: u64) -> ChernoffBound {
    let eps = (d + 2) as f64 * (-(n as f64) * (1.0 - t) * (1.0 - t) / (2.0 * theta)).exp();
    ChernoffBound {
        eps,
        vacuous: eps > 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexity {
    /// `max{μ1², μ0^{1/2} μ1, μ0 N^{1/4}}`.
    pub max_term: f64,
    pub m_general: u64,
    pub general_vacuous: bool,
    /// `None` when `r > N^{1/5} / μ0`.
    pub m_improved: Option<u64>,
    pub improved_vacuous: Option<bool>,
}

/// Sample counts of the exact-recovery theorem for nuclear-norm minimization,
/// with the unknown universal constant `c_const` supplied by the caller.
/// A count is vacuous when it exceeds `N²`.
pub fn sample_complexity(
    mu0: f64,
    mu1: f64,
    n: f64,
    r: usize,
    beta: f64,
    c_const: f64,
) -> Result<SampleComplexity> {
    if !(mu0 > 0.0 && mu1 > 0.0 && n > 0.0 && r > 0 && c_const > 0.0) {
        return Err(Error::InvalidParameter(
            "mu0, mu1, N, r and C must be positive".into(),
        ));
    }
    if !(beta > 2.0) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} must be > 2"
        )));
    }
    let rf = r as f64;
    let log_n = n.ln();
    let max_term = (mu1 * mu1).max(mu0.sqrt() * mu1).max(mu0 * n.powf(0.25));
    let general = c_const * max_term * n * rf * beta * log_n;
    let m_general = general.ceil().max(0.0) as u64;
    let n_sq = n * n;
    let (m_improved, improved_vacuous) = if rf <= n.powf(0.2) / mu0 {
        let improved = c_const * mu0 * n.powf(1.2) * rf * beta * log_n;
        (Some(improved.ceil().max(0.0) as u64), Some(improved > n_sq))
    } else {
        (None, None)
    };
    Ok(SampleComplexity {
        max_term,
        m_general,
        general_vacuous: general > n_sq,
        m_improved,
        improved_vacuous,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorWorkCheck {
    pub d: usize,
    pub lambda_min: f64,
    /// `|λ_min − 1/3|`; the earlier claim was that this is zero.
    pub gap: f64,
}

/// Smallest eigenvalue of the uniform-`[-1,1]` moment matrix as it appears in
/// earlier work, whose minimum eigenvalue was claimed to be 1/3.
pub fn prior_work_lambda_min(d: usize) -> Result<PriorWorkCheck> {
    check_d(d)?;
    let k = d + 2;
    let df = d as f64;
    let mut m = DMatrix::zeros(k, k);
    m[(0, 0)] = 1.0;
    m[(0, k - 1)] = df / 3.0;
    m[(k - 1, 0)] = df / 3.0;
    for i in 1..=d {
        m[(i, i)] = 1.0 / 3.0;
    }
    m[(k - 1, k - 1)] = (df / 3.0).powi(2) + 4.0 * df / 45.0;
    let lambda_min = eig_sym(&m)?.min_eigval();
    Ok(PriorWorkCheck {
        d,
        lambda_min,
        gap: (lambda_min - 1.0 / 3.0).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub moments: MomentSet,
    pub d: usize,
    pub t: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Universal constant of the recovery theorem; unknown, user supplied.
    pub big_c: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        self.moments.validate()?;
        check_d(self.d)?;
        if self.t >= 1.0 {
            return Err(Error::Unbounded("t must be < 1 for N_min"));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t = {} must be > 0 for mu0",
                self.t
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must lie in (0, 1]",
                self.gamma
            )));
        }
        if !(self.beta > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "beta = {} must be > 2",
                self.beta
            )));
        }
        if !(self.big_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "C = {} must be > 0",
                self.big_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    #[serde(rename = "R_d")]
    pub r_d: Vec<Vec<f64>>,
    pub cubic: CubicCoeffs,
    pub cubic_roots: [f64; 3],
    pub lambda_star: f64,
    pub theta: f64,
    pub mu0: f64,
    pub mu1: f64,
    #[serde(rename = "N_min")]
    pub n_min: u64,
    /// Node count at which `eps_t` and the sample counts are evaluated.
    #[serde(rename = "N")]
    pub n: u64,
    pub eps_t: f64,
    pub eps_vacuous: bool,
    pub m_general: u64,
    pub m_general_vacuous: bool,
    pub m_improved: Option<u64>,
    pub m_improved_vacuous: Option<bool>,
    pub improved_applicable: bool,
}

/// Evaluates every constant at `n` nodes (default `N_min`).
pub fn evaluate(params: &TheoryParams, n: Option<u64>) -> Result<TheoryBounds> {
    params.validate()?;
    let TheoryParams {
        moments,
        d,
        t,
        gamma,
        beta,
        big_c,
    } = *params;
    let cubic = cubic_coeffs(&moments, d);
    let cubic_roots = cubic_real_roots(cubic)?;
    let lambda_star = lambda_star_general(&moments, d)?;
    let theta = row_norm_bound(moments.c, d) / lambda_star;
    let mu0 = mu0(theta, d, t);
    let mu1 = mu1(theta, d, t);
    let n_min = min_nodes(theta, d, t, gamma)?;
    let n = n.unwrap_or(n_min);
    let eps = chernoff_failure(theta, d, t, n);
    let sc = sample_complexity(mu0, mu1, n as f64, d + 2, beta, big_c)?;
    let r = build_rd(&moments, d);
    Ok(TheoryBounds {
        r_d: r
            .row_iter()
            .map(|row| row.iter().cloned().collect())
            .collect(),
        cubic,
        cubic_roots,
        lambda_star,
        theta,
        mu0,
        mu1,
        n_min,
        n,
        eps_t: eps.eps,
        eps_vacuous: eps.vacuous,
        m_general: sc.m_general,
        m_general_vacuous: sc.general_vacuous,
        m_improved: sc.m_improved,
        m_improved_vacuous: sc.improved_vacuous,
        improved_applicable: sc.m_improved.is_some(),
    })
}
