//! Coordinate-sampling laws.
//!
//! Every law is atomless with bounded support. Construction shifts the law so
//! that its mean is zero; moments and the support radius `c` always refer to
//! the centered law.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::edm::NodeCloud;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::rng::CounterRng;

/// Absolute accuracy for moments obtained by quadrature.
pub const MOMENT_TOL: f64 = 1e-12;

/// Knots in the tabulated CDF used for inverse-transform sampling.
pub const CDF_KNOTS: usize = 1 << 16;

/// Kind-specific parameters. Serialized as `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Law {
    Uniform {},
    /// Normal(mean, std) conditioned on the support.
    TruncatedNormal {
        mean: f64,
        std: f64,
    },
    /// Beta(alpha, beta) affinely mapped onto the support. Both shapes must be
    /// at least 1 so that the density is bounded.
    BetaScaled {
        alpha: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub law: Law,
    pub support: [f64; 2],
}

impl DistributionSpec {
    pub fn uniform(a: f64, b: f64) -> Self {
        Self {
            law: Law::Uniform {},
            support: [a, b],
        }
    }

    pub fn truncated_normal(mean: f64, std: f64, a: f64, b: f64) -> Self {
        Self {
            law: Law::TruncatedNormal { mean, std },
            support: [a, b],
        }
    }

    pub fn beta_scaled(alpha: f64, beta: f64, a: f64, b: f64) -> Self {
        Self {
            law: Law::BetaScaled { alpha, beta },
            support: [a, b],
        }
    }

    fn validate(&self) -> Result<()> {
        let [a, b] = self.support;
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::DegenerateSupport { a, b });
        }
        match self.law {
            Law::Uniform {} => Ok(()),
            Law::TruncatedNormal { mean, std } => {
                if !mean.is_finite() || !(std > 0.0 && std.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "truncated-normal needs finite mean and std > 0, got mean={mean}, std={std}"
                    )));
                }
                Ok(())
            }
            Law::BetaScaled { alpha, beta } => {
                if !(alpha >= 1.0 && beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "beta-scaled needs alpha, beta >= 1, got alpha={alpha}, beta={beta}"
                    )));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.support;
        match self.law {
            Law::Uniform {} => write!(f, "uniform[{a},{b}]"),
            Law::TruncatedNormal { mean, std } => {
                write!(f, "truncated-normal(mean={mean};std={std})[{a},{b}]")
            }
            Law::BetaScaled { alpha, beta } => {
                write!(f, "beta-scaled(alpha={alpha};beta={beta})[{a},{b}]")
            }
        }
    }
}

/// Central moments of a centered law plus its support radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    /// max(|a'|, |b'|) of the centered support.
    pub c: f64,
}

impl MomentSet {
    /// Checks the structural moment inequalities. Used for user-supplied
    /// moments; built-in laws satisfy them by construction.
    pub fn new(m2: f64, m3: f64, m4: f64, c: f64) -> Result<Self> {
        let ms = Self { m2, m3, m4, c };
        ms.validate()?;
        Ok(ms)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { m2, m3, m4, c } = *self;
        if ![m2, m3, m4, c].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidMoments("non-finite moment".into()));
        }
        if m2 <= 0.0 {
            return Err(Error::InvalidMoments(format!("m2 = {m2} must be > 0")));
        }
        if m4 < m2 * m2 {
            return Err(Error::InvalidMoments(format!(
                "m4 = {m4} < m2^2 = {}",
                m2 * m2
            )));
        }
        if c <= 0.0 {
            return Err(Error::InvalidMoments(format!("c = {c} must be > 0")));
        }
        if m2 > c * c {
            return Err(Error::InvalidMoments(format!(
                "m2 = {m2} exceeds c^2 = {}",
                c * c
            )));
        }
        Ok(())
    }
}

/// A centered, ready-to-sample law.
#[derive(Debug, Clone)]
pub struct Distribution {
    pub spec: DistributionSpec,
    /// Mean of the uncentered law; subtracted from every sample.
    pub shift: f64,
    pub centered_support: [f64; 2],
    pub moments: MomentSet,
    sampler: Sampler,
}

#[derive(Debug, Clone)]
enum Sampler {
    Uniform,
    Table(Arc<InverseCdf>),
}

impl Distribution {
    pub fn id(&self) -> String {
        self.spec.to_string()
    }

    fn draw(&self, rng: &mut CounterRng) -> f64 {
        let [lo, hi] = self.centered_support;
        let u = rng.next_open01();
        let x = match &self.sampler {
            Sampler::Uniform => lo + (hi - lo) * u,
            Sampler::Table(t) => t.invert(u),
        };
        x.clamp(lo, hi)
    }
}

/// Builds the centered law for `spec`.
pub fn make_distribution(spec: DistributionSpec) -> Result<Distribution> {
    spec.validate()?;
    let [a, b] = spec.support;
    let w = b - a;

    let (shift, m2, m3, m4) = match spec.law {
        Law::Uniform {} => (0.5 * (a + b), w * w / 12.0, 0.0, w.powi(4) / 80.0),
        Law::BetaScaled { alpha, beta } => {
            let s = alpha + beta;
            let mean = alpha / s;
            let var = alpha * beta / (s * s * (s + 1.0));
            let skew =
                2.0 * (beta - alpha) * (s + 1.0).sqrt() / ((s + 2.0) * (alpha * beta).sqrt());
            let ex_kurt = 6.0 * ((alpha - beta).powi(2) * (s + 1.0) - alpha * beta * (s + 2.0))
                / (alpha * beta * (s + 2.0) * (s + 3.0));
            (
                a + w * mean,
                var * w * w,
                skew * var.powf(1.5) * w.powi(3),
                (ex_kurt + 3.0) * var * var * w.powi(4),
            )
        }
        Law::TruncatedNormal { mean, std } => {
            let density = move |x: f64| {
                let z = (x - mean) / std;
                (-0.5 * z * z).exp()
            };
            let mass = adaptive_simpson(density, a, b, MOMENT_TOL * 1e-3);
            if !(mass > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "truncated-normal has no numerical mass on [{a}, {b}]"
                )));
            }
            let tol = MOMENT_TOL * mass * 1e-2;
            let mu = adaptive_simpson(|x| x * density(x), a, b, tol) / mass;
            let central =
                |k: i32| adaptive_simpson(|x| (x - mu).powi(k) * density(x), a, b, tol) / mass;
            (mu, central(2), central(3), central(4))
        }
    };

    let centered_support = [a - shift, b - shift];
    let [lo, hi] = centered_support;
    if !(lo < 0.0 && 0.0 < hi) {
        return Err(Error::SupportNotCentered { lo, hi });
    }
    let moments = MomentSet {
        m2,
        m3,
        m4,
        c: lo.abs().max(hi.abs()),
    };
    moments.validate()?;

    let sampler = match spec.law {
        Law::Uniform {} => Sampler::Uniform,
        Law::TruncatedNormal { mean, std } => Sampler::Table(Arc::new(InverseCdf::tabulate(
            |x| {
                let z = (x + shift - mean) / std;
                (-0.5 * z * z).exp()
            },
            lo,
            hi,
        ))),
        Law::BetaScaled { alpha, beta } => Sampler::Table(Arc::new(InverseCdf::tabulate(
            |x| {
                let u = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                u.powf(alpha - 1.0) * (1.0 - u).powf(beta - 1.0)
            },
            lo,
            hi,
        ))),
    };

    Ok(Distribution {
        spec,
        shift,
        centered_support,
        moments,
        sampler,
    })
}

/// Draws an `n x d` cloud of i.i.d. coordinates from the centered law.
/// Coordinates are drawn row-major from the counter stream of `seed`.
pub fn sample_coordinates(dist: &Distribution, n: usize, d: usize, seed: u64) -> Result<NodeCloud> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "need N >= 1 and d >= 1, got N={n}, d={d}"
        )));
    }
    let mut rng = CounterRng::new(seed);
    let mut coords = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            coords[(i, j)] = dist.draw(&mut rng);
        }
    }
    Ok(NodeCloud {
        coords,
        seed,
        dist_id: dist.id(),
    })
}

/// Piecewise-linear inverse of a tabulated CDF.
#[derive(Debug)]
struct InverseCdf {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl InverseCdf {
    /// Tabulates the normalized CDF of the (unnormalized) density on `CDF_KNOTS`
    /// equispaced knots, integrating each cell with Simpson's rule.
    fn tabulate<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64) -> Self {
        let cells = CDF_KNOTS - 1;
        let step = (hi - lo) / cells as f64;
        let mut cdf = Vec::with_capacity(CDF_KNOTS);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut f_left = density(lo);
        for k in 0..cells {
            let x0 = lo + step * k as f64;
            let x1 = if k + 1 == cells { hi } else { x0 + step };
            let f_right = density(x1);
            acc += (x1 - x0) / 6.0 * (f_left + 4.0 * density(0.5 * (x0 + x1)) + f_right);
            cdf.push(acc);
            f_left = f_right;
        }
        for v in &mut cdf {
            *v /= acc;
        }
        Self { lo, step, cdf }
    }

    fn invert(&self, u: f64) -> f64 {
        // First knot with cdf >= u; u is in (0, 1) so k >= 1.
        let k = self
            .cdf
            .partition_point(|&c| c < u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.lo + self.step * ((k - 1) as f64 + frac)
    }
}
