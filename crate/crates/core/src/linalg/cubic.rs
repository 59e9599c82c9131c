use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DISCRIMINANT_REL_TOL: f64 = 1e-12;

/// Coefficients of `α0 + α1 λ + α2 λ² + α3 λ³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoeffs {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl CubicCoeffs {
    pub fn new(alpha0: f64, alpha1: f64, alpha2: f64, alpha3: f64) -> Self {
        Self {
            alpha0,
            alpha1,
            alpha2,
            alpha3,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((self.alpha3 * x + self.alpha2) * x + self.alpha1) * x + self.alpha0
    }

    fn deriv(&self, x: f64) -> f64 {
        (3.0 * self.alpha3 * x + 2.0 * self.alpha2) * x + self.alpha1
    }

    pub fn max_abs_coeff(&self) -> f64 {
        [self.alpha0, self.alpha1, self.alpha2, self.alpha3]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Three real roots in ascending order, by the trigonometric method followed
/// by two Newton steps per root.
pub fn cubic_real_roots(c: CubicCoeffs) -> Result<[f64; 3]> {
    if c.alpha3 == 0.0 || !c.alpha3.is_finite() {
        return Err(Error::InvalidParameter(
            "leading coefficient must be nonzero".into(),
        ));
    }
    // monic: λ³ + a λ² + b λ + e
    let a = c.alpha2 / c.alpha3;
    let b = c.alpha1 / c.alpha3;
    let e = c.alpha0 / c.alpha3;
    // λ = t − a/3 gives t³ + p t + q
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + e;
    let shift = -a / 3.0;

    let scale = a.abs().max(b.abs().sqrt()).max(e.abs().cbrt());
    let disc = 4.0 * p * p * p + 27.0 * q * q; // > 0 ⇔ one real root
    if disc > DISCRIMINANT_REL_TOL * scale.powi(6) {
        return Err(Error::ComplexRoots {
            discriminant: -disc,
        });
    }

    let mut roots = if p >= 0.0 {
        // only reachable within tolerance of a triple root
        let t = (-q).cbrt();
        [t + shift; 3]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        [
            m * phi.cos() + shift,
            m * (phi - 2.0 * PI / 3.0).cos() + shift,
            m * (phi - 4.0 * PI / 3.0).cos() + shift,
        ]
    };

    for r in roots.iter_mut() {
        for _ in 0..2 {
            let f = c.eval(*r);
            let df = c.deriv(*r);
            if df == 0.0 || f == 0.0 {
                break;
            }
            let next = *r - f / df;
            // keep the step only if it reduces the residual
            if c.eval(next).abs() < f.abs() {
                *r = next;
            } else {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}
