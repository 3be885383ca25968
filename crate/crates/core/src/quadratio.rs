//! Closed-form global minimum of a ratio of two quadratics,
//! `(a0 + a1 x + a2 x^2) / (b0 + b1 x + b2 x^2)`, over the set where the
//! denominator is positive.
//!
//! The numerator must be nonnegative everywhere. Stationary points are the
//! roots of the derivative's numerator `c0 + c1 x + c2 x^2`; which root (if
//! any) is the global minimum follows from the signs of `c2` and `c1` alone,
//! and the root is evaluated with the cancellation-free branch.

use thiserror::Error;

/// Relative slack on the admissibility test for the numerator.
const ADMISSIBLE_TOL: f64 = 1e-9;
/// Denominators below this fraction of their term magnitudes count as zero.
const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatioError {
    #[error("numerator {0:?} is negative somewhere")]
    NegativeNumerator([f64; 3]),
    #[error("non-finite coefficient")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadRatio {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioMin {
    Minimum { x: f64, value: f64 },
    NoMinimum,
}

impl RatioMin {
    pub fn argmin(&self) -> Option<f64> {
        match *self {
            RatioMin::Minimum { x, .. } => Some(x),
            RatioMin::NoMinimum => None,
        }
    }
}

#[inline]
fn poly(c: &[f64; 3], x: f64) -> f64 {
    c[2].mul_add(x, c[1]).mul_add(x, c[0])
}

impl QuadRatio {
    pub const fn new(a: [f64; 3], b: [f64; 3]) -> Self {
        QuadRatio { a, b }
    }

    pub fn numerator(&self, x: f64) -> f64 {
        poly(&self.a, x)
    }

    pub fn denominator(&self, x: f64) -> f64 {
        poly(&self.b, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.numerator(x) / self.denominator(x)
    }

    /// Whether `x` lies in the domain `{denominator > 0}`, with a relative
    /// guard band around the denominator's roots.
    pub fn in_domain(&self, x: f64) -> bool {
        let [b0, b1, b2] = self.b;
        let scale = b0.abs() + (b1 * x).abs() + (b2 * x * x).abs();
        self.denominator(x) > DOMAIN_TOL * scale
    }

    /// Coefficients of the numerator of the derivative.
    pub fn derivative_numerator(&self) -> [f64; 3] {
        let [a0, a1, a2] = self.a;
        let [b0, b1, b2] = self.b;
        [
            a1 * b0 - a0 * b1,
            2.0 * (a2 * b0 - a0 * b2),
            a2 * b1 - a1 * b2,
        ]
    }

    fn check(&self) -> Result<(), RatioError> {
        if self.a.iter().chain(self.b.iter()).any(|c| !c.is_finite()) {
            return Err(RatioError::NonFinite);
        }
        let [a0, a1, a2] = self.a;
        let s = a0.abs() + a1.abs() + a2.abs();
        let slack = ADMISSIBLE_TOL * s;
        if a2 < -slack || a0 < -slack || a1 * a1 - 4.0 * a0 * a2 > slack * s {
            return Err(RatioError::NegativeNumerator(self.a));
        }
        Ok(())
    }
}

/// Global minimizer of the ratio over `{denominator > 0}`.
pub fn minimize_ratio(q: &QuadRatio) -> Result<RatioMin, RatioError> {
    q.check()?;
    let [c0, c1, c2] = q.derivative_numerator();
    let candidate = if c2 == 0.0 {
        (c1 > 0.0).then(|| -c0 / c1)
    } else {
        let disc = c1 * c1 - 4.0 * c0 * c2;
        if disc > 0.0 {
            let sq = disc.sqrt();
            Some(if c1 < 0.0 {
                (sq - c1) / (2.0 * c2)
            } else if c1 > 0.0 {
                -2.0 * c0 / (sq + c1)
            } else {
                c2.signum() * (-c0 / c2).sqrt()
            })
        } else {
            None
        }
    };
    Ok(match candidate {
        Some(x) if x.is_finite() && q.in_domain(x) => {
            // -0.0 from `-c0 / c1` with c0 == 0
            let x = x + 0.0;
            RatioMin::Minimum {
                x,
                value: q.eval(x).max(0.0),
            }
        }
        _ => RatioMin::NoMinimum,
    })
}
