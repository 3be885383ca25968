use std::convert::Infallible;

use crate::dirsearch::{minimize, DirectionalObjective, Matrix, SearchOptions, Vector};
use crate::moments::NormalizedMoments;
use crate::quadratio::QuadRatio;

use super::{congruence, d_proxy, fit_coeffs, kasa_fit, line_ratio, Circle, FitCoeffs, FitError};

/// Updated radii below this fraction of the current one are refused.
const MIN_RADIUS_SQ_FRACTION: f64 = 1e-12;

/// The surrogate objective over `x = (dx, dy, dr)` measured from a fixed base
/// circle, i.e. the circle `(bx + dx, by + dy, sqrt(br^2 + dx^2 + dy^2 + dr))`.
///
/// Coefficients are re-derived at the current circle for every line search
/// and Hessian proxy. Directions are carried from base to local
/// coordinates by the affine map `dr_local = dr + 2 (c - b) . (dx, dy)`.
pub struct FreeObjective<'a> {
    m: &'a NormalizedMoments,
    base: Circle,
    base_coeffs: FitCoeffs,
}

impl<'a> FreeObjective<'a> {
    pub fn new(m: &'a NormalizedMoments, base: Circle) -> Self {
        FreeObjective {
            m,
            base,
            base_coeffs: fit_coeffs(m, &base),
        }
    }

    fn radius_sq(&self, x: &Vector<3>) -> f64 {
        self.base.r * self.base.r + x[0] * x[0] + x[1] * x[1] + x[2]
    }

    /// The circle at parameter `x`; `None` if the radius is not positive.
    pub fn circle_at(&self, x: &Vector<3>) -> Option<Circle> {
        let r2 = self.radius_sq(x);
        (r2 > 0.0).then(|| Circle::new(self.base.cx + x[0], self.base.cy + x[1], r2.sqrt()))
    }

    /// Rows of the map from base-coordinate directions to local ones at `c`.
    fn chart(&self, c: &Circle) -> [[f64; 3]; 3] {
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [2.0 * (c.cx - self.base.cx), 2.0 * (c.cy - self.base.cy), 1.0],
        ]
    }

    fn local(&self, x: &Vector<3>) -> Circle {
        // Steps are vetoed before the radius can collapse.
        self.circle_at(x).unwrap_or(self.base)
    }
}

impl DirectionalObjective<3> for FreeObjective<'_> {
    type Error = Infallible;

    fn value(&self, x: &Vector<3>) -> Result<f64, Infallible> {
        Ok(self.base_coeffs.ratio(self.base.r, x[0], x[1], x[2]).max(0.0))
    }

    fn hessian_proxy(&self, x: &Vector<3>) -> Result<Matrix<3>, Infallible> {
        let c = self.local(x);
        let d = d_proxy(&fit_coeffs(self.m, &c), c.r).matrix();
        Ok(congruence(&d, &self.chart(&c)))
    }

    fn line_ratio(&self, x: &Vector<3>, dir: &Vector<3>) -> Result<QuadRatio, Infallible> {
        let c = self.local(x);
        let j = self.chart(&c);
        let local_dir: [f64; 3] =
            std::array::from_fn(|i| j[i][0] * dir[0] + j[i][1] * dir[1] + j[i][2] * dir[2]);
        Ok(line_ratio(&fit_coeffs(self.m, &c), c.r, local_dir))
    }

    fn admissible_step(&self, from: &Vector<3>, to: &Vector<3>) -> bool {
        self.radius_sq(to) > MIN_RADIUS_SQ_FRACTION * self.radius_sq(from)
    }
}

/// Result of an unconstrained fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeFit {
    pub circle: Circle,
    /// The algebraic start circle.
    pub start: Circle,
    /// Surrogate objective per unit weight at `circle`.
    pub value: f64,
    /// Surrogate objective per unit weight at `start`.
    pub start_value: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Circle after each sweep, beginning with `start`.
    pub trace: Vec<Circle>,
}

/// Unconstrained fit with `sweeps` eigen-direction sweeps from the algebraic
/// circle. One sweep is the approximate mode; more sweeps stop early once a
/// sweep no longer moves the parameters.
pub fn free_fit(m: &NormalizedMoments, sweeps: usize) -> Result<Circle, FitError> {
    let opts = if sweeps <= 1 {
        SearchOptions::APPROXIMATE
    } else {
        SearchOptions {
            sweeps,
            tol: SearchOptions::CONVERGED.tol,
        }
    };
    Ok(free_fit_with(m, opts)?.circle)
}

pub fn free_fit_with(m: &NormalizedMoments, opts: SearchOptions) -> Result<FreeFit, FitError> {
    let start = kasa_fit(m)?;
    let obj = FreeObjective::new(m, start);
    let start_value = obj.value(&[0.0; 3]).unwrap_or_else(|e| match e {});
    let out = minimize(&obj, [0.0; 3], opts).unwrap_or_else(|e| match e {});
    let trace: Vec<Circle> = out.trace.iter().map(|x| obj.local(x)).collect();
    Ok(FreeFit {
        circle: obj.local(&out.x),
        start,
        value: out.value,
        start_value,
        sweeps: out.sweeps,
        converged: out.converged,
        trace,
    })
}
