//! Moment-based circle and arc fitting.
//!
//! The objective minimized everywhere in this module is the algebraic
//! residual divided by the squared radius,
//!
//! ```text
//!   F(c, r) = sum_i w_i ((|p_i - c|^2 - r^2)^2) / (4 r^2),
//! ```
//!
//! a first-order Taylor surrogate for the geometric sum of squared distances
//! that, unlike the latter, depends on the data only through the moments up
//! to order four. Three fitters are provided:
//!
//! * [`free_fit`]: unconstrained, eigen-direction search from the algebraic
//!   (Kåsa) circle;
//! * [`one_point_fit`]: circle through one anchor, a generalized Rayleigh
//!   quotient solved as a 3x3 pencil;
//! * [`two_point_fit`]: circle through two anchors, a one-dimensional ratio of
//!   quadratics minimized in closed form.
//!
//! All of them take [`NormalizedMoments`]. [`ArcFitter`] wraps them for
//! [`MomentAccumulator`] input and re-centres the moments on the centroid
//! first, which matters once the data sit far from the origin.

mod coeffs;
mod free;
mod kasa;
mod one_point;
mod two_point;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dirsearch::SearchOptions;
use crate::geom::Point;
use crate::moments::{MomentAccumulator, MomentError, NormalizedMoments};
use crate::quadratio::RatioError;

pub use coeffs::{d_proxy, fit_coeffs, line_ratio, objective, penalty, DProxy, FitCoeffs};
pub use free::{free_fit, free_fit_with, FreeFit, FreeObjective};
pub use kasa::kasa_fit;
pub use one_point::{
    one_point_fit, one_point_matrices, refine_one_point, solve_pencil, AnchoredQuadForms,
    PencilRoot,
};
pub use two_point::{two_point_fit, two_point_ratio, ChordLine};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("points are collinear or otherwise degenerate")]
    CollinearOrDegenerate,
    #[error("no admissible eigenvector of the anchored pencil")]
    DegeneratePencil,
    #[error("no arc through the anchors beats a straight line")]
    NoArcExists,
    #[error("anchor points coincide")]
    CoincidentAnchors,
    #[error("non-finite anchor")]
    NonFiniteAnchor,
    #[error(transparent)]
    Moments(#[from] MomentError),
    #[error(transparent)]
    Ratio(#[from] RatioError),
}

impl FitError {
    /// Stable identifier used in command-line error reports.
    pub fn name(&self) -> &'static str {
        match self {
            FitError::CollinearOrDegenerate => "CollinearOrDegenerate",
            FitError::DegeneratePencil => "DegeneratePencil",
            FitError::NoArcExists => "NoArcExists",
            FitError::CoincidentAnchors => "CoincidentAnchors",
            FitError::NonFiniteAnchor => "NonFiniteAnchor",
            FitError::Moments(_) => "InvalidMoments",
            FitError::Ratio(_) => "InvalidRatio",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub const fn new(cx: f64, cy: f64, r: f64) -> Self {
        Circle { cx, cy, r }
    }

    /// Circle centred at `center` passing through `through`.
    pub fn through(center: Point, through: Point) -> Self {
        Circle::new(center.x, center.y, center.distance(through))
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Circle::new(self.cx + dx, self.cy + dy, self.r)
    }

    pub fn is_valid(&self) -> bool {
        self.cx.is_finite() && self.cy.is_finite() && self.r.is_finite() && self.r > 0.0
    }

    /// Signed radial offset of `p`.
    pub fn radial_offset(&self, p: Point) -> f64 {
        p.distance(self.center()) - self.r
    }
}

/// `J^T D J` for an `N x M` matrix `J`.
pub(crate) fn congruence<const N: usize, const M: usize>(
    d: &[[f64; N]; N],
    j: &[[f64; M]; N],
) -> [[f64; M]; M] {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut s = 0.0;
            for k in 0..N {
                for l in 0..N {
                    s += j[k][a] * d[k][l] * j[l][b];
                }
            }
            s
        })
    })
}

/// Fitters over raw accumulators, with optional re-centring of the moments
/// on the data centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcFitter {
    /// Translate moments (and anchors) to the centroid before fitting.
    pub center_moments: bool,
    /// Sweeps and stop rule for the unconstrained fit.
    pub search: SearchOptions,
}

impl Default for ArcFitter {
    fn default() -> Self {
        ArcFitter {
            center_moments: true,
            search: SearchOptions::APPROXIMATE,
        }
    }
}

impl ArcFitter {
    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.search = if sweeps <= 1 {
            SearchOptions::APPROXIMATE
        } else {
            SearchOptions {
                sweeps,
                tol: SearchOptions::CONVERGED.tol,
            }
        };
        self
    }

    pub fn without_centering(mut self) -> Self {
        self.center_moments = false;
        self
    }

    /// Normalized moments in the working frame and the frame's origin.
    pub fn prepare(&self, acc: &MomentAccumulator) -> Result<(NormalizedMoments, Point), FitError> {
        if self.center_moments {
            let (centered, origin) = acc.centered()?;
            Ok((centered.normalized()?, origin))
        } else {
            Ok((acc.normalized()?, Point::ORIGIN))
        }
    }

    pub fn kasa(&self, acc: &MomentAccumulator) -> Result<Circle, FitError> {
        let (m, o) = self.prepare(acc)?;
        Ok(kasa_fit(&m)?.translated(o.x, o.y))
    }

    pub fn free(&self, acc: &MomentAccumulator) -> Result<Circle, FitError> {
        Ok(self.free_detailed(acc)?.circle)
    }

    /// Unconstrained fit with the start circle and per-sweep trace, all in
    /// input coordinates.
    pub fn free_detailed(&self, acc: &MomentAccumulator) -> Result<FreeFit, FitError> {
        let (m, o) = self.prepare(acc)?;
        let mut fit = free_fit_with(&m, self.search)?;
        fit.circle = fit.circle.translated(o.x, o.y);
        fit.start = fit.start.translated(o.x, o.y);
        for c in fit.trace.iter_mut() {
            *c = c.translated(o.x, o.y);
        }
        Ok(fit)
    }

    pub fn one_point(&self, acc: &MomentAccumulator, anchor: Point) -> Result<Circle, FitError> {
        let (m, o) = self.prepare(acc)?;
        let c = one_point_fit(&m, anchor - o)?;
        // Recompute the radius in input coordinates so the anchor stays exact.
        Ok(Circle::through(c.center() + o, anchor))
    }

    pub fn two_point(
        &self,
        acc: &MomentAccumulator,
        p1: Point,
        p2: Point,
    ) -> Result<Circle, FitError> {
        let (m, o) = self.prepare(acc)?;
        let c = two_point_fit(&m, p1 - o, p2 - o)?;
        Ok(Circle::through(c.center() + o, p1))
    }

    /// Approximate sum of squared radial deviations, `W * v / (4 r^2)`.
    pub fn penalty(&self, acc: &MomentAccumulator, circle: &Circle) -> Result<f64, FitError> {
        let (m, o) = self.prepare(acc)?;
        Ok(penalty(&m, &circle.translated(-o.x, -o.y)))
    }

    /// The surrogate objective per unit weight, `v / (4 r^2)`.
    pub fn objective(&self, acc: &MomentAccumulator, circle: &Circle) -> Result<f64, FitError> {
        let (m, o) = self.prepare(acc)?;
        Ok(objective(&m, &circle.translated(-o.x, -o.y)))
    }
}
