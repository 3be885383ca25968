//! Circle through one known point.
//!
//! With the radius tied to the anchor, `r = |c - a|`, the surrogate objective
//! becomes `h^T A h / (4 h^T B h)` over homogeneous centres
//! `h = (s * cx, s * cy, s)`. `B` has rank two with null vector `(xa, ya, 1)`,
//! so `det(A - lambda B)` is a quadratic in `lambda`. After the change of
//! variables `h = T g`, `T = [[1, 0, xa], [0, 1, ya], [0, 0, 1]]`, `B` becomes
//! `diag(1, 1, 0)` and the finite pencil roots are the eigenvalues of the
//! Schur complement of the last diagonal entry of `T^T A T`.

use std::convert::Infallible;

use crate::dirsearch::{eigen_sym, minimize, DirectionalObjective, Matrix, SearchOptions, Vector};
use crate::geom::Point;
use crate::moments::NormalizedMoments;
use crate::quadratio::QuadRatio;

use super::{congruence, d_proxy, fit_coeffs, kasa_fit, line_ratio, objective, Circle, FitError};

/// Roots with `|s|` below this fraction of `|h|` are centres at infinity.
const MIN_HOMOGENEOUS_SCALE: f64 = 1e-12;
/// Slack on `lambda >= 0` relative to the trace of `A`.
const NEGATIVE_ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchoredQuadForms {
    pub a: [[f64; 3]; 3],
    pub b: [[f64; 3]; 3],
    pub anchor: Point,
}

impl AnchoredQuadForms {
    fn quad(m: &[[f64; 3]; 3], h: &[f64; 3]) -> f64 {
        (0..3)
            .map(|i| (0..3).map(|j| h[i] * m[i][j] * h[j]).sum::<f64>())
            .sum()
    }

    /// `h^T A h / (4 h^T B h)`.
    pub fn ratio(&self, h: &[f64; 3]) -> f64 {
        Self::quad(&self.a, h) / (4.0 * Self::quad(&self.b, h))
    }

    pub fn quad_a(&self, h: &[f64; 3]) -> f64 {
        Self::quad(&self.a, h)
    }

    pub fn quad_b(&self, h: &[f64; 3]) -> f64 {
        Self::quad(&self.b, h)
    }
}

pub fn one_point_matrices(m: &NormalizedMoments, anchor: Point) -> AnchoredQuadForms {
    let (xa, ya) = (anchor.x, anchor.y);
    let rho = xa * xa + ya * ya;
    let m10 = m.m(1, 0);
    let m01 = m.m(0, 1);
    let m20 = m.m(2, 0);
    let m02 = m.m(0, 2);
    let a_xx = 4.0 * (m20 - 2.0 * m10 * xa + xa * xa);
    let a_yy = 4.0 * (m02 - 2.0 * m01 * ya + ya * ya);
    let a_11 = m.m(4, 0) + 2.0 * m.m(2, 2) + m.m(0, 4) - 2.0 * (m20 + m02) * rho + rho * rho;
    let a_xy = 4.0 * (m.m(1, 1) - m10 * ya - m01 * xa + xa * ya);
    let a_x1 = -2.0 * (m.m(3, 0) + m.m(1, 2) - (m20 + m02) * xa - m10 * rho + rho * xa);
    let a_y1 = -2.0 * (m.m(2, 1) + m.m(0, 3) - (m20 + m02) * ya - m01 * rho + rho * ya);
    AnchoredQuadForms {
        a: [[a_xx, a_xy, a_x1], [a_xy, a_yy, a_y1], [a_x1, a_y1, a_11]],
        b: [[1.0, 0.0, -xa], [0.0, 1.0, -ya], [-xa, -ya, rho]],
        anchor,
    }
}

/// A finite root of `det(A - lambda B)` with its null vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilRoot {
    pub lambda: f64,
    /// Homogeneous centre `(s * cx, s * cy, s)`.
    pub h: [f64; 3],
}

impl PencilRoot {
    /// The circle centre, if the root is not at infinity.
    pub fn center(&self) -> Option<Point> {
        let s = self.h[2];
        let norm = self.h[0].hypot(self.h[1]).hypot(s);
        (s.abs() > MIN_HOMOGENEOUS_SCALE * norm).then(|| Point::new(self.h[0] / s, self.h[1] / s))
    }
}

/// Finite pencil roots in ascending order. Empty when `A`'s corner entry
/// vanishes (all data on the anchor).
pub fn solve_pencil(forms: &AnchoredQuadForms) -> Vec<PencilRoot> {
    let (xa, ya) = (forms.anchor.x, forms.anchor.y);
    let t = [[1.0, 0.0, xa], [0.0, 1.0, ya], [0.0, 0.0, 1.0]];
    let at = congruence(&forms.a, &t);
    let f = at[2][2];
    if !(f > 0.0) {
        return Vec::new();
    }
    let (c, e) = (at[0][2], at[1][2]);
    let schur = [
        [at[0][0] - c * c / f, at[0][1] - c * e / f],
        [at[0][1] - c * e / f, at[1][1] - e * e / f],
    ];
    let Ok(eig) = eigen_sym(&schur) else {
        return Vec::new();
    };
    eig.values
        .iter()
        .zip(eig.vectors.iter())
        .map(|(&lambda, u)| {
            let s = -(c * u[0] + e * u[1]) / f;
            PencilRoot {
                lambda,
                h: [u[0] + xa * s, u[1] + ya * s, s],
            }
        })
        .collect()
}

/// Minimizes the surrogate objective over circles through `anchor`.
///
/// Falls back to [`refine_one_point`] from the algebraic centre when the
/// pencil has no admissible root.
pub fn one_point_fit(m: &NormalizedMoments, anchor: Point) -> Result<Circle, FitError> {
    if !anchor.is_finite() {
        return Err(FitError::NonFiniteAnchor);
    }
    let forms = one_point_matrices(m, anchor);
    let trace = forms.a[0][0] + forms.a[1][1] + forms.a[2][2];
    let chosen = solve_pencil(&forms).into_iter().find_map(|root| {
        if root.lambda < -NEGATIVE_ROOT_TOL * trace.abs() || !(forms.quad_b(&root.h) > 0.0) {
            return None;
        }
        root.center()
    });
    if let Some(center) = chosen {
        let circle = Circle::through(center, anchor);
        if circle.is_valid() {
            return Ok(circle);
        }
    }
    let start = kasa_fit(m).map_err(|_| FitError::DegeneratePencil)?;
    let start = Circle::through(start.center(), anchor);
    if !start.is_valid() {
        return Err(FitError::DegeneratePencil);
    }
    Ok(refine_one_point(m, anchor, &start))
}

/// The surrogate objective restricted to circles through `anchor`, over the
/// centre displacement `x` from a start centre. Moving the centre by
/// `(dx, dy)` changes the squared radius by `2 (c - a) . (dx, dy) + |d|^2`,
/// i.e. `dr = 2 dx (xe - xa) + 2 dy (ye - ya)` in the unconstrained
/// parametrization.
struct AnchoredObjective<'a> {
    m: &'a NormalizedMoments,
    anchor: Point,
    start: Point,
}

impl AnchoredObjective<'_> {
    fn circle_at(&self, x: &Vector<2>) -> Circle {
        Circle::through(self.start + Point::new(x[0], x[1]), self.anchor)
    }

    fn chart(&self, c: &Circle) -> [[f64; 2]; 3] {
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [2.0 * (c.cx - self.anchor.x), 2.0 * (c.cy - self.anchor.y)],
        ]
    }
}

impl DirectionalObjective<2> for AnchoredObjective<'_> {
    type Error = Infallible;

    fn value(&self, x: &Vector<2>) -> Result<f64, Infallible> {
        Ok(objective(self.m, &self.circle_at(x)))
    }

    fn hessian_proxy(&self, x: &Vector<2>) -> Result<Matrix<2>, Infallible> {
        let c = self.circle_at(x);
        let d = d_proxy(&fit_coeffs(self.m, &c), c.r).matrix();
        Ok(congruence(&d, &self.chart(&c)))
    }

    fn line_ratio(&self, x: &Vector<2>, dir: &Vector<2>) -> Result<QuadRatio, Infallible> {
        let c = self.circle_at(x);
        let ar = 2.0 * (dir[0] * (c.cx - self.anchor.x) + dir[1] * (c.cy - self.anchor.y));
        Ok(line_ratio(&fit_coeffs(self.m, &c), c.r, [dir[0], dir[1], ar]))
    }

    fn admissible_step(&self, from: &Vector<2>, to: &Vector<2>) -> bool {
        let r_from = self.circle_at(from).r;
        let r_to = self.circle_at(to).r;
        r_to * r_to > 1e-12 * r_from * r_from
    }
}

/// Eigen-direction refinement of a circle through `anchor`; only the centre
/// of `start` is used, the radius always follows from the anchor.
pub fn refine_one_point(m: &NormalizedMoments, anchor: Point, start: &Circle) -> Circle {
    let obj = AnchoredObjective {
        m,
        anchor,
        start: start.center(),
    };
    let out = minimize(&obj, [0.0; 2], SearchOptions::CONVERGED).unwrap_or_else(|e| match e {});
    obj.circle_at(&out.x)
}
