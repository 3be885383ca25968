//! Point-by-point reference computations: exact objectives, an iterative
//! geometric fit, and the arc tolerance test used by the compressor.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcfit::Circle;
use crate::geom::Point;

const MAX_ITERATIONS: usize = 200;
const REL_STEP_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefError {
    #[error("at least {0} points are required")]
    TooFewPoints(usize),
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("singular normal equations")]
    Singular,
}

/// `sum (|p - c|^2 - r^2)^2`.
pub fn exact_objective_sq(points: &[Point], c: &Circle) -> f64 {
    let r2 = c.r * c.r;
    points
        .iter()
        .map(|p| {
            let e = (*p - c.center()).norm_sq() - r2;
            e * e
        })
        .sum()
}

/// `sum (|p - c| - r)^2`.
pub fn exact_sse(points: &[Point], c: &Circle) -> f64 {
    points.iter().map(|p| c.radial_offset(*p).powi(2)).sum()
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][3] - s) / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Local minimizer of [`exact_sse`] from `start`, by Gauss-Newton with step
/// halving. Never returns a circle worse than `start`.
pub fn geometric_fit(points: &[Point], start: &Circle) -> Result<Circle, RefError> {
    if points.len() < 3 {
        return Err(RefError::TooFewPoints(3));
    }
    let mut cur = *start;
    let mut cur_sse = exact_sse(points, &cur);
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for p in points {
            let d = *p - cur.center();
            let dist = d.norm();
            if dist == 0.0 {
                continue;
            }
            let row = [-d.x / dist, -d.y / dist, -1.0];
            let res = dist - cur.r;
            for i in 0..3 {
                jtr[i] += row[i] * res;
                for j in 0..3 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        let step = solve3(jtj, jtr.map(|v| -v)).ok_or(RefError::Singular)?;
        let scale = cur.cx.abs() + cur.cy.abs() + cur.r;
        let mut factor = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = Circle::new(
                cur.cx + factor * step[0],
                cur.cy + factor * step[1],
                cur.r + factor * step[2],
            );
            if trial.is_valid() {
                let sse = exact_sse(points, &trial);
                if sse <= cur_sse {
                    accepted = Some((trial, sse));
                    break;
                }
            }
            factor *= 0.5;
        }
        let Some((next, sse)) = accepted else {
            // No step along the Gauss-Newton direction helps: stationary up
            // to rounding.
            return Ok(cur);
        };
        let moved = (next.cx - cur.cx)
            .abs()
            .max((next.cy - cur.cy).abs())
            .max((next.r - cur.r).abs());
        cur = next;
        cur_sse = sse;
        if moved <= REL_STEP_TOL * scale {
            return Ok(cur);
        }
    }
    Err(RefError::NonConvergence(MAX_ITERATIONS))
}

/// A circular arc from `start` to `end`, counter-clockwise when `ccw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub circle: Circle,
    pub start: Point,
    pub end: Point,
    pub ccw: bool,
}

impl Arc {
    pub fn new(circle: Circle, start: Point, end: Point, ccw: bool) -> Self {
        Arc {
            circle,
            start,
            end,
            ccw,
        }
    }

    /// The arc from `start` to `end` on the side of the chord where most of
    /// `via` lies (each of the two arcs stays on one side of the chord).
    pub fn through(circle: Circle, start: Point, end: Point, via: &[Point]) -> Self {
        let chord = end - start;
        let side: f64 = via.iter().map(|p| chord.cross(*p - start)).sum();
        // Points to the right of the chord are reached counter-clockwise.
        Arc::new(circle, start, end, side < 0.0)
    }

    fn angle(&self, p: Point) -> f64 {
        (p.y - self.circle.cy).atan2(p.x - self.circle.cx)
    }

    pub fn start_angle(&self) -> f64 {
        self.angle(self.start)
    }

    pub fn end_angle(&self) -> f64 {
        self.angle(self.end)
    }

    /// Angle travelled from `start` towards `p` along the orientation, in
    /// `[0, 2 pi)`.
    pub fn param(&self, p: Point) -> f64 {
        let d = if self.ccw {
            self.angle(p) - self.start_angle()
        } else {
            self.start_angle() - self.angle(p)
        };
        let t = d.rem_euclid(TAU);
        if t >= TAU {
            0.0
        } else {
            t
        }
    }

    /// Angular extent in `(0, 2 pi)`; zero for coincident endpoint angles.
    pub fn span(&self) -> f64 {
        self.param(self.end)
    }

    pub fn length(&self) -> f64 {
        self.span() * self.circle.r
    }
}

/// Distance from `p` to the arc: radial when `p` lies in the angular span,
/// otherwise to the nearer endpoint.
pub fn arc_deviation(p: Point, arc: &Arc) -> f64 {
    if arc.param(p) <= arc.span() {
        arc.circle.radial_offset(p).abs()
    } else {
        p.distance(arc.start).min(p.distance(arc.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_dev: f64,
    pub sum_sq: f64,
    /// Interior points advance strictly along the arc.
    pub monotone: bool,
    /// `monotone` and `max_dev <= tol`.
    pub passed: bool,
}

/// Checks the interior of `points` (first and last are the arc endpoints)
/// against `arc`: deviation within `tol` and strictly increasing angular
/// parameter from start to end.
pub fn check_tolerance_zigzag(points: &[Point], arc: &Arc, tol: f64) -> DeviationReport {
    let interior = if points.len() > 2 {
        &points[1..points.len() - 1]
    } else {
        &[]
    };
    let mut max_dev: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut prev = 0.0;
    let mut monotone = true;
    for p in interior {
        let dev = arc_deviation(*p, arc);
        max_dev = max_dev.max(dev);
        sum_sq += dev * dev;
        let t = arc.param(*p);
        if !(t > prev) {
            monotone = false;
        }
        prev = t;
    }
    if !(arc.span() > prev) {
        monotone = false;
    }
    DeviationReport {
        max_dev,
        sum_sq,
        monotone,
        passed: monotone && max_dev <= tol,
    }
}
