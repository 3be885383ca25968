use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::moments::NormalizedMoments;
use crate::quadratio::{minimize_ratio, QuadRatio, RatioMin};

use super::{Circle, FitError};

/// The perpendicular bisector of two anchors, `origin + t * dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordLine {
    /// Chord midpoint.
    pub origin: Point,
    /// Unit chord direction rotated by +90 degrees.
    pub dir: Point,
    /// Line parameter of the fitted centre; zero until a fit fills it in.
    pub t: f64,
}

impl ChordLine {
    pub fn at(&self, t: f64) -> Point {
        self.origin + self.dir.scale(t)
    }
}

/// The objective over centres on the bisector of `p1` and `p2`, as a ratio
/// of quadratics in the line parameter.
///
/// With `q = p - p1`, chord direction `u`, half-chord `h` and `c - p1 =
/// h u + t n`, the residual `|q - c'|^2 - |c'|^2` is
/// `(|q|^2 - 2 h q.u) - 2 t q.n`, linear in `t`, and `r^2 = h^2 + t^2`.
pub fn two_point_ratio(
    m: &NormalizedMoments,
    p1: Point,
    p2: Point,
) -> Result<(QuadRatio, ChordLine), FitError> {
    if !p1.is_finite() || !p2.is_finite() {
        return Err(FitError::NonFiniteAnchor);
    }
    let chord = p2 - p1;
    let len = chord.norm();
    if !(len > 0.0) {
        return Err(FitError::CoincidentAnchors);
    }
    let u = chord.scale(1.0 / len);
    let n = u.perp();
    let h = 0.5 * len;

    let t = m.translated(-p1.x, -p1.y);
    let s = [[t.m(2, 0), t.m(1, 1)], [t.m(1, 1), t.m(0, 2)]];
    let w = Point::new(t.m(3, 0) + t.m(1, 2), t.m(2, 1) + t.m(0, 3));
    let q4 = t.m(4, 0) + 2.0 * t.m(2, 2) + t.m(0, 4);
    let form = |a: Point, b: Point| {
        a.x * (s[0][0] * b.x + s[0][1] * b.y) + a.y * (s[1][0] * b.x + s[1][1] * b.y)
    };

    let a0 = q4 - 4.0 * h * u.dot(w) + 4.0 * h * h * form(u, u);
    let a1 = -4.0 * n.dot(w) + 8.0 * h * form(u, n);
    let a2 = 4.0 * form(n, n);
    let ratio = QuadRatio::new([a0, a1, a2], [4.0 * h * h, 0.0, 4.0]);
    let line = ChordLine {
        origin: p1.midpoint(p2),
        dir: n,
        t: 0.0,
    };
    Ok((ratio, line))
}

/// Relative squared off-chord spread treated as zero.
const COLLINEAR_REL: f64 = 1e-14;

/// Circle through both anchors minimizing the surrogate objective.
///
/// `NoArcExists` means the best fit is the straight chord itself.
pub fn two_point_fit(m: &NormalizedMoments, p1: Point, p2: Point) -> Result<Circle, FitError> {
    let (ratio, line) = two_point_ratio(m, p1, p2)?;
    // `a2 / 4` is the mean squared distance to the chord line. Below this
    // fraction of the spread the data are collinear up to rounding, and any
    // finite minimum would be an artefact of it.
    let t = m.translated(-p1.x, -p1.y);
    let spread = t.m(2, 0) + t.m(0, 2);
    if ratio.a[2] <= 4.0 * COLLINEAR_REL * spread {
        return Err(FitError::NoArcExists);
    }
    match minimize_ratio(&ratio)? {
        RatioMin::Minimum { x, .. } => {
            let circle = Circle::through(line.at(x), p1);
            if circle.is_valid() {
                Ok(circle)
            } else {
                Err(FitError::NoArcExists)
            }
        }
        RatioMin::NoMinimum => Err(FitError::NoArcExists),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentAccumulator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn moments(points: &[Point]) -> NormalizedMoments {
        MomentAccumulator::from_points(points.iter().copied())
            .unwrap()
            .normalized()
            .unwrap()
    }

    fn per_point(points: &[Point], c: Point, anchor: Point) -> f64 {
        let r2 = (c - anchor).norm_sq();
        points
            .iter()
            .map(|p| ((*p - c).norm_sq() - r2).powi(2))
            .sum::<f64>()
            / points.len() as f64
            / (4.0 * r2)
    }

    fn noisy_arc(rng: &mut impl Rng, n: usize, noise: f64) -> (Vec<Point>, Point, Point) {
        let start = rng.gen_range(0.0..std::f64::consts::TAU);
        let span = rng.gen_range(0.5..3.0);
        let at = |a: f64| Point::new(a.cos(), a.sin());
        let pts = (1..n - 1)
            .map(|k| {
                let a = start + span * k as f64 / (n - 1) as f64;
                let e = noise * rng.gen_range(-1.0..1.0);
                at(a).scale(1.0 + e)
            })
            .collect();
        (pts, at(start), at(start + span))
    }

    #[test]
    fn ratio_matches_per_point_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            let (pts, p1, p2) = noisy_arc(&mut rng, 30, 0.1);
            let (q, line) = two_point_ratio(&moments(&pts), p1, p2).unwrap();
            assert!((line.dir.norm() - 1.0).abs() < 1e-12);
            assert!((line.origin.distance(p1) - line.origin.distance(p2)).abs() < 1e-12);
            for _ in 0..50 {
                let t = rng.gen_range(-5.0..5.0);
                let oracle = per_point(&pts, line.at(t), p1);
                assert!((q.eval(t) - oracle).abs() <= 1e-9 * oracle, "t = {t}");
            }
        }
    }

    #[test]
    fn exact_quarter_circle() {
        let pts: Vec<_> = (0..12)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 * k as f64 / 11.0;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        let c = two_point_fit(&moments(&pts), Point::new(1.0, 0.0), Point::new(0.0, 1.0)).unwrap();
        assert!(c.cx.abs() < 1e-12 && c.cy.abs() < 1e-12);
        assert!((c.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_data_centres_on_axis() {
        // Symmetric about the y axis, which is the bisector of (-1,0)-(1,0).
        let pts = [
            Point::new(-0.5, 0.9),
            Point::new(0.5, 0.9),
            Point::new(-0.2, 1.1),
            Point::new(0.2, 1.1),
        ];
        let (q, line) = two_point_ratio(&moments(&pts), Point::new(-1.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        let t = minimize_ratio(&q).unwrap().argmin().unwrap();
        assert!(line.at(t).x.abs() < 1e-14);
    }

    #[test]
    fn collinear_data_has_no_arc() {
        let pts: Vec<_> = (1..10).map(|k| Point::new(0.1 * k as f64, 0.2 * k as f64)).collect();
        let res = two_point_fit(&moments(&pts), Point::new(0.0, 0.0), Point::new(1.0, 2.0));
        assert_eq!(res, Err(FitError::NoArcExists));
    }

    #[test]
    fn random_collinear_data_has_no_arc() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let p1 = Point::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let p2 = p1 + Point::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let pts: Vec<_> = (0..rng.gen_range(3..40))
                .map(|_| p1 + (p2 - p1).scale(rng.gen_range(0.0..1.0)))
                .collect();
            assert_eq!(two_point_fit(&moments(&pts), p1, p2), Err(FitError::NoArcExists));
        }
    }

    #[test]
    fn anchors_are_checked() {
        let m = moments(&[Point::new(0.0, 1.0)]);
        let p = Point::new(1.0, 1.0);
        assert_eq!(two_point_fit(&m, p, p), Err(FitError::CoincidentAnchors));
        let nan = Point::new(f64::NAN, 0.0);
        assert_eq!(two_point_fit(&m, p, nan), Err(FitError::NonFiniteAnchor));
    }

    #[test]
    fn swapping_anchors_gives_same_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let (pts, p1, p2) = noisy_arc(&mut rng, 40, 0.05);
            let m = moments(&pts);
            let a = two_point_fit(&m, p1, p2).unwrap();
            let b = two_point_fit(&m, p2, p1).unwrap();
            assert!(a.center().distance(b.center()) < 1e-9);
            assert!((a.r - b.r).abs() < 1e-9);
        }
    }

    #[test]
    fn both_anchors_lie_on_the_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let (pts, p1, p2) = noisy_arc(&mut rng, 25, 0.1);
            let c = two_point_fit(&moments(&pts), p1, p2).unwrap();
            assert_eq!(c.center().distance(p1), c.r);
            assert!((c.center().distance(p2) - c.r).abs() <= 4.0 * f64::EPSILON * c.r);
        }
    }

    #[test]
    fn closed_form_beats_parameter_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let (pts, p1, p2) = noisy_arc(&mut rng, 50, 0.1);
            let (q, line) = two_point_ratio(&moments(&pts), p1, p2).unwrap();
            let t = minimize_ratio(&q).unwrap().argmin().unwrap();
            let best = per_point(&pts, line.at(t), p1);
            for k in 0..=20_000 {
                let s = -20.0 + 40.0 * k as f64 / 20_000.0;
                assert!(per_point(&pts, line.at(s), p1) >= best * (1.0 - 1e-12));
            }
        }
    }
}
