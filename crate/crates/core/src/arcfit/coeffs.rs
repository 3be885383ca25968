use crate::moments::NormalizedMoments;
use crate::quadratio::QuadRatio;

use super::Circle;

/// Coefficients of the surrogate objective around an estimate
/// `(xe, ye, re)` in the shifted parametrization
/// `(xe + dx, ye + dy, sqrt(re^2 + dx^2 + dy^2 + dr))`:
///
/// ```text
///   f = (v + v_x dx + v_y dy + v_r dr + v_xx dx^2 + v_yy dy^2 + dr^2
///          + v_xy dx dy + v_xr dx dr + v_yr dy dr)
///       / (4 (re^2 + dx^2 + dy^2 + dr))
/// ```
///
/// The parametrization cancels every third and fourth order term of the
/// numerator, which is what makes exact line searches possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCoeffs {
    pub v: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_r: f64,
    pub v_xx: f64,
    pub v_yy: f64,
    pub v_xy: f64,
    pub v_xr: f64,
    pub v_yr: f64,
    pub z: f64,
    pub z_x: f64,
    pub z_y: f64,
}

impl FitCoeffs {
    /// Numerator of the shifted objective.
    pub fn numerator(&self, dx: f64, dy: f64, dr: f64) -> f64 {
        self.v
            + self.v_x * dx
            + self.v_y * dy
            + self.v_r * dr
            + self.v_xx * dx * dx
            + self.v_yy * dy * dy
            + dr * dr
            + self.v_xy * dx * dy
            + self.v_xr * dx * dr
            + self.v_yr * dy * dr
    }

    /// The shifted objective itself; `re` is the estimate's radius.
    pub fn ratio(&self, re: f64, dx: f64, dy: f64, dr: f64) -> f64 {
        self.numerator(dx, dy, dr) / (4.0 * (re * re + dx * dx + dy * dy + dr))
    }
}

pub fn fit_coeffs(m: &NormalizedMoments, e: &Circle) -> FitCoeffs {
    let (xe, ye, re) = (e.cx, e.cy, e.r);
    let re2 = re * re;
    let z = xe * xe + ye * ye - re2;
    let z_x = 3.0 * xe * xe + ye * ye - re2;
    let z_y = xe * xe + 3.0 * ye * ye - re2;

    let m10 = m.m(1, 0);
    let m01 = m.m(0, 1);
    let m20 = m.m(2, 0);
    let m11 = m.m(1, 1);
    let m02 = m.m(0, 2);
    let m30 = m.m(3, 0);
    let m21 = m.m(2, 1);
    let m12 = m.m(1, 2);
    let m03 = m.m(0, 3);
    let m40 = m.m(4, 0);
    let m22 = m.m(2, 2);
    let m04 = m.m(0, 4);

    let v = (m40 + 2.0 * m22 + m04) - 4.0 * (m30 + m12) * xe - 4.0 * (m21 + m03) * ye
        + 8.0 * m11 * xe * ye
        + 2.0 * m20 * z_x
        + 2.0 * m02 * z_y
        - 4.0 * (m10 * xe + m01 * ye) * z
        + z * z;
    let v_x = 4.0
        * (-(m30 + m12) + (3.0 * m20 + m02) * xe + 2.0 * m11 * ye - 2.0 * m01 * xe * ye
            - m10 * z_x
            + xe * z);
    let v_y = 4.0
        * (-(m21 + m03) + (m20 + 3.0 * m02) * ye + 2.0 * m11 * xe - 2.0 * m10 * xe * ye
            - m01 * z_y
            + ye * z);
    let v_r = -2.0 * (m20 + m02 - 2.0 * (m10 * xe + m01 * ye) + z);
    let v_xx = 4.0 * (m20 - 2.0 * m10 * xe + xe * xe);
    let v_yy = 4.0 * (m02 - 2.0 * m01 * ye + ye * ye);
    let v_xy = 8.0 * (m11 - m01 * xe - m10 * ye + xe * ye);
    let v_xr = 4.0 * (m10 - xe);
    let v_yr = 4.0 * (m01 - ye);

    FitCoeffs {
        v,
        v_x,
        v_y,
        v_r,
        v_xx,
        v_yy,
        v_xy,
        v_xr,
        v_yr,
        z,
        z_x,
        z_y,
    }
}

/// Symmetric matrix proportional (by `re^6`) to the Hessian of the shifted
/// objective at `dx = dy = dr = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DProxy {
    pub d_xx: f64,
    pub d_xy: f64,
    pub d_yy: f64,
    pub d_xr: f64,
    pub d_yr: f64,
    pub d_rr: f64,
}

impl DProxy {
    /// Row-major in the order `(dx, dy, dr)`.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.d_xx, self.d_xy, self.d_xr],
            [self.d_xy, self.d_yy, self.d_yr],
            [self.d_xr, self.d_yr, self.d_rr],
        ]
    }
}

pub fn d_proxy(c: &FitCoeffs, re: f64) -> DProxy {
    let re2 = re * re;
    let re4 = re2 * re2;
    DProxy {
        d_xx: -2.0 * (c.v - c.v_xx * re2) * re2,
        d_xy: c.v_xy * re4,
        d_yy: -2.0 * (c.v - c.v_yy * re2) * re2,
        d_xr: (-c.v_x + c.v_xr * re2) * re2,
        d_yr: (-c.v_y + c.v_yr * re2) * re2,
        // re^4 on the last term keeps the common factor re^6 across entries.
        d_rr: 2.0 * (c.v - c.v_r * re2 + re4),
    }
}

/// The shifted objective on `t * dir`, `dir = (a_x, a_y, a_r)`, as a ratio of
/// quadratics in `t`.
pub fn line_ratio(c: &FitCoeffs, re: f64, dir: [f64; 3]) -> QuadRatio {
    let [ax, ay, ar] = dir;
    QuadRatio::new(
        [
            c.v,
            c.v_x * ax + c.v_y * ay + c.v_r * ar,
            c.v_xx * ax * ax
                + c.v_yy * ay * ay
                + ar * ar
                + c.v_xy * ax * ay
                + c.v_xr * ax * ar
                + c.v_yr * ay * ar,
        ],
        [4.0 * re * re, 4.0 * ar, 4.0 * (ax * ax + ay * ay)],
    )
}

/// Surrogate objective per unit weight at `circle`, `v / (4 r^2)`.
pub fn objective(m: &NormalizedMoments, circle: &Circle) -> f64 {
    let v = fit_coeffs(m, circle).v.max(0.0);
    v / (4.0 * circle.r * circle.r)
}

/// Approximate sum of squared radial deviations, `W * v / (4 r^2)`.
pub fn penalty(m: &NormalizedMoments, circle: &Circle) -> f64 {
    m.weight() * objective(m, circle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::moments::MomentAccumulator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn moments(points: &[Point]) -> NormalizedMoments {
        MomentAccumulator::from_points(points.iter().copied())
            .unwrap()
            .normalized()
            .unwrap()
    }

    /// Mean over points of the shifted objective, evaluated point by point.
    fn per_point(points: &[Point], e: &Circle, dx: f64, dy: f64, dr: f64) -> f64 {
        let cx = e.cx + dx;
        let cy = e.cy + dy;
        let r2 = e.r * e.r + dx * dx + dy * dy + dr;
        let num: f64 = points
            .iter()
            .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2) - r2).powi(2))
            .sum();
        num / points.len() as f64 / (4.0 * r2)
    }

    fn random_cloud(rng: &mut impl Rng, n: usize) -> Vec<Point> {
        (0..n)
            .map(|_| Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect()
    }

    fn unit_circle_points(n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let a = 0.3 + 0.7 * k as f64;
                Point::new(a.cos(), a.sin())
            })
            .collect()
    }

    #[test]
    fn perfect_fit_is_stationary() {
        let m = moments(&unit_circle_points(12));
        let c = fit_coeffs(&m, &Circle::new(0.0, 0.0, 1.0));
        assert!(c.v.abs() < 1e-14);
        assert!(c.v_x.abs() < 1e-14);
        assert!(c.v_y.abs() < 1e-14);
        assert!(c.v_r.abs() < 1e-14);
    }

    #[test]
    fn single_point_value() {
        let m = moments(&[Point::new(1.1, 0.0)]);
        let c = fit_coeffs(&m, &Circle::new(0.0, 0.0, 1.0));
        // (1.1^2 - 1)^2
        assert!((c.v - 0.0441).abs() < 1e-15);
        assert!((penalty(&m, &Circle::new(0.0, 0.0, 1.0)) - 0.011025).abs() < 1e-15);
    }

    #[test]
    fn shifted_objective_matches_per_point_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pts = random_cloud(&mut rng, 30);
        let m = moments(&pts);
        let e = Circle::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
        let c = fit_coeffs(&m, &e);
        assert!(c.v >= 0.0);
        assert!((c.ratio(e.r, 0.0, 0.0, 0.0) - c.v / (4.0 * e.r * e.r)).abs() < 1e-15);
        for _ in 0..100 {
            let dx = rng.gen_range(-1.0..1.0);
            let dy = rng.gen_range(-1.0..1.0);
            let dr = rng.gen_range(-0.2..1.0);
            let oracle = per_point(&pts, &e, dx, dy, dr);
            let got = c.ratio(e.r, dx, dy, dr);
            assert!((got - oracle).abs() <= 1e-9 * oracle.abs(), "{got} vs {oracle}");
        }
    }

    #[test]
    fn line_ratio_matches_per_point_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_cloud(&mut rng, 25);
        let m = moments(&pts);
        let e = Circle::new(0.2, -0.1, 1.3);
        let c = fit_coeffs(&m, &e);
        for _ in 0..20 {
            let dir = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let q = line_ratio(&c, e.r, dir);
            assert!((q.eval(0.0) - c.v / (4.0 * e.r * e.r)).abs() < 1e-15);
            for _ in 0..20 {
                let t = rng.gen_range(-0.5..0.5);
                if q.denominator(t) <= 0.0 {
                    continue;
                }
                let oracle = per_point(&pts, &e, t * dir[0], t * dir[1], t * dir[2]);
                assert!((q.eval(t) - oracle).abs() <= 1e-9 * oracle.abs());
            }
        }
    }

    #[test]
    fn radius_direction_reads_off_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = moments(&random_cloud(&mut rng, 10));
        let e = Circle::new(0.0, 0.0, 1.5);
        let c = fit_coeffs(&m, &e);
        let q = line_ratio(&c, e.r, [0.0, 0.0, 1.0]);
        assert_eq!(q.a, [c.v, c.v_r, 1.0]);
        assert_eq!(q.b, [4.0 * 2.25, 4.0, 0.0]);
    }

    /// Central differences on the shifted objective evaluated in double-double,
    /// so that only the O(h^2) truncation error remains.
    fn numerical_hessian(c: &FitCoeffs, re: f64) -> [[f64; 3]; 3] {
        use crate::dd::Dd;
        let h = 1e-5;
        let f = |d: [f64; 3]| -> Dd {
            let [dx, dy, dr] = d.map(Dd::from_f64);
            let k = Dd::from_f64;
            let num = k(c.v)
                + dx * k(c.v_x)
                + dy * k(c.v_y)
                + dr * k(c.v_r)
                + dx * dx * k(c.v_xx)
                + dy * dy * k(c.v_yy)
                + dr * dr
                + dx * dy * k(c.v_xy)
                + dx * dr * k(c.v_xr)
                + dy * dr * k(c.v_yr);
            let den = (Dd::prod(re, re) + dx * dx + dy * dy + dr).mul_f64(4.0);
            // num / den to ~32 digits via one Newton correction
            let q = Dd::from_f64(num.to_f64() / den.to_f64());
            q + (num - q * den).div_f64(den.to_f64())
        };
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut pp = [0.0; 3];
                let mut pm = [0.0; 3];
                let mut mp = [0.0; 3];
                let mut mm = [0.0; 3];
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                (f(pp) - f(pm) - f(mp) + f(mm)).to_f64() / (4.0 * h * h)
            })
        })
    }

    #[test]
    fn d_proxy_is_proportional_to_hessian() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let pts = random_cloud(&mut rng, 40);
            let m = moments(&pts);
            let e = Circle::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(0.7..1.8));
            let c = fit_coeffs(&m, &e);
            let d = d_proxy(&c, e.r).matrix();
            let h = numerical_hessian(&c, e.r);
            // Common factor 4 re^6 (the objective carries the 1/4).
            let factor = 4.0 * e.r.powi(6);
            let norm = d.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..3 {
                for j in 0..3 {
                    let scaled = h[i][j] * factor;
                    assert!(
                        (scaled - d[i][j]).abs() <= 1e-6 * norm,
                        "({i},{j}): {scaled} vs {}",
                        d[i][j]
                    );
                }
            }
            assert_eq!(d, [[d[0][0], d[1][0], d[2][0]], [d[0][1], d[1][1], d[2][1]], [d[0][2], d[1][2], d[2][2]]]);
        }
    }

    #[test]
    fn exact_fit_diagonal() {
        let m = moments(&unit_circle_points(9));
        let c = fit_coeffs(&m, &Circle::new(0.0, 0.0, 1.0));
        let d = d_proxy(&c, 1.0);
        assert!((d.d_xx - 2.0 * c.v_xx).abs() < 1e-13);
        assert!(d.d_xx > 0.0);
    }
}
