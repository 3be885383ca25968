use crate::moments::NormalizedMoments;

use super::{Circle, FitError};

/// Largest accepted condition number of the centred 2x2 scatter matrix.
const MAX_CONDITION: f64 = 1e12;

/// Algebraic circle fit minimizing `sum ((|p - c|^2 - r^2))^2`, solved from
/// centred moments up to order three.
pub fn kasa_fit(m: &NormalizedMoments) -> Result<Circle, FitError> {
    let mx = m.m(1, 0);
    let my = m.m(0, 1);
    let sxx = m.m(2, 0) - mx * mx;
    let sxy = m.m(1, 1) - mx * my;
    let syy = m.m(0, 2) - my * my;
    let sxxx = m.m(3, 0) - 3.0 * mx * m.m(2, 0) + 2.0 * mx * mx * mx;
    let syyy = m.m(0, 3) - 3.0 * my * m.m(0, 2) + 2.0 * my * my * my;
    let sxxy = m.m(2, 1) - 2.0 * mx * m.m(1, 1) - my * m.m(2, 0) + 2.0 * mx * mx * my;
    let sxyy = m.m(1, 2) - 2.0 * my * m.m(1, 1) - mx * m.m(0, 2) + 2.0 * mx * my * my;

    let half_trace = 0.5 * (sxx + syy);
    let spread = (0.5 * (sxx - syy)).hypot(sxy);
    let lmax = half_trace + spread;
    let lmin = half_trace - spread;
    if !(lmin > 0.0) || lmax > MAX_CONDITION * lmin {
        return Err(FitError::CollinearOrDegenerate);
    }

    let rx = 0.5 * (sxxx + sxyy);
    let ry = 0.5 * (sxxy + syyy);
    let det = sxx * syy - sxy * sxy;
    let a = (rx * syy - ry * sxy) / det;
    let b = (ry * sxx - rx * sxy) / det;
    let r2 = a * a + b * b + sxx + syy;
    let circle = Circle::new(mx + a, my + b, r2.sqrt());
    if circle.is_valid() {
        Ok(circle)
    } else {
        Err(FitError::CollinearOrDegenerate)
    }
}
