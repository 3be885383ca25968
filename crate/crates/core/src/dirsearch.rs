//! Eigen-direction search for smooth functions whose restriction to any line
//! is a ratio of quadratics.
//!
//! Each sweep takes the eigenvectors of a matrix proportional to the Hessian
//! at the current point and minimizes exactly along each of them in turn.
//! For a quadratic objective the eigenvectors are conjugate, so a single
//! sweep lands on the minimum from any start.

use thiserror::Error;

use crate::quadratio::{minimize_ratio, QuadRatio, RatioMin};

pub type Vector<const N: usize> = [f64; N];
pub type Matrix<const N: usize> = [[f64; N]; N];

const JACOBI_MAX_SWEEPS: usize = 15;
const JACOBI_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// An objective usable by [`minimize`].
pub trait DirectionalObjective<const N: usize> {
    type Error;

    fn value(&self, x: &Vector<N>) -> Result<f64, Self::Error>;

    /// Symmetric matrix proportional to the Hessian at `x`.
    fn hessian_proxy(&self, x: &Vector<N>) -> Result<Matrix<N>, Self::Error>;

    /// The objective on `x + t * dir` as a ratio of quadratics in `t`; equal to
    /// `value(x)` at `t = 0` up to a positive factor.
    fn line_ratio(&self, x: &Vector<N>, dir: &Vector<N>) -> Result<QuadRatio, Self::Error>;

    /// Veto for steps that leave a region where the parametrization is
    /// meaningful.
    fn admissible_step(&self, _from: &Vector<N>, _to: &Vector<N>) -> bool {
        true
    }
}

/// Eigenvalues in ascending order; `vectors[k]` belongs to `values[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPairs<const N: usize> {
    pub values: Vector<N>,
    pub vectors: [Vector<N>; N],
}

fn frobenius<const N: usize>(m: &Matrix<N>) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal<const N: usize>(m: &Matrix<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s += m[i][j] * m[i][j];
            }
        }
    }
    s.sqrt()
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
pub fn eigen_sym<const N: usize>(m: &Matrix<N>) -> Result<EigenPairs<N>, EigenError> {
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let mut a = *m;
    // symmetrize from the upper triangle
    for i in 0..N {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let threshold = JACOBI_TOL * frobenius(&a);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal(&a) <= threshold {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    Ok(EigenPairs {
        values: order.map(|k| a[k][k]),
        vectors: order.map(|k| std::array::from_fn(|i| v[i][k])),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Upper bound on the number of eigen-direction sweeps.
    pub sweeps: usize,
    /// Stop once a sweep moves by at most `tol * (1 + |x|)`.
    pub tol: f64,
}

impl SearchOptions {
    /// One sweep, as used for approximate fitting.
    pub const APPROXIMATE: SearchOptions = SearchOptions {
        sweeps: 1,
        tol: 0.0,
    };
    /// Iterate to the floating point floor.
    pub const CONVERGED: SearchOptions = SearchOptions {
        sweeps: 20,
        tol: 1e-14,
    };
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self::APPROXIMATE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<const N: usize> {
    pub x: Vector<N>,
    pub value: f64,
    /// Sweeps actually performed.
    pub sweeps: usize,
    /// Whether the step-size stop rule fired.
    pub converged: bool,
    /// Start point followed by the point reached after each sweep.
    pub trace: Vec<Vector<N>>,
}

fn norm<const N: usize>(x: &Vector<N>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Exact line minimization along each direction in order. A direction is
/// skipped when its line has no minimum, the minimum does not improve on the
/// current point, or the objective vetoes the step.
pub fn search_directions<O, const N: usize>(
    obj: &O,
    mut x: Vector<N>,
    dirs: &[Vector<N>],
) -> Result<Vector<N>, O::Error>
where
    O: DirectionalObjective<N>,
{
    for dir in dirs {
        let q = obj.line_ratio(&x, dir)?;
        let Ok(RatioMin::Minimum { x: t, value }) = minimize_ratio(&q) else {
            continue;
        };
        if t == 0.0 || !(value < q.eval(0.0)) {
            continue;
        }
        let next: Vector<N> = std::array::from_fn(|i| x[i] + t * dir[i]);
        if obj.admissible_step(&x, &next) {
            x = next;
        }
    }
    Ok(x)
}

/// Eigen-direction search from `x0`.
pub fn minimize<O, const N: usize>(
    obj: &O,
    x0: Vector<N>,
    opts: SearchOptions,
) -> Result<SearchOutcome<N>, O::Error>
where
    O: DirectionalObjective<N>,
{
    let mut x = x0;
    let mut trace = vec![x0];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.sweeps.max(1) {
        let h = obj.hessian_proxy(&x)?;
        let Ok(eig) = eigen_sym(&h) else {
            break;
        };
        let next = search_directions(obj, x, &eig.vectors)?;
        sweeps += 1;
        let step: Vector<N> = std::array::from_fn(|i| next[i] - x[i]);
        x = next;
        trace.push(x);
        if norm(&step) <= opts.tol * (1.0 + norm(&x)) {
            converged = true;
            break;
        }
    }
    Ok(SearchOutcome {
        x,
        value: obj.value(&x)?,
        sweeps,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::convert::Infallible;

    fn matmul<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> Matrix<N> {
        std::array::from_fn(|i| std::array::from_fn(|j| (0..N).map(|k| a[i][k] * b[k][j]).sum()))
    }

    fn transpose<const N: usize>(a: &Matrix<N>) -> Matrix<N> {
        std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
    }

    fn random_sym(rng: &mut impl Rng) -> Matrix<3> {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = rng.gen_range(-5.0..5.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    fn random_spd(rng: &mut impl Rng) -> Matrix<3> {
        let l = random_sym(rng);
        let mut q = matmul(&transpose(&l), &l);
        for (i, row) in q.iter_mut().enumerate() {
            row[i] += 0.1;
        }
        q
    }

    fn quad_form<const N: usize>(q: &Matrix<N>, a: &Vector<N>, b: &Vector<N>) -> f64 {
        (0..N).map(|i| (0..N).map(|j| a[i] * q[i][j] * b[j]).sum::<f64>()).sum()
    }

    /// (x - c)^T Q (x - c) + k
    struct Quadratic<const N: usize> {
        q: Matrix<N>,
        c: Vector<N>,
        k: f64,
    }

    impl<const N: usize> DirectionalObjective<N> for Quadratic<N> {
        type Error = Infallible;

        fn value(&self, x: &Vector<N>) -> Result<f64, Infallible> {
            let d: Vector<N> = std::array::from_fn(|i| x[i] - self.c[i]);
            Ok(quad_form(&self.q, &d, &d) + self.k)
        }

        fn hessian_proxy(&self, _x: &Vector<N>) -> Result<Matrix<N>, Infallible> {
            Ok(self.q.map(|row| row.map(|v| 3.0 * v)))
        }

        fn line_ratio(&self, x: &Vector<N>, dir: &Vector<N>) -> Result<QuadRatio, Infallible> {
            let d: Vector<N> = std::array::from_fn(|i| x[i] - self.c[i]);
            Ok(QuadRatio::new(
                [
                    quad_form(&self.q, &d, &d) + self.k,
                    2.0 * quad_form(&self.q, dir, &d),
                    quad_form(&self.q, dir, dir),
                ],
                [1.0, 0.0, 0.0],
            ))
        }
    }

    /// ((x - c)^T Q (x - c) + k) / (1 + |x|^2); Hessian by central differences.
    struct Rational {
        inner: Quadratic<3>,
    }

    impl DirectionalObjective<3> for Rational {
        type Error = Infallible;

        fn value(&self, x: &Vector<3>) -> Result<f64, Infallible> {
            Ok(self.inner.value(x)? / (1.0 + norm(x).powi(2)))
        }

        fn hessian_proxy(&self, x: &Vector<3>) -> Result<Matrix<3>, Infallible> {
            let h = 1e-4;
            let f = |p: Vector<3>| self.value(&p).unwrap();
            Ok(std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut pp = *x;
                    let mut pm = *x;
                    let mut mp = *x;
                    let mut mm = *x;
                    pp[i] += h;
                    pp[j] += h;
                    pm[i] += h;
                    pm[j] -= h;
                    mp[i] -= h;
                    mp[j] += h;
                    mm[i] -= h;
                    mm[j] -= h;
                    (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h)
                })
            }))
        }

        fn line_ratio(&self, x: &Vector<3>, dir: &Vector<3>) -> Result<QuadRatio, Infallible> {
            let num = self.inner.line_ratio(x, dir)?.a;
            let xd: f64 = (0..3).map(|i| x[i] * dir[i]).sum();
            Ok(QuadRatio::new(
                num,
                [1.0 + norm(x).powi(2), 2.0 * xd, norm(dir).powi(2)],
            ))
        }
    }

    #[test]
    fn diagonal_matrix() {
        let e = eigen_sym(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]).unwrap();
        assert_eq!(e.values, [1.0, 2.0, 3.0]);
        for (k, v) in e.vectors.iter().enumerate() {
            assert_eq!(v[k].abs(), 1.0);
        }
    }

    #[test]
    fn identity_gives_orthonormal_basis() {
        let e = eigen_sym(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(e.values, [1.0, 1.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| e.vectors[i][k] * e.vectors[j][k]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        m[1][2] = f64::NAN;
        assert_eq!(eigen_sym(&m), Err(EigenError::NonFinite));
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let m = random_sym(&mut rng);
            let e = eigen_sym(&m).unwrap();
            let scale = frobenius(&m);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            for k in 0..3 {
                let v = e.vectors[k];
                for i in 0..3 {
                    let mv: f64 = (0..3).map(|j| m[i][j] * v[j]).sum();
                    assert!((mv - e.values[k] * v[i]).abs() <= 1e-10 * scale);
                }
            }
            let rebuilt: Matrix<3> = std::array::from_fn(|i| {
                std::array::from_fn(|j| (0..3).map(|k| e.vectors[k][i] * e.values[k] * e.vectors[k][j]).sum())
            });
            for i in 0..3 {
                for j in 0..3 {
                    assert!((rebuilt[i][j] - m[i][j]).abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn bowl_in_one_sweep() {
        let obj = Quadratic {
            q: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            c: [3.0, 4.0, 5.0],
            k: 0.0,
        };
        let out = minimize(&obj, [0.0; 3], SearchOptions::APPROXIMATE).unwrap();
        assert_eq!(out.x, [3.0, 4.0, 5.0]);
        assert_eq!(out.sweeps, 1);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn fixed_point_is_returned_unchanged() {
        let obj = Quadratic {
            q: [[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 4.0]],
            c: [1.0, -1.0, 2.0],
            k: 1.0,
        };
        let out = minimize(&obj, [1.0, -1.0, 2.0], SearchOptions::CONVERGED).unwrap();
        assert_eq!(out.x, [1.0, -1.0, 2.0]);
        assert!(out.converged);
        assert_eq!(out.sweeps, 1);
    }

    #[test]
    fn random_spd_quadratics_in_one_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let q = random_spd(&mut rng);
            let c: Vector<3> = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
            let x0: Vector<3> = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
            let obj = Quadratic { q, c, k: 0.0 };
            let out = minimize(&obj, x0, SearchOptions::APPROXIMATE).unwrap();
            for i in 0..3 {
                assert!(
                    (out.x[i] - c[i]).abs() <= 1e-10 * (1.0 + c[i].abs()),
                    "{:?} vs {c:?}",
                    out.x
                );
            }
        }
    }

    #[test]
    fn centred_spd_quadratic_reaches_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let obj = Quadratic {
                q: random_spd(&mut rng),
                c: [0.0; 3],
                k: 0.0,
            };
            let x0: Vector<3> = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let out = minimize(&obj, x0, SearchOptions::APPROXIMATE).unwrap();
            assert!(norm(&out.x) <= 1e-12, "{:?}", out.x);
        }
    }

    #[test]
    fn direction_sign_and_order_do_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let obj = Quadratic {
                q: random_spd(&mut rng),
                c: std::array::from_fn(|_| rng.gen_range(-3.0..3.0)),
                k: 0.5,
            };
            let x0: Vector<3> = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let e = eigen_sym(&obj.q).unwrap();
            let reference = search_directions(&obj, x0, &e.vectors).unwrap();
            let flipped = e.vectors.map(|v| v.map(|c| -c));
            let reordered = [e.vectors[2], e.vectors[0], flipped[1]];
            for dirs in [flipped, reordered] {
                let x = search_directions(&obj, x0, &dirs).unwrap();
                for i in 0..3 {
                    assert!((x[i] - reference[i]).abs() <= 1e-10 * (1.0 + reference[i].abs()));
                }
            }
        }
    }

    #[test]
    fn descent_is_monotone_on_rational_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let obj = Rational {
                inner: Quadratic {
                    q: random_spd(&mut rng),
                    c: std::array::from_fn(|_| rng.gen_range(-2.0..2.0)),
                    k: rng.gen_range(0.0..1.0),
                },
            };
            let x0: Vector<3> = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let out = minimize(&obj, x0, SearchOptions::CONVERGED).unwrap();
            let values: Vec<f64> = out.trace.iter().map(|x| obj.value(x).unwrap()).collect();
            for w in values.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{values:?}");
            }
        }
    }
}
