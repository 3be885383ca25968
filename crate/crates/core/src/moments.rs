//! Mergeable bivariate power sums up to total order four.
//!
//! Every fitter in this crate runs in O(1) from the fifteen raw moments
//! `M_{g,h} = (1/W) * sum w_i * x_i^g * y_i^h`, `g + h <= 4`. The accumulator
//! stores the unnormalized sums so that accumulators can be merged and
//! differenced (prefix sums over a polyline), and normalizes on demand.
//!
//! Sums are carried in double-double precision. Re-centring fourth order sums
//! of data that sits far from the origin is otherwise hopeless in `f64`.

use thiserror::Error;

use crate::dd::Dd;
use crate::geom::Point;

/// Highest total order `g + h` that is tracked.
pub const MAX_ORDER: usize = 4;
/// Number of tracked `(g, h)` pairs with `g + h <= MAX_ORDER`.
pub const NUM_MOMENTS: usize = 15;

const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// Storage slot of `(g, h)`: grouped by total degree, then by `h`.
#[inline]
pub const fn index(g: usize, h: usize) -> usize {
    let d = g + h;
    d * (d + 1) / 2 + h
}

/// All `(g, h)` pairs in storage order.
pub fn orders() -> impl Iterator<Item = (usize, usize)> {
    (0..=MAX_ORDER).flat_map(|d| (0..=d).map(move |h| (d - h, h)))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("non-finite coordinate or weight")]
    NonFinite,
    #[error("weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("zero-length segment")]
    ZeroLengthSegment,
    #[error("accumulator is empty")]
    Empty,
}

/// Unnormalized weighted power sums `S_{g,h}`; `S_{0,0}` is the total weight.
///
/// Internally the sums are taken about a reference origin (the first point
/// added), so coordinates far from zero keep their low-order digits. Merging
/// and differencing re-expand the other operand about this origin first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAccumulator {
    origin: Point,
    sums: [Dd; NUM_MOMENTS],
}

impl Default for MomentAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

fn dd_powers(v: Dd) -> [Dd; MAX_ORDER + 1] {
    let v2 = v * v;
    [Dd::ONE, v, v2, v2 * v, v2 * v2]
}

/// Sums of `(q + s)^g (q + s)^h` from sums of `q^g q^h`.
fn shift_sums(sums: &[Dd; NUM_MOMENTS], sx: Dd, sy: Dd) -> [Dd; NUM_MOMENTS] {
    if sx.hi == 0.0 && sy.hi == 0.0 {
        return *sums;
    }
    let px = dd_powers(sx);
    let py = dd_powers(sy);
    let mut out = [Dd::ZERO; NUM_MOMENTS];
    for (g, h) in orders() {
        let mut total = Dd::ZERO;
        for a in 0..=g {
            for b in 0..=h {
                let coeff = BINOM[g][a] * BINOM[h][b];
                let shift = px[g - a] * py[h - b];
                total = total + (shift * sums[index(a, b)]).mul_f64(coeff);
            }
        }
        out[index(g, h)] = total;
    }
    out
}

impl MomentAccumulator {
    pub fn new() -> Self {
        MomentAccumulator {
            origin: Point::ORIGIN,
            sums: [Dd::ZERO; NUM_MOMENTS],
        }
    }

    /// Unit-weight accumulator over `points`.
    pub fn from_points<I>(points: I) -> Result<Self, MomentError>
    where
        I: IntoIterator<Item = Point>,
    {
        let mut acc = Self::new();
        for p in points {
            acc.add_point(p, 1.0)?;
        }
        Ok(acc)
    }

    /// Total weight `W` (the point count when all weights are one).
    pub fn weight(&self) -> f64 {
        self.sums[0].to_f64()
    }

    pub fn is_empty(&self) -> bool {
        self.sums[0].hi == 0.0
    }

    /// The sums about the coordinate origin.
    fn absolute(&self) -> [Dd; NUM_MOMENTS] {
        shift_sums(
            &self.sums,
            Dd::from_f64(self.origin.x),
            Dd::from_f64(self.origin.y),
        )
    }

    /// The sums about `o`.
    fn about(&self, o: Point) -> [Dd; NUM_MOMENTS] {
        shift_sums(
            &self.sums,
            Dd::sub_exact(self.origin.x, o.x),
            Dd::sub_exact(self.origin.y, o.y),
        )
    }

    /// `S_{g,h}` rounded to `f64`.
    ///
    /// Panics if `g + h > MAX_ORDER`.
    pub fn sum(&self, g: usize, h: usize) -> f64 {
        assert!(g + h <= MAX_ORDER, "moment order {g}+{h} out of range");
        if g + h == 0 {
            return self.weight();
        }
        self.absolute()[index(g, h)].to_f64()
    }

    pub fn centroid(&self) -> Option<Point> {
        if self.is_empty() {
            return None;
        }
        let w = self.weight();
        let cx = Dd::from_f64(self.origin.x) + self.sums[index(1, 0)].div_f64(w);
        let cy = Dd::from_f64(self.origin.y) + self.sums[index(0, 1)].div_f64(w);
        Some(Point::new(cx.to_f64(), cy.to_f64()))
    }

    fn start_at(&mut self, p: Point) {
        if self.is_empty() {
            *self = Self::new();
            self.origin = p;
        }
    }

    /// Adds `w * x^g * y^h` to every sum.
    pub fn add_point(&mut self, p: Point, w: f64) -> Result<(), MomentError> {
        if !p.is_finite() || !w.is_finite() {
            return Err(MomentError::NonFinite);
        }
        if w <= 0.0 {
            return Err(MomentError::NonPositiveWeight(w));
        }
        self.start_at(p);
        let xp = dd_powers(Dd::sub_exact(p.x, self.origin.x));
        let yp = dd_powers(Dd::sub_exact(p.y, self.origin.y));
        for (g, h) in orders() {
            let mut term = xp[g] * yp[h];
            if w != 1.0 {
                term = term.mul_f64(w);
            }
            let slot = &mut self.sums[index(g, h)];
            *slot = *slot + term;
        }
        Ok(())
    }

    /// Builder form of [`add_point`](Self::add_point).
    pub fn with_point(mut self, p: Point, w: f64) -> Result<Self, MomentError> {
        self.add_point(p, w)?;
        Ok(self)
    }

    /// Adds the arc-length line integral `∫ x^g y^h ds` over the segment
    /// `p0 -> p1`; the weight grows by the segment length.
    pub fn add_segment(&mut self, p0: Point, p1: Point) -> Result<(), MomentError> {
        if !p0.is_finite() || !p1.is_finite() {
            return Err(MomentError::NonFinite);
        }
        let len = (p1 - p0).norm();
        if len == 0.0 {
            return Err(MomentError::ZeroLengthSegment);
        }
        self.start_at(p0);
        // x(t) = x0 + t dx on t in [0, 1]; expand both binomials and
        // integrate t^(a+b) exactly.
        let x0 = dd_powers(Dd::sub_exact(p0.x, self.origin.x));
        let y0 = dd_powers(Dd::sub_exact(p0.y, self.origin.y));
        let dx = dd_powers(Dd::sub_exact(p1.x, p0.x));
        let dy = dd_powers(Dd::sub_exact(p1.y, p0.y));
        for (g, h) in orders() {
            let mut total = Dd::ZERO;
            for a in 0..=g {
                for b in 0..=h {
                    let coeff = BINOM[g][a] * BINOM[h][b];
                    let term = (x0[g - a] * dx[a]) * (y0[h - b] * dy[b]);
                    total = total + term.mul_f64(coeff).div_f64((a + b + 1) as f64);
                }
            }
            let slot = &mut self.sums[index(g, h)];
            *slot = *slot + total.mul_f64(len);
        }
        Ok(())
    }

    /// Componentwise sum; the empty accumulator is the identity.
    pub fn merge(&self, other: &Self) -> Self {
        if other.is_empty() {
            return *self;
        }
        if self.is_empty() {
            return *other;
        }
        let theirs = other.about(self.origin);
        let mut out = *self;
        for (s, o) in out.sums.iter_mut().zip(theirs.iter()) {
            *s = *s + *o;
        }
        out
    }

    /// Componentwise difference, used for prefix-sum range queries.
    pub fn difference(&self, other: &Self) -> Self {
        if other.is_empty() {
            return *self;
        }
        let theirs = if self.is_empty() {
            other.sums
        } else {
            other.about(self.origin)
        };
        let mut out = *self;
        if self.is_empty() {
            out.origin = other.origin;
        }
        for (s, o) in out.sums.iter_mut().zip(theirs.iter()) {
            *s = *s - *o;
        }
        out
    }

    /// The accumulator that would have been built from `(x + dx, y + dy)`
    /// with the same weights.
    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        if dx == 0.0 && dy == 0.0 {
            return *self;
        }
        // New origin is the rounded shifted origin; the rounding error is
        // folded back into the sums exactly.
        let sx = Dd::add_exact(self.origin.x, dx);
        let sy = Dd::add_exact(self.origin.y, dy);
        MomentAccumulator {
            origin: Point::new(sx.hi, sy.hi),
            sums: shift_sums(&self.sums, Dd::from_f64(sx.lo), Dd::from_f64(sy.lo)),
        }
    }

    /// Moments centred on the centroid together with the centroid itself.
    pub fn centered(&self) -> Result<(Self, Point), MomentError> {
        let c = self.centroid().ok_or(MomentError::Empty)?;
        Ok((self.translate(-c.x, -c.y), c))
    }

    pub fn normalized(&self) -> Result<NormalizedMoments, MomentError> {
        let w = self.weight();
        if !(w > 0.0) {
            return Err(MomentError::Empty);
        }
        let sums = self.absolute();
        let mut m = [0.0; NUM_MOMENTS];
        for (slot, s) in m.iter_mut().zip(sums.iter()) {
            if !s.is_finite() {
                return Err(MomentError::NonFinite);
            }
            *slot = s.div_f64(w).to_f64();
        }
        m[0] = 1.0;
        Ok(NormalizedMoments { m, weight: w })
    }
}

impl std::ops::Add for MomentAccumulator {
    type Output = MomentAccumulator;
    fn add(self, rhs: Self) -> Self {
        self.merge(&rhs)
    }
}

impl std::ops::Sub for MomentAccumulator {
    type Output = MomentAccumulator;
    fn sub(self, rhs: Self) -> Self {
        self.difference(&rhs)
    }
}

/// Raw moments `M_{g,h} = S_{g,h} / W`, with the weight kept alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedMoments {
    m: [f64; NUM_MOMENTS],
    weight: f64,
}

impl NormalizedMoments {
    /// Builds directly from `f64` moments; `m[index(0, 0)]` is forced to 1.
    pub fn from_raw(mut m: [f64; NUM_MOMENTS], weight: f64) -> Self {
        m[0] = 1.0;
        NormalizedMoments { m, weight }
    }

    #[inline]
    pub fn m(&self, g: usize, h: usize) -> f64 {
        self.m[index(g, h)]
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> Point {
        Point::new(self.m(1, 0), self.m(0, 1))
    }

    /// Binomial re-expansion in plain `f64`. Prefer
    /// [`MomentAccumulator::translate`] when the shift is large compared to
    /// the spread of the data.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let px = [1.0, dx, dx * dx, dx * dx * dx, dx * dx * dx * dx];
        let py = [1.0, dy, dy * dy, dy * dy * dy, dy * dy * dy * dy];
        let mut out = [0.0; NUM_MOMENTS];
        for (g, h) in orders() {
            let mut total = 0.0;
            for a in 0..=g {
                for b in 0..=h {
                    total += BINOM[g][a] * BINOM[h][b] * px[g - a] * py[h - b] * self.m(a, b);
                }
            }
            out[index(g, h)] = total;
        }
        Self::from_raw(out, self.weight)
    }
}
