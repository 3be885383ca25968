//! Polyline compression into segments and circular arcs with fixed vertices.
//!
//! A chain of primitives from the first to the last vertex is chosen by
//! dynamic programming, minimizing the weighted primitive count and then the
//! sum of squared deviations. Arc candidates are fitted through their two
//! end vertices from range moments, so the fit costs the same for any window
//! length; only the tolerance check walks the window.

use std::cell::Cell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcfit::{ArcFitter, Circle};
use crate::geom::Point;
use crate::moments::{MomentAccumulator, MomentError};
use crate::refcheck::{check_tolerance_zigzag, exact_sse, Arc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressError {
    #[error("a polyline needs at least 2 vertices, got {0}")]
    TooShort(usize),
    #[error(transparent)]
    Moments(#[from] MomentError),
    #[error("tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
}

/// Cumulative moments: entry `k` holds the first `k` vertices.
#[derive(Debug, Clone)]
pub struct PrefixMoments {
    prefix: Vec<MomentAccumulator>,
}

impl PrefixMoments {
    pub fn build(polyline: &[Point]) -> Result<Self, CompressError> {
        if polyline.len() < 2 {
            return Err(CompressError::TooShort(polyline.len()));
        }
        let mut prefix = Vec::with_capacity(polyline.len() + 1);
        let mut acc = MomentAccumulator::new();
        prefix.push(acc);
        for p in polyline {
            acc.add_point(*p, 1.0)?;
            prefix.push(acc);
        }
        Ok(PrefixMoments { prefix })
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn get(&self, k: usize) -> &MomentAccumulator {
        &self.prefix[k]
    }

    /// Moments of vertices `a..b`.
    pub fn range(&self, a: usize, b: usize) -> MomentAccumulator {
        self.prefix[b] - self.prefix[a]
    }
}

/// Work counters for candidate evaluation.
#[derive(Debug, Default)]
pub struct AccessCounter {
    /// Range-moment queries made while fitting.
    pub moment_queries: Cell<usize>,
    /// Vertices read while fitting.
    pub fit_vertex_reads: Cell<usize>,
    /// Vertices read while validating.
    pub validation_vertex_reads: Cell<usize>,
}

impl AccessCounter {
    fn bump(c: &Cell<usize>, by: usize) {
        c.set(c.get() + by);
    }

    pub fn reset(&self) {
        self.moment_queries.set(0);
        self.fit_vertex_reads.set(0);
        self.validation_vertex_reads.set(0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressOptions {
    pub tol: f64,
    pub segment_penalty: f64,
    pub arc_penalty: f64,
    pub mode: SearchMode,
}

impl CompressOptions {
    pub fn new(tol: f64) -> Self {
        CompressOptions {
            tol,
            segment_penalty: 2.0,
            arc_penalty: 3.0,
            mode: SearchMode::Seeded,
        }
    }

    pub fn exhaustive(mut self) -> Self {
        self.mode = SearchMode::Exhaustive;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Every vertex pair is a candidate.
    Exhaustive,
    /// From each start vertex, probe windows of length 1, 3, 6, 12, ... and
    /// only consider end vertices up to twice the last accepted probe. Can miss
    /// solutions when acceptance is not monotone in the window length.
    Seeded,
}

/// An accepted arc candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCandidate {
    pub arc: Arc,
    /// Moment-based squared deviation of the interior vertices.
    pub ssd: f64,
}

/// Distance from `p` to the segment `a`-`b`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d.scale(t))
}

/// Sum of squared distances of the interior of `i..=j` to the segment, or
/// `None` if some interior vertex is farther than `tol`.
pub fn candidate_segment(polyline: &[Point], i: usize, j: usize, tol: f64) -> Option<f64> {
    debug_assert!(i < j);
    let (a, b) = (polyline[i], polyline[j]);
    let mut ssd = 0.0;
    for p in &polyline[i + 1..j] {
        let d = segment_distance(*p, a, b);
        if !(d <= tol) {
            return None;
        }
        ssd += d * d;
    }
    Some(ssd)
}

/// Arc through vertices `i` and `j` fitted to the interior moments, if it
/// passes the tolerance and ordering checks. Needs `j >= i + 3`.
pub fn candidate_arc(
    polyline: &[Point],
    prefix: &PrefixMoments,
    i: usize,
    j: usize,
    tol: f64,
    fitter: &ArcFitter,
    counter: &AccessCounter,
) -> Option<ArcCandidate> {
    if j < i + 3 {
        return None;
    }
    AccessCounter::bump(&counter.moment_queries, 1);
    let interior = prefix.range(i + 1, j);
    AccessCounter::bump(&counter.fit_vertex_reads, 2);
    let (a, b) = (polyline[i], polyline[j]);
    let circle = fitter.two_point(&interior, a, b).ok()?;
    let ssd = fitter.penalty(&interior, &circle).ok()?;

    let window = &polyline[i..=j];
    AccessCounter::bump(&counter.validation_vertex_reads, window.len());
    let arc = Arc::through(circle, a, b, &window[1..window.len() - 1]);
    check_tolerance_zigzag(window, &arc, tol)
        .passed
        .then_some(ArcCandidate { arc, ssd })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    Segment {
        start: usize,
        end: usize,
    },
    Arc {
        start: usize,
        end: usize,
        center: Point,
        radius: f64,
        ccw: bool,
    },
}

impl Primitive {
    pub fn start(&self) -> usize {
        match *self {
            Primitive::Segment { start, .. } | Primitive::Arc { start, .. } => start,
        }
    }

    pub fn end(&self) -> usize {
        match *self {
            Primitive::Segment { end, .. } | Primitive::Arc { end, .. } => end,
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Primitive::Arc { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedPath {
    pub primitives: Vec<Primitive>,
    /// Weighted primitive count.
    pub total_penalty: f64,
    /// Squared deviation used for tie-breaking (moment-based for arcs).
    pub total_ssd: f64,
    /// Point-by-point squared deviation of every vertex.
    pub exact_sse: f64,
    pub segments: usize,
    pub arcs: usize,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    penalty: f64,
    ssd: f64,
    from: usize,
    prim: Option<Primitive>,
}

fn better(penalty: f64, ssd: f64, than: &Best) -> bool {
    penalty < than.penalty || (penalty == than.penalty && ssd < than.ssd)
}

/// Candidate end vertices for each start vertex.
fn end_ranges(polyline: &[Point], prefix: &PrefixMoments, opts: &CompressOptions) -> Vec<usize> {
    let n = polyline.len();
    match opts.mode {
        SearchMode::Exhaustive => vec![n - 1; n],
        SearchMode::Seeded => {
            let fitter = ArcFitter::default();
            let counter = AccessCounter::default();
            (0..n)
                .map(|i| {
                    let mut last_ok = 1;
                    let mut len = 1;
                    while i + len < n {
                        let j = i + len;
                        let ok = candidate_segment(polyline, i, j, opts.tol).is_some()
                            || candidate_arc(polyline, prefix, i, j, opts.tol, &fitter, &counter)
                                .is_some();
                        if !ok {
                            break;
                        }
                        last_ok = len;
                        // Skip length 2: too short for an arc.
                        len = if len == 1 { 3 } else { 2 * len };
                    }
                    (i + 2 * last_ok).min(n - 1)
                })
                .collect()
        }
    }
}

pub fn compress(polyline: &[Point], opts: &CompressOptions) -> Result<CompressedPath, CompressError> {
    compress_with(polyline, opts, &ArcFitter::default(), &AccessCounter::default())
}

pub fn compress_with(
    polyline: &[Point],
    opts: &CompressOptions,
    fitter: &ArcFitter,
    counter: &AccessCounter,
) -> Result<CompressedPath, CompressError> {
    if !(opts.tol >= 0.0 && opts.tol.is_finite()) {
        return Err(CompressError::BadTolerance(opts.tol));
    }
    let prefix = PrefixMoments::build(polyline)?;
    let n = polyline.len();
    let reach = end_ranges(polyline, &prefix, opts);

    let unreached = Best {
        penalty: f64::INFINITY,
        ssd: f64::INFINITY,
        from: usize::MAX,
        prim: None,
    };
    let mut best = vec![unreached; n];
    best[0] = Best {
        penalty: 0.0,
        ssd: 0.0,
        from: 0,
        prim: None,
    };
    for i in 0..n - 1 {
        let base = best[i];
        if !base.penalty.is_finite() {
            continue;
        }
        for j in i + 1..=reach[i].max(i + 1) {
            if let Some(ssd) = candidate_segment(polyline, i, j, opts.tol) {
                let (p, s) = (base.penalty + opts.segment_penalty, base.ssd + ssd);
                if better(p, s, &best[j]) {
                    best[j] = Best {
                        penalty: p,
                        ssd: s,
                        from: i,
                        prim: Some(Primitive::Segment { start: i, end: j }),
                    };
                }
            }
            if let Some(c) = candidate_arc(polyline, &prefix, i, j, opts.tol, fitter, counter) {
                let (p, s) = (base.penalty + opts.arc_penalty, base.ssd + c.ssd);
                if better(p, s, &best[j]) {
                    best[j] = Best {
                        penalty: p,
                        ssd: s,
                        from: i,
                        prim: Some(Primitive::Arc {
                            start: i,
                            end: j,
                            center: c.arc.circle.center(),
                            radius: c.arc.circle.r,
                            ccw: c.arc.ccw,
                        }),
                    };
                }
            }
        }
    }

    let mut primitives = Vec::new();
    let mut k = n - 1;
    while k > 0 {
        let b = best[k];
        primitives.push(b.prim.expect("adjacent segments always connect"));
        k = b.from;
    }
    primitives.reverse();

    let exact = primitives
        .iter()
        .map(|prim| match *prim {
            Primitive::Segment { start, end } => polyline[start + 1..end]
                .iter()
                .map(|p| segment_distance(*p, polyline[start], polyline[end]).powi(2))
                .sum::<f64>(),
            Primitive::Arc {
                start,
                end,
                center,
                radius,
                ..
            } => exact_sse(
                &polyline[start + 1..end],
                &Circle::new(center.x, center.y, radius),
            ),
        })
        .sum();
    let arcs = primitives.iter().filter(|p| p.is_arc()).count();
    Ok(CompressedPath {
        total_penalty: best[n - 1].penalty,
        total_ssd: best[n - 1].ssd,
        exact_sse: exact,
        segments: primitives.len() - arcs,
        arcs,
        primitives,
    })
}
