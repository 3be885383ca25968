//! Seeded noisy-arc trials comparing the algebraic, one-sweep and geometric
//! estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcfit::{ArcFitter, Circle, FitError};
use crate::geom::Point;
use crate::moments::MomentAccumulator;
use crate::refcheck::{geometric_fit, RefError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("arc span must be in (0, 360] degrees, got {0}")]
    Span(f64),
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error("at least 3 points are needed, got {0}")]
    Points(usize),
    #[error("noise must be non-negative, got {0}")]
    Noise(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Reference(#[from] RefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    /// Degrees.
    pub span: f64,
    pub radius: f64,
    pub points: usize,
    /// Noise disc radius as a fraction of `radius`.
    pub noise: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            span: 72.0,
            radius: 1.0,
            points: 1000,
            noise: 0.1,
            trials: 200,
            seed: 1,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.span > 0.0 && self.span <= 360.0) {
            return Err(ScenarioError::Span(self.span));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(ScenarioError::Radius(self.radius));
        }
        if self.points < 3 {
            return Err(ScenarioError::Points(self.points));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(ScenarioError::Noise(self.noise));
        }
        Ok(())
    }

    /// The generating circle (centred at the origin) and the samples of
    /// trial `trial`. Each trial has its own RNG stream.
    pub fn sample(&self, trial: usize) -> (Circle, Vec<Point>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        let truth = Circle::new(0.0, 0.0, self.radius);
        let span = self.span.to_radians();
        let start = rng.gen_range(0.0..std::f64::consts::TAU);
        let amp = self.noise * self.radius;
        let last = (self.points - 1) as f64;
        let pts = (0..self.points)
            .map(|k| {
                let a = start + span * k as f64 / last;
                let rho = amp * rng.gen::<f64>().sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                Point::new(
                    self.radius * a.cos() + rho * phi.cos(),
                    self.radius * a.sin() + rho * phi.sin(),
                )
            })
            .collect();
        (truth, pts)
    }
}

/// One trial: fitted circles and their errors against the generator.
/// Radius errors are signed (`fitted - true`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub kasa_cx: f64,
    pub kasa_cy: f64,
    pub kasa_r: f64,
    pub free_cx: f64,
    pub free_cy: f64,
    pub free_r: f64,
    pub geom_cx: f64,
    pub geom_cy: f64,
    pub geom_r: f64,
    pub kasa_center_err: f64,
    pub kasa_radius_err: f64,
    pub free_center_err: f64,
    pub free_radius_err: f64,
    pub geom_center_err: f64,
    pub geom_radius_err: f64,
}

impl TrialResult {
    pub fn circles(&self) -> [Circle; 3] {
        [
            Circle::new(self.kasa_cx, self.kasa_cy, self.kasa_r),
            Circle::new(self.free_cx, self.free_cy, self.free_r),
            Circle::new(self.geom_cx, self.geom_cy, self.geom_r),
        ]
    }

    /// The one-sweep radius is nearer the geometric radius than the
    /// algebraic one.
    pub fn free_closer_to_geom(&self) -> bool {
        (self.free_r - self.geom_r).abs() < (self.kasa_r - self.geom_r).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean_r: f64,
    pub mean_center_err: f64,
    pub mean_radius_err: f64,
    pub rms_radius_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub trials: usize,
    pub true_r: f64,
    pub kasa: MethodSummary,
    pub free: MethodSummary,
    pub geom: MethodSummary,
    /// Fraction of trials where the one-sweep radius is nearer the
    /// geometric one than the algebraic radius is.
    pub free_closer_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub scenario: SimScenario,
    pub summary: CompareSummary,
    pub trials: Vec<TrialResult>,
}

pub fn run_trial(s: &SimScenario, trial: usize) -> Result<TrialResult, ScenarioError> {
    let (truth, pts) = s.sample(trial);
    let acc = MomentAccumulator::from_points(pts.iter().copied()).map_err(FitError::from)?;
    let fit = ArcFitter::default().free_detailed(&acc)?;
    let kasa = fit.start;
    let free = fit.circle;
    let geom = geometric_fit(&pts, &free)?;
    let err = |c: &Circle| (c.center().distance(truth.center()), c.r - truth.r);
    let (kc, kr) = err(&kasa);
    let (fc, fr) = err(&free);
    let (gc, gr) = err(&geom);
    Ok(TrialResult {
        trial,
        kasa_cx: kasa.cx,
        kasa_cy: kasa.cy,
        kasa_r: kasa.r,
        free_cx: free.cx,
        free_cy: free.cy,
        free_r: free.r,
        geom_cx: geom.cx,
        geom_cy: geom.cy,
        geom_r: geom.r,
        kasa_center_err: kc,
        kasa_radius_err: kr,
        free_center_err: fc,
        free_radius_err: fr,
        geom_center_err: gc,
        geom_radius_err: gr,
    })
}

fn summarize(rows: &[TrialResult], pick: impl Fn(&TrialResult) -> (f64, f64, f64)) -> MethodSummary {
    let n = rows.len().max(1) as f64;
    let mut out = MethodSummary {
        mean_r: 0.0,
        mean_center_err: 0.0,
        mean_radius_err: 0.0,
        rms_radius_err: 0.0,
    };
    for row in rows {
        let (r, ce, re) = pick(row);
        out.mean_r += r / n;
        out.mean_center_err += ce / n;
        out.mean_radius_err += re / n;
        out.rms_radius_err += re * re / n;
    }
    out.rms_radius_err = out.rms_radius_err.sqrt();
    out
}

pub fn run_compare(s: &SimScenario) -> Result<CompareReport, ScenarioError> {
    s.validate()?;
    let trials = (0..s.trials)
        .map(|t| run_trial(s, t))
        .collect::<Result<Vec<_>, _>>()?;
    let closer = trials.iter().filter(|t| t.free_closer_to_geom()).count();
    let summary = CompareSummary {
        trials: trials.len(),
        true_r: s.radius,
        kasa: summarize(&trials, |t| (t.kasa_r, t.kasa_center_err, t.kasa_radius_err)),
        free: summarize(&trials, |t| (t.free_r, t.free_center_err, t.free_radius_err)),
        geom: summarize(&trials, |t| (t.geom_r, t.geom_center_err, t.geom_radius_err)),
        free_closer_fraction: closer as f64 / trials.len().max(1) as f64,
    };
    Ok(CompareReport {
        scenario: *s,
        summary,
        trials,
    })
}
