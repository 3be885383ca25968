//! Moment-based circular-arc fitting and arc-aware polyline compression.

mod dd;

pub mod arcfit;
pub mod compress;
pub mod dirsearch;
pub mod geom;
pub mod io;
pub mod moments;
pub mod quadratio;
pub mod refcheck;
pub mod scenario;

pub use arcfit::{ArcFitter, Circle, FitError};
pub use geom::Point;
pub use moments::{MomentAccumulator, NormalizedMoments};
