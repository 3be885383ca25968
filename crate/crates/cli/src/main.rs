use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use arcfit_core::arcfit::{ArcFitter, Circle, FitError};
use arcfit_core::compress::{compress, CompressOptions, CompressedPath, SearchMode};
use arcfit_core::geom::Point;
use arcfit_core::io::{parse_points, ParseError};
use arcfit_core::moments::MomentAccumulator;
use arcfit_core::refcheck::exact_sse;
use arcfit_core::scenario::{run_compare, ScenarioError, SimScenario};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EXIT_PARSE: u8 = 2;
const EXIT_FIT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "arcfit", version, about = "Moment-based circular arc fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a circle to a point file, optionally through one or two points.
    Fit {
        input: PathBuf,
        /// Anchor point `x,y`; give it once or twice.
        #[arg(long = "through", value_parser = parse_xy)]
        through: Vec<Point>,
        /// Eigen-direction sweeps for the unconstrained fit.
        #[arg(long, default_value_t = 1)]
        sweeps: usize,
        /// Fit in input coordinates instead of re-centring on the centroid.
        #[arg(long)]
        no_center: bool,
    },
    /// Compress a polyline into segments and arcs.
    Compress {
        input: PathBuf,
        #[arg(long)]
        tol: f64,
        /// Consider every vertex pair instead of seeded windows.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 2.0)]
        segment_penalty: f64,
        #[arg(long, default_value_t = 3.0)]
        arc_penalty: f64,
    },
    /// Compare estimators on seeded noisy arcs.
    Compare {
        /// Arc span in degrees.
        #[arg(long, default_value_t = 72.0)]
        span: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Noise disc radius as a fraction of the radius.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl CliError {
    fn name(&self) -> &'static str {
        match self {
            CliError::Read { .. } => "ReadError",
            CliError::Parse { .. } => "ParseError",
            CliError::Usage(_) => "UsageError",
            CliError::Fit(e) => e.name(),
            CliError::Scenario(ScenarioError::Fit(e)) => e.name(),
            CliError::Scenario(ScenarioError::Reference(_)) => "NonConvergence",
            CliError::Scenario(_) => "UsageError",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Fit(_) | CliError::Scenario(ScenarioError::Fit(_) | ScenarioError::Reference(_)) => {
                EXIT_FIT
            }
            _ => EXIT_PARSE,
        }
    }
}

fn parse_xy(s: &str) -> Result<Point, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y but got {s:?}"))?;
    let x: f64 = x.trim().parse().map_err(|e| format!("{x:?}: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("{y:?}: {e}"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("non-finite point {s:?}"));
    }
    Ok(Point::new(x, y))
}

fn read_points(path: &PathBuf) -> Result<Vec<Point>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    parse_points(&text).map_err(|source| CliError::Parse {
        path: path.clone(),
        source,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct FitReport {
    mode: String,
    points: usize,
    center: Point,
    radius: f64,
    /// Surrogate objective per unit weight.
    objective: f64,
    /// Moment-based squared deviation estimate.
    penalty: f64,
    exact_sse: f64,
    anchors: Vec<Point>,
    /// `|distance(center, anchor) - radius|` per anchor.
    anchor_residuals: Vec<f64>,
}

fn cmd_fit(
    input: &PathBuf,
    through: &[Point],
    sweeps: usize,
    no_center: bool,
) -> Result<String, CliError> {
    let pts = read_points(input)?;
    if pts.is_empty() {
        return Err(CliError::Parse {
            path: input.clone(),
            source: ParseError {
                line: 0,
                message: "no points".into(),
            },
        });
    }
    let mut fitter = ArcFitter::default().with_sweeps(sweeps);
    if no_center {
        fitter = fitter.without_centering();
    }
    let acc = MomentAccumulator::from_points(pts.iter().copied()).map_err(FitError::from)?;
    let (mode, circle): (&str, Circle) = match through {
        [] => ("free", fitter.free(&acc)?),
        [a] => ("one_point", fitter.one_point(&acc, *a)?),
        [a, b] => ("two_point", fitter.two_point(&acc, *a, *b)?),
        _ => return Err(CliError::Usage("--through may be given at most twice".into())),
    };
    let report = FitReport {
        mode: mode.into(),
        points: pts.len(),
        center: circle.center(),
        radius: circle.r,
        objective: fitter.objective(&acc, &circle)?,
        penalty: fitter.penalty(&acc, &circle)?,
        exact_sse: exact_sse(&pts, &circle),
        anchors: through.to_vec(),
        anchor_residuals: through
            .iter()
            .map(|a| circle.radial_offset(*a).abs())
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

#[derive(Debug, Serialize, Deserialize)]
struct CompressReport {
    vertices: usize,
    tol: f64,
    mode: SearchMode,
    path: CompressedPath,
}

fn cmd_compress(input: &PathBuf, opts: CompressOptions) -> Result<String, CliError> {
    if !(opts.tol >= 0.0 && opts.tol.is_finite()) {
        return Err(CliError::Usage(format!("invalid tolerance {}", opts.tol)));
    }
    let pts = read_points(input)?;
    let path = compress(&pts, &opts).map_err(|e| CliError::Parse {
        path: input.clone(),
        source: ParseError {
            line: 0,
            message: e.to_string(),
        },
    })?;
    let report = CompressReport {
        vertices: pts.len(),
        tol: opts.tol,
        mode: opts.mode,
        path,
    };
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

fn cmd_compare(s: &SimScenario, format: Format) -> Result<String, CliError> {
    let report = run_compare(s)?;
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&report).expect("report serializes")),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &report.trials {
                w.serialize(row).expect("in-memory CSV write");
            }
            let bytes = w.into_inner().expect("in-memory CSV flush");
            Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Fit {
            input,
            through,
            sweeps,
            no_center,
        } => cmd_fit(&input, &through, sweeps, no_center),
        Command::Compress {
            input,
            tol,
            exhaustive,
            segment_penalty,
            arc_penalty,
        } => {
            let mut opts = CompressOptions::new(tol);
            opts.segment_penalty = segment_penalty;
            opts.arc_penalty = arc_penalty;
            if exhaustive {
                opts = opts.exhaustive();
            }
            cmd_compress(&input, opts)
        }
        Command::Compare {
            span,
            radius,
            points,
            noise,
            trials,
            seed,
            format,
        } => {
            let s = SimScenario {
                span,
                radius,
                points,
                noise,
                trials,
                seed,
            };
            cmd_compare(&s, format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            if !out.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = serde_json::json!({ "error": e.name(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
