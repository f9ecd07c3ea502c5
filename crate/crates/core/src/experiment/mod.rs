//! Config-driven experiment runs with CSV and JSON output.

pub mod config;
mod kinds;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, Params};
pub use kinds::kakutani_measures;

use crate::ensembles::{sample_full_field, MeasureSpec, RadialLaw, RandomFieldCoeffs};
use crate::error::{invalid, Error, Result};
use crate::parallel::MonteCarlo;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "metric,param1,param2,value,ci_lo,ci_hi";

/// One flat metric line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub metric: String,
    pub param1: String,
    pub param2: String,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl Row {
    pub fn new(metric: &str, param1: impl Display, param2: impl Display, value: f64) -> Self {
        Self { metric: metric.into(), param1: param1.to_string(), param2: param2.to_string(), value, ci_lo: None, ci_hi: None }
    }

    pub fn ci(metric: &str, param1: impl Display, param2: impl Display, value: f64, lo: f64, hi: f64) -> Self {
        Self { ci_lo: Some(lo), ci_hi: Some(hi), ..Self::new(metric, param1, param2, value) }
    }

    fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        format!("{},{},{},{},{},{}", csv_field(&self.metric), csv_field(&self.param1), csv_field(&self.param2), format_number(self.value), opt(self.ci_lo), opt(self.ci_hi))
    }
}

/// Shortest round-trip form, scientific for very small or large magnitudes.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:?}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub report: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub version: &'static str,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 1 for configuration and i/o problems, 2 for broken invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invariant(_) => 2,
            RunError::Config(_) | RunError::Io(_) => 1,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(m) => RunError::Invariant(m),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub record: ResultRecord,
}

/// Output directory `<out>/<kind>-<seed>`.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config.out.join(format!("{}-{}", config.kind, config.seed))
}

/// Rows only, without touching the file system.
pub fn compute(config: &ExperimentConfig, workers: usize) -> std::result::Result<(Vec<Row>, serde_json::Value), RunError> {
    let mc = MonteCarlo::new(config.seed, workers);
    let (rows, report) = kinds::run(config, &mc)?;
    if let Some(bad) = rows.iter().find(|r| !r.value.is_finite() || r.ci_lo.is_some_and(|lo| lo > r.value) || r.ci_hi.is_some_and(|hi| hi < r.value)) {
        return Err(RunError::Invariant(format!("row {} ({}, {}) has value {} outside its interval or not finite", bad.metric, bad.param1, bad.param2, bad.value)));
    }
    Ok((rows, report))
}

/// Run the experiment and write `result.json` and `result.csv`; on any
/// failure, files written by this run are removed.
pub fn run(config: &ExperimentConfig, workers: usize) -> std::result::Result<RunOutput, RunError> {
    let start = Instant::now();
    let (rows, report) = compute(config, workers)?;
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION,
        kind: config.kind,
        config: config.entries().into_iter().collect(),
        rows,
        report,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        workers: workers.max(1),
        version: env!("CARGO_PKG_VERSION"),
    };
    let dir = output_dir(config);
    let created = !dir.exists();
    let written = write_outputs(&dir, &record);
    if let Err(e) = written {
        let _ = fs::remove_file(dir.join("result.json"));
        let _ = fs::remove_file(dir.join("result.csv"));
        if created {
            let _ = fs::remove_dir_all(&dir);
        }
        return Err(e.into());
    }
    Ok(RunOutput { dir, record })
}

fn write_outputs(dir: &Path, record: &ResultRecord) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(record).map_err(std::io::Error::other)?;
    fs::write(dir.join("result.json"), json + "\n")?;
    fs::write(dir.join("result.csv"), render_csv(&record.rows))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmokeReport {
    pub hits: usize,
    pub trials: usize,
    /// The target has energy in a block the measure never charges.
    pub outside_support: bool,
}

/// Number of samples within `L^2` distance `radius` of `target`.
pub fn support_smoke_test(measure: &MeasureSpec, target: &RandomFieldCoeffs, radius: f64, trials: usize, mc: &MonteCarlo) -> Result<SmokeReport> {
    if target.blocks.len() != measure.k_max() || target.blocks.iter().zip(&measure.dims).any(|(b, &n)| b.len() != n) {
        return Err(invalid("target must be expressed on the measure's blocks"));
    }
    if !(radius >= 0.0) {
        return Err(invalid("radius must be >= 0"));
    }
    let dead = |k: usize| measure.weights[k] == 0.0 || measure.laws[k] == RadialLaw::Dirac(0.0);
    let outside_support = target.block_norms_sq().iter().enumerate().any(|(k, &e)| e > 0.0 && dead(k));
    let hits = mc
        .map(0x736d, trials, |_, rng| {
            let u = sample_full_field(measure, rng)?;
            let d2: f64 = u.flatten().iter().zip(target.flatten()).map(|(a, b)| (a - b).norm_sqr()).sum();
            Ok(d2 <= radius * radius)
        })
        .into_iter()
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    Ok(SmokeReport { hits, trials, outside_support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Field;
    use num_complex::Complex64;

    fn zero_target(dims: &[usize]) -> RandomFieldCoeffs {
        RandomFieldCoeffs { blocks: dims.iter().map(|&n| vec![Complex64::new(0.0, 0.0); n]).collect() }
    }

    #[test]
    fn smoke_test_degenerate_measure() {
        let m = MeasureSpec::dyadic(vec![1.0, 1.0], RadialLaw::Dirac(0.0), vec![3, 4], 0.0, Field::Complex).unwrap();
        let r = support_smoke_test(&m, &zero_target(&[3, 4]), 1e-12, 50, &MonteCarlo::serial(1)).unwrap();
        assert_eq!(r.hits, 50);
        assert!(!r.outside_support);
    }

    #[test]
    fn smoke_test_small_gaussian() {
        let m = MeasureSpec::dyadic(vec![0.3, 0.2, 0.1], RadialLaw::HalfGaussian, vec![2, 4, 8], 0.0, Field::Complex).unwrap();
        let r = support_smoke_test(&m, &zero_target(&[2, 4, 8]), 1.0, 400, &MonteCarlo::serial(2)).unwrap();
        // E ||u||^2 = 0.14, so Markov gives P(||u|| > 1) <= 0.14
        assert!(r.hits > 200, "{r:?}");
    }

    #[test]
    fn smoke_test_flags_dead_blocks() {
        let m = MeasureSpec::dyadic(vec![1.0, 0.0], RadialLaw::HalfGaussian, vec![2, 2], 0.0, Field::Complex).unwrap();
        let mut t = zero_target(&[2, 2]);
        t.blocks[1][0] = Complex64::new(1.0, 0.0);
        let r = support_smoke_test(&m, &t, 0.5, 200, &MonteCarlo::serial(3)).unwrap();
        assert_eq!(r.hits, 0);
        assert!(r.outside_support);
    }

    #[test]
    fn csv_rendering() {
        let rows = vec![Row::new("a", 1, "x,y", 0.5), Row::ci("b", "", 2.5, 1.0, 0.9, 1.1)];
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.5e-16), "1.5e-16");
        assert_eq!(render_csv(&rows), "metric,param1,param2,value,ci_lo,ci_hi\na,1,\"x,y\",0.5,,\nb,,2.5,1.0,0.9,1.1\n");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::from(Error::Invariant("x".into())).exit_code(), 2);
        assert_eq!(RunError::from(invalid("x")).exit_code(), 1);
    }
}
