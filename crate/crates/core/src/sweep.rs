//! Grid sweeps over `(n, S, a)` combining measured risk with every bound.
//!
//! A [`SweepConfig`] expands to a deterministic list of grid points. Points
//! are evaluated concurrently but rows are returned in grid order, and
//! each point derives its randomness only from the configured seed, so the
//! output does not depend on the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundProfile;
use crate::distributions::{make_point_mass, make_two_level, make_uniform, Counts, Distribution};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::exact_risk::RiskReport;
use crate::montecarlo::{evaluate_risk, max_risk_search, MethodPolicy, SeedSpec, WITNESS_CANDIDATES};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ENTROPY_LAB_THREADS";

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// [`fmt_f64`], with `None` as the empty string.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::validation(format!("invalid {what}: {e}")))
}

/// Parse a JSON integer array such as `[3, 0, 1]`.
pub fn parse_counts(text: &str) -> Result<Counts> {
    parse_json(text, "counts")
}

/// Parse a JSON probability array such as `[0.5, 0.5]`.
pub fn parse_distribution(text: &str) -> Result<Distribution> {
    parse_json(text, "distribution")
}

/// Parse `{"kind": "...", "a": ...}`.
pub fn parse_estimator_kind(text: &str) -> Result<EstimatorKind> {
    let kind: EstimatorKind = parse_json(text, "estimator")?;
    kind.validate()?;
    Ok(kind)
}

/// An estimator entry: a bare tag takes `a` from the grid, a full kind
/// object fixes its own `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorSpec {
    Tag(String),
    Kind(EstimatorKind),
}

/// Which distribution(s) a grid point is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    PointMass,
    Uniform,
    TwoLevel {
        heavy_mass: f64,
    },
    /// Maximum risk over the witness families, via [`max_risk_search`].
    WorstCase,
}

impl FamilySpec {
    pub fn label(&self) -> String {
        match self {
            FamilySpec::PointMass => "point_mass".into(),
            FamilySpec::Uniform => "uniform".into(),
            FamilySpec::TwoLevel { heavy_mass } => format!("two_level:{}", fmt_f64(*heavy_mass)),
            FamilySpec::WorstCase => "worst_case".into(),
        }
    }

    fn distribution(&self, s: usize) -> Result<Distribution> {
        match *self {
            FamilySpec::PointMass => make_point_mass(s),
            FamilySpec::Uniform => make_uniform(s),
            FamilySpec::TwoLevel { heavy_mass } => make_two_level(s, heavy_mass),
            FamilySpec::WorstCase => unreachable!("worst case has no single distribution"),
        }
    }
}

fn default_trials() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_grid: Vec<u64>,
    #[serde(rename = "S_grid")]
    pub s_grid: Vec<usize>,
    pub a_grid: Vec<f64>,
    pub estimators: Vec<EstimatorSpec>,
    pub families: Vec<FamilySpec>,
    /// Monte Carlo trials per distribution; for `worst_case` the budget
    /// for the whole search.
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method_policy: MethodPolicy,
}

/// One grid point of an expanded sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: u64,
    pub s: usize,
    pub kind: EstimatorKind,
    pub family: FamilySpec,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig = parse_json(text, "sweep config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty()
            || self.s_grid.is_empty()
            || self.a_grid.is_empty()
            || self.estimators.is_empty()
            || self.families.is_empty()
        {
            return Err(Error::validation("every grid must be non-empty"));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::validation("n_grid entries must be at least 1"));
        }
        if self.s_grid.contains(&0) {
            return Err(Error::validation("S_grid entries must be at least 1"));
        }
        if let Some(a) = self.a_grid.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::validation(format!("a_grid entry {a} must be finite and >= 0")));
        }
        for spec in &self.estimators {
            match spec {
                EstimatorSpec::Tag(tag) => {
                    EstimatorKind::from_tag(tag, Some(1.0))?;
                }
                EstimatorSpec::Kind(kind) => kind.validate()?,
            }
        }
        for family in &self.families {
            if let FamilySpec::TwoLevel { heavy_mass } = family {
                for &s in &self.s_grid {
                    make_two_level(s, *heavy_mass)?;
                }
            }
        }
        if self.method_policy != MethodPolicy::ForceEnum && self.trials < 2 {
            return Err(Error::validation("trials must be at least 2 when Monte Carlo may run"));
        }
        if self.families.contains(&FamilySpec::WorstCase) && self.trials < WITNESS_CANDIDATES as u64 {
            return Err(Error::validation(format!(
                "worst_case needs a trial budget of at least {WITNESS_CANDIDATES}"
            )));
        }
        Ok(())
    }

    /// Grid points in output order: `n`, then `S`, then estimator, then
    /// `a`, then family. Tags of non-Dirichlet estimators appear once with `a = 0`.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let mut kinds = Vec::new();
        for spec in &self.estimators {
            match spec {
                EstimatorSpec::Kind(kind) => kinds.push(*kind),
                EstimatorSpec::Tag(tag) => {
                    let probe = EstimatorKind::from_tag(tag, Some(1.0))?;
                    if probe.is_dirichlet() {
                        for &a in &self.a_grid {
                            kinds.push(EstimatorKind::from_tag(tag, Some(a))?);
                        }
                    } else {
                        kinds.push(probe);
                    }
                }
            }
        }
        let mut points = Vec::new();
        for &n in &self.n_grid {
            for &s in &self.s_grid {
                for &kind in &kinds {
                    for &family in &self.families {
                        points.push(GridPoint { n, s, kind, family });
                    }
                }
            }
        }
        Ok(points)
    }
}

/// Measured risk and bound profile at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    #[serde(rename = "S")]
    pub s: usize,
    pub a: f64,
    pub estimator: String,
    pub family: String,
    pub method: String,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub std_error: Option<f64>,
    pub seed: u64,
    /// Distribution the risk was measured at (the maximizer for `worst_case`).
    pub witness: String,
    pub heavy_mass: Option<f64>,
    pub bounds: BoundProfile,
}

pub const RISK_HEADER: [&str; 11] = [
    "n",
    "S",
    "a",
    "estimator",
    "family",
    "method",
    "bias",
    "variance",
    "mse",
    "std_error",
    "seed",
];

impl SweepRow {
    /// Multiply the risk columns by `scale` (bias) and `scale^2` (the rest).
    pub fn rescale_risk(&mut self, scale: f64) {
        self.bias *= scale;
        self.variance *= scale * scale;
        self.mse *= scale * scale;
        self.std_error = self.std_error.map(|e| e * scale * scale);
    }

    pub fn risk_cells(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.s.to_string(),
            fmt_f64(self.a),
            self.estimator.clone(),
            self.family.clone(),
            self.method.clone(),
            fmt_f64(self.bias),
            fmt_f64(self.variance),
            fmt_f64(self.mse),
            fmt_opt(self.std_error),
            self.seed.to_string(),
        ]
    }

    pub fn sweep_cells(&self) -> Vec<String> {
        let mut cells = self.risk_cells();
        cells.push(self.witness.clone());
        cells.push(fmt_opt(self.heavy_mass));
        cells.extend(self.bounds.csv_cells().into_iter().skip(3));
        cells
    }
}

/// Column names for [`SweepRow::sweep_cells`].
pub fn sweep_header() -> Vec<&'static str> {
    let mut header = RISK_HEADER.to_vec();
    header.extend(["witness", "heavy_mass"]);
    header.extend(BoundProfile::CSV_HEADER.iter().skip(3));
    header
}

fn evaluate_point(config: &SweepConfig, point: &GridPoint) -> Result<SweepRow> {
    let GridPoint { n, s, kind, family } = *point;
    let seed = SeedSpec::new(config.seed);
    let (report, witness, heavy_mass): (RiskReport, String, Option<f64>) = match family {
        FamilySpec::WorstCase => {
            let found = max_risk_search(kind, n, s, config.trials, seed, config.method_policy)?;
            (found.report, found.family.tag().to_string(), found.heavy_mass)
        }
        _ => {
            let dist = family.distribution(s)?;
            let report = evaluate_risk(kind, &dist, n, config.method_policy, config.trials, seed)?;
            let heavy = match family {
                FamilySpec::TwoLevel { heavy_mass } => Some(heavy_mass),
                _ => None,
            };
            let witness = match family {
                FamilySpec::TwoLevel { .. } => "two_level".to_string(),
                other => other.label(),
            };
            (report, witness, heavy)
        }
    };
    let a = kind.a();
    Ok(SweepRow {
        n,
        s,
        a,
        estimator: kind.tag().to_string(),
        family: family.label(),
        method: report.method.tag().to_string(),
        bias: report.bias,
        variance: report.variance,
        mse: report.mse,
        std_error: report.std_error,
        seed: config.seed,
        witness,
        heavy_mass,
        bounds: BoundProfile::evaluate(n, s, a)?,
    })
}

/// Evaluate every grid point on the current rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let points = config.grid()?;
    points.par_iter().map(|p| evaluate_point(config, p)).collect()
}

/// Run `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_thread_cap<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::validation("thread cap must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Thread cap from [`THREADS_ENV`], if set.
pub fn thread_cap_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::validation(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
    }
}

fn write_csv_records<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let io_err = |e: csv::Error| Error::Resource(format!("write failed: {e}"));
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header).map_err(io_err)?;
    for row in rows {
        writer.write_record(&row).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| Error::Resource(format!("write failed: {e}")))
}

/// Full sweep CSV: risk columns, witness, then bound columns.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_csv_records(out, &sweep_header(), rows.iter().map(SweepRow::sweep_cells))
}

/// Risk-only CSV.
pub fn write_risk_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_csv_records(out, &RISK_HEADER, rows.iter().map(SweepRow::risk_cells))
}

/// Bound profiles, one per row.
pub fn write_bounds_csv<W: Write>(out: W, profiles: &[BoundProfile]) -> Result<()> {
    write_csv_records(
        out,
        &BoundProfile::CSV_HEADER,
        profiles.iter().map(BoundProfile::csv_cells),
    )
}
