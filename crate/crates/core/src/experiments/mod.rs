//! Reproducible Monte Carlo experiments with statistical pass/fail reports.
//!
//! Every replicate draws from its own ChaCha stream (`SeedSpec::replicate`)
//! and results are collected in replicate order before any reduction, so a
//! report depends only on its config, never on the worker count.

mod appendix;
mod clt;
mod ldp_t1;
mod oracle_suite;
mod process;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{SamplerParams, SeedSpec};
use crate::stats::{ks_critical_value, ks_p_value, ks_statistic, mean, variance};

pub use appendix::{run_appendix_checks, xi_variance_exact, DEFAULT_XI_LADDER};
pub use clt::run_clt_fixed_k;
pub use ldp_t1::{cumulant_exact, run_ldp_t1, DEFAULT_CUMULANT_LADDER, DEFAULT_LAMBDAS};
pub use oracle_suite::run_oracle_suite;
pub use process::run_process_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExperimentId {
    CltFixedK,
    ProcessUnit,
    ProcessHalfline,
    ProcessRealline,
    LdpT1,
    AppendixChecks,
    OracleSuite,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::CltFixedK,
        ExperimentId::ProcessUnit,
        ExperimentId::ProcessHalfline,
        ExperimentId::ProcessRealline,
        ExperimentId::LdpT1,
        ExperimentId::AppendixChecks,
        ExperimentId::OracleSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::CltFixedK => "CLT_FIXED_K",
            ExperimentId::ProcessUnit => "PROCESS_UNIT",
            ExperimentId::ProcessHalfline => "PROCESS_HALFLINE",
            ExperimentId::ProcessRealline => "PROCESS_REALLINE",
            ExperimentId::LdpT1 => "LDP_T1",
            ExperimentId::AppendixChecks => "APPENDIX_CHECKS",
            ExperimentId::OracleSuite => "ORACLE_SUITE",
        }
    }

    fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            ExperimentId::CltFixedK => &[("mean_se", 4.0), ("cov_rel", 0.05), ("cov_abs", 0.05), ("ks_alpha", 0.01)],
            ExperimentId::ProcessUnit => &[("mean_se", 4.0), ("cov_rel", 0.10), ("cov_abs", 0.05), ("ks_alpha", 0.01)],
            ExperimentId::ProcessHalfline | ExperimentId::ProcessRealline => {
                &[("mean_abs", 0.02), ("cov_rel", 0.10), ("cov_abs", 0.0), ("ks_alpha", 0.01)]
            }
            ExperimentId::LdpT1 => &[("duality_abs", 1e-6), ("lln_abs", 0.01)],
            ExperimentId::AppendixChecks => &[("mean_se", 4.0), ("decay_exponent_min", 2.5), ("scaling_rel", 0.02)],
            ExperimentId::OracleSuite => &[("roundtrip_rel", 1e-9), ("charpoly_rel", 1e-10), ("arcsine_abs", 1e-12)],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == up)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Optional knobs; anything left out takes the experiment's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    /// Sampler parameters for the process experiments on `[0,∞)` and `ℝ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerParams>,
    /// `n - i + 1` values for the `ξ̃` variance ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_ladder: Option<Vec<usize>>,
    /// Replicates for the single-law appendix checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_reps: Option<usize>,
    /// `n` values for the cumulant trend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certification_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charpoly_max_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentId,
    pub n: usize,
    pub reps: usize,
    #[serde(default)]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub k: usize,
    pub seed: SeedSpec,
    #[serde(default)]
    pub params: ExperimentParams,
    /// Overrides of the experiment's named tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Config with the experiment's default `n`, `reps`, grid and `k`.
    pub fn defaults(experiment_id: ExperimentId, seed: SeedSpec) -> Self {
        let (n, reps, grid, k) = match experiment_id {
            ExperimentId::CltFixedK => (2000, 20_000, vec![], 1),
            ExperimentId::ProcessUnit => (1000, 10_000, vec![0.2, 0.4, 0.6, 0.8], 0),
            ExperimentId::ProcessHalfline | ExperimentId::ProcessRealline => (1000, 10_000, vec![1.0], 0),
            ExperimentId::LdpT1 => (200, 10_000, vec![], 0),
            ExperimentId::AppendixChecks => (10_000, 4_000_000, vec![], 0),
            ExperimentId::OracleSuite => (20, 1000, vec![], 6),
        };
        ExperimentConfig {
            experiment_id,
            n,
            reps,
            grid,
            k,
            seed,
            params: ExperimentParams::default(),
            tolerances: BTreeMap::new(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::Config(format!("reps = {} must be at least 100", self.reps)));
        }
        if self.n < 4 {
            return Err(Error::Config(format!("n = {} must be at least 4", self.n)));
        }
        if self.grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("grid points must lie in [0,1]".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid must be strictly increasing".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let known: Vec<&str> = self.experiment_id.default_tolerances().iter().map(|(k, _)| *k).collect();
        for (name, v) in &self.tolerances {
            if !known.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown tolerance {name:?} for {}; known: {}",
                    self.experiment_id,
                    known.join(", ")
                )));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Config(format!("tolerance {name} = {v} must be a nonnegative number")));
            }
        }
        match self.experiment_id {
            ExperimentId::CltFixedK => {
                if self.k == 0 {
                    return Err(Error::Config("k must be at least 1".into()));
                }
                if self.k > self.n {
                    return Err(Error::Config(format!("k = {} exceeds n = {}", self.k, self.n)));
                }
            }
            ExperimentId::ProcessUnit | ExperimentId::ProcessHalfline | ExperimentId::ProcessRealline => {
                if self.grid.is_empty() {
                    return Err(Error::Config("process experiments need a grid".into()));
                }
            }
            ExperimentId::OracleSuite => {
                if self.k == 0 || self.k > 8 {
                    return Err(Error::Config(format!("certification order k = {} must be in 1..=8", self.k)));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Named tolerance: the override if present, else the default.
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            self.experiment_id
                .default_tolerances()
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no tolerance {name:?} for {}", self.experiment_id))
        })
    }

    /// Effective tolerances, defaults merged with overrides.
    pub fn effective_tolerances(&self) -> BTreeMap<String, f64> {
        self.experiment_id.default_tolerances().iter().map(|(k, _)| (k.to_string(), self.tolerance(k))).collect()
    }

    /// Independent seed for a named sub-experiment.
    pub(crate) fn sub_seed(&self, tag: u64) -> SeedSpec {
        SeedSpec { seed: self.seed.seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)), stream_id: self.seed.stream_id }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub standard_error: Option<f64>,
    /// Human-readable acceptance rule.
    pub rule: String,
    pub pass: bool,
}

impl StatRecord {
    /// `|estimate - target| ≤ k · se`.
    pub fn within_se(name: impl Into<String>, estimate: f64, target: f64, se: f64, k: f64) -> Self {
        StatRecord {
            name: name.into(),
            estimate,
            target,
            standard_error: Some(se),
            rule: format!("|est - target| <= {k} SE"),
            pass: (estimate - target).abs() <= k * se,
        }
    }

    /// `|estimate - target| ≤ max(rel · |target|, abs)`.
    pub fn within_tol(name: impl Into<String>, estimate: f64, target: f64, rel: f64, abs: f64) -> Self {
        StatRecord {
            name: name.into(),
            estimate,
            target,
            standard_error: None,
            rule: format!("|est - target| <= max({rel} |target|, {abs})"),
            pass: (estimate - target).abs() <= (rel * target.abs()).max(abs),
        }
    }

    pub fn at_least(name: impl Into<String>, estimate: f64, bound: f64) -> Self {
        StatRecord {
            name: name.into(),
            estimate,
            target: bound,
            standard_error: None,
            rule: format!("est >= {bound}"),
            pass: estimate >= bound,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRecord {
    pub name: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub samples: usize,
    pub alpha: f64,
    pub pass: bool,
}

impl KsRecord {
    pub fn normal(name: impl Into<String>, samples: &[f64], mean: f64, sd: f64, alpha: f64) -> Self {
        let d = ks_statistic(samples, |x| crate::specfun::std_normal_cdf((x - mean) / sd));
        let n = samples.len();
        let p = ks_p_value(d, n);
        KsRecord {
            name: name.into(),
            statistic: d,
            critical_value: ks_critical_value(n, alpha),
            p_value: p,
            samples: n,
            alpha,
            pass: p > alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecord {
    pub name: String,
    pub labels: Vec<String>,
    pub empirical: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
}

/// Boolean check with a short description of what was compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

/// Errors against a target along a ladder; passes when they strictly
/// decrease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRecord {
    pub name: String,
    pub ladder: Vec<f64>,
    pub estimates: Vec<f64>,
    pub target: f64,
    pub errors: Vec<f64>,
    pub pass: bool,
}

impl TrendRecord {
    pub fn decreasing_error(name: impl Into<String>, ladder: Vec<f64>, estimates: Vec<f64>, target: f64) -> Self {
        let errors: Vec<f64> = estimates.iter().map(|e| (e - target).abs()).collect();
        let pass = errors.iter().all(|e| e.is_finite()) && errors.windows(2).all(|w| w[1] < w[0]);
        TrendRecord { name: name.into(), ladder, estimates, target, errors, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub stats: Vec<StatRecord>,
    pub ks: Vec<KsRecord>,
    pub covariances: Vec<CovarianceRecord>,
    pub checks: Vec<CheckRecord>,
    pub trends: Vec<TrendRecord>,
    /// Diagnostics that do not gate `pass`.
    pub notes: Vec<String>,
    pub pass: bool,
    /// Kept out of the serialized payload so reports are reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            config: config.clone(),
            tolerances: config.effective_tolerances(),
            stats: vec![],
            ks: vec![],
            covariances: vec![],
            checks: vec![],
            trends: vec![],
            notes: vec![],
            pass: false,
            wall_clock_seconds: 0.0,
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.pass = self.stats.iter().all(|s| s.pass)
            && self.ks.iter().all(|k| k.pass)
            && self.checks.iter().all(|c| c.pass)
            && self.trends.iter().all(|t| t.pass);
        self
    }

    pub fn stat(&self, name: &str) -> Option<&StatRecord> {
        self.stats.iter().find(|s| s.name == name)
    }

    pub fn ks_record(&self, name: &str) -> Option<&KsRecord> {
        self.ks.iter().find(|s| s.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|s| s.name == name)
    }

    pub fn trend(&self, name: &str) -> Option<&TrendRecord> {
        self.trends.iter().find(|s| s.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = vec![];
        out.extend(self.stats.iter().filter(|s| !s.pass).map(|s| s.name.clone()));
        out.extend(self.ks.iter().filter(|s| !s.pass).map(|s| s.name.clone()));
        out.extend(self.checks.iter().filter(|s| !s.pass).map(|s| s.name.clone()));
        out.extend(self.trends.iter().filter(|s| !s.pass).map(|s| s.name.clone()));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize report: {e}")))
    }

    /// One row per statistic, KS test, check and trend point.
    pub fn stats_csv(&self, provenance: &str) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = format!("{}kind,name,estimate,target,standard_error,rule,pass\n", comment(provenance));
        for s in &self.stats {
            out += &format!(
                "stat,{},{},{},{},{},{}\n",
                csv_field(&s.name),
                s.estimate,
                s.target,
                opt(s.standard_error),
                csv_field(&s.rule),
                s.pass
            );
        }
        for k in &self.ks {
            out += &format!(
                "ks,{},{},{},,{},{}\n",
                csv_field(&k.name),
                k.statistic,
                k.critical_value,
                csv_field(&format!("p = {} > {}", k.p_value, k.alpha)),
                k.pass
            );
        }
        for c in &self.checks {
            out += &format!("check,{},,,,{},{}\n", csv_field(&c.name), csv_field(&c.detail), c.pass);
        }
        for t in &self.trends {
            for (i, (x, e)) in t.ladder.iter().zip(&t.estimates).enumerate() {
                out += &format!(
                    "trend,{},{},{},,{},{}\n",
                    csv_field(&format!("{}[{}]", t.name, x)),
                    e,
                    t.target,
                    csv_field(&format!("error {}", t.errors[i])),
                    t.pass
                );
            }
        }
        out
    }

    /// Long-format covariance table: `i,j,label_i,label_j,empirical,target`.
    pub fn covariance_csv(&self, index: usize, provenance: &str) -> Option<String> {
        let c = self.covariances.get(index)?;
        let mut out = format!("{}i,j,label_i,label_j,empirical,target\n", comment(provenance));
        for i in 0..c.labels.len() {
            for j in 0..c.labels.len() {
                out += &format!(
                    "{i},{j},{},{},{},{}\n",
                    csv_field(&c.labels[i]),
                    csv_field(&c.labels[j]),
                    c.empirical[i][j],
                    c.target[i][j]
                );
            }
        }
        Some(out)
    }

    /// Writes `report.json` or `stats.csv` plus one `cov_<name>.csv` per
    /// covariance matrix; returns the paths written.
    pub fn write(&self, dir: &Path, format: OutputFormat, provenance: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        let stem = self.config.experiment_id.name().to_ascii_lowercase();
        let mut written = vec![];
        let mut put = |name: String, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
            Ok(())
        };
        match format {
            OutputFormat::Json => put(format!("{stem}_report.json"), self.to_json()? + "\n")?,
            OutputFormat::Csv => {
                put(format!("{stem}_stats.csv"), self.stats_csv(provenance))?;
                for (i, c) in self.covariances.iter().enumerate() {
                    put(format!("{stem}_cov_{}.csv", sanitize(&c.name)), self.covariance_csv(i, provenance).unwrap())?;
                }
            }
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Config(format!("unknown output format {s:?} (json or csv)"))),
        }
    }
}

fn comment(provenance: &str) -> String {
    provenance.lines().map(|l| format!("# {l}\n")).collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Provenance line for output files: crate version and the config.
pub fn provenance(config: &ExperimentConfig) -> String {
    let cfg = serde_json::to_string(config).unwrap_or_default();
    format!("hml {} config={cfg}", env!("CARGO_PKG_VERSION"))
}

/// Mean and covariance records for replicate rows against targets.
pub(crate) fn mean_and_covariance(
    report: &mut ExperimentReport,
    rows: &[Vec<f64>],
    labels: &[String],
    mean_targets: &[f64],
    cov_targets: &[Vec<f64>],
    mean_rule: MeanRule,
    cov_rel: f64,
    cov_abs: f64,
    cov_name: &str,
) {
    let d = labels.len();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    for j in 0..d {
        let m = mean(&cols[j]);
        let se = (variance(&cols[j]) / cols[j].len() as f64).sqrt();
        let name = format!("mean[{}]", labels[j]);
        report.stats.push(match mean_rule {
            MeanRule::StandardErrors(k) => StatRecord::within_se(name, m, mean_targets[j], se, k),
            MeanRule::Absolute(a) => StatRecord::within_tol(name, m, mean_targets[j], 0.0, a).with_se(se),
        });
    }
    let emp = crate::stats::covariance_matrix(rows);
    for i in 0..d {
        for j in i..d {
            report.stats.push(StatRecord::within_tol(
                format!("cov[{},{}]", labels[i], labels[j]),
                emp[i][j],
                cov_targets[i][j],
                cov_rel,
                cov_abs,
            ));
        }
    }
    report.covariances.push(CovarianceRecord {
        name: cov_name.to_string(),
        labels: labels.to_vec(),
        empirical: emp,
        target: cov_targets.to_vec(),
    });
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum MeanRule {
    StandardErrors(f64),
    Absolute(f64),
}

/// Runs any experiment, on a dedicated pool when `workers` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let run = || match config.experiment_id {
        ExperimentId::CltFixedK => run_clt_fixed_k(config),
        ExperimentId::ProcessUnit | ExperimentId::ProcessHalfline | ExperimentId::ProcessRealline => {
            run_process_experiment(config)
        }
        ExperimentId::LdpT1 => run_ldp_t1(config),
        ExperimentId::AppendixChecks => run_appendix_checks(config),
        ExperimentId::OracleSuite => run_oracle_suite(config),
    };
    let mut report = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(run)?,
        None => run()?,
    };
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
