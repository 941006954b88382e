//! `hml`: run the experiments and evaluators from the command line.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 on a configuration or input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hml_core::experiments::{run_experiment, ExperimentConfig, ExperimentId, OutputFormat};
use hml_core::hankel_det::logdet_process;
use hml_core::ldp::{lambda_functional, lambda_t, lambda_t_star, rate_t1_closed, TestFunction};
use hml_core::limit_theory::{r, KernelId};
use hml_core::moment_space::canonical_to_moments;
use hml_core::sampling::{sample_canonical, HalflineParams, ReallineParams, SamplerParams};
use hml_core::{CanonicalCoords, IntervalKind, SeedSpec};

const DUALITY_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "hml", version, about = "Random moment sequences and Hankel log-determinants")]
struct Cli {
    /// Base seed; falls back to HML_SEED. Required by every stochastic subcommand.
    #[arg(long, global = true, env = "HML_SEED")]
    seed: Option<u64>,
    /// Worker threads for experiments (default 1). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json", value_parser = parse_format)]
    format: OutputFormat,
    /// Write the resolved config as JSON to this path and exit.
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,
    /// Run a config previously written by --dump-config.
    #[arg(long, global = true, conflicts_with = "dump_config")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random canonical coordinates or moment vectors.
    Sample(SampleArgs),
    /// Log-determinant paths for given or random coordinates.
    Logdet(LogdetArgs),
    /// Tabulate a covariance kernel or r(t) on a grid.
    Kernel(KernelArgs),
    /// Fixed-k central limit experiment on [0,1].
    Clt(CltArgs),
    /// Process-level experiment on the chosen interval.
    Process(ProcessArgs),
    /// Rate functions, or the t = 1 experiment with --run.
    Ldp(LdpArgs),
    /// Variance and scaling checks for the Beta building blocks.
    Appendix(AppendixArgs),
    /// Exact rational certification suite.
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, default_value = "unit")]
    interval: IntervalKind,
    /// Number of coordinates (odd on the real line).
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, value_enum, default_value = "canonical")]
    what: SampleKind,
}

#[derive(Args, Debug)]
struct LogdetArgs {
    #[arg(long, default_value = "unit")]
    interval: IntervalKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "0:1:0.1", value_parser = parse_grid)]
    grid: Grid,
    /// Comma-separated canonical coordinates; random (needs --seed) when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coords: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, value_enum)]
    kernel: KernelName,
    #[arg(long, value_parser = parse_grid)]
    grid: Grid,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tolerance)]
    tolerances: Vec<(String, f64)>,
}

#[derive(Args, Debug)]
struct CltArgs {
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args, Debug)]
struct ProcessArgs {
    #[arg(long, default_value = "unit")]
    interval: IntervalKind,
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args, Debug)]
struct LdpArgs {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Evaluate Λ*_t(x).
    #[arg(long)]
    x: Option<f64>,
    /// Evaluate Λ_t(λ).
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Evaluate Λ(f): `const:c`, `indicator:t[:lam]` or `{"breaks":[..],"values":[..]}`.
    #[arg(long)]
    f: Option<String>,
    /// Run the t = 1 experiment (duality, cumulant trend, law of large numbers).
    #[arg(long)]
    run: bool,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args, Debug)]
struct AppendixArgs {
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SampleKind {
    Canonical,
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KernelName {
    /// Unit-interval kernel f(s, t).
    F,
    /// Half-line kernel g(s, t).
    G,
    /// Real-line kernel g(s, t) / 2.
    GHalf,
    /// Mean curve r(t).
    R,
}

#[derive(Debug, Clone, PartialEq)]
struct Grid(Vec<f64>);

/// Everything needed to reproduce a run; what `--dump-config` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum CliConfig {
    Sample { interval: IntervalKind, dim: usize, count: usize, what: SampleKind, seed: u64 },
    Logdet { interval: IntervalKind, n: usize, grid: Vec<f64>, coords: Option<Vec<f64>>, seed: Option<u64> },
    Kernel { kernel: KernelName, grid: Vec<f64> },
    Ldp { t: f64, x: Option<f64>, lambda: Option<f64>, f: Option<String> },
    Experiment(ExperimentConfig),
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: hml_core::Error| e.to_string())
}

/// `start:stop:step` (inclusive of `stop`) or a single value.
fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad grid value {p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [v] => Ok(Grid(vec![v])),
        [start, stop, step] => {
            if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                return Err(format!("grid {s:?} needs start <= stop and step > 0"));
            }
            let span = (stop - start) / step;
            let count = (span + 1e-9).floor() as usize;
            if count > 1_000_000 {
                return Err(format!("grid {s:?} has too many points"));
            }
            let mut pts: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
            // snap the last point so that 0:1:0.1 ends at exactly 1
            if let Some(last) = pts.last_mut() {
                if (*last - stop).abs() < 1e-9 * step.max(1.0) {
                    *last = stop;
                }
            }
            Ok(Grid(pts))
        }
        _ => Err(format!("grid {s:?} is not start:stop:step")),
    }
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("tolerance {s:?} is not name=value"))?;
    let v = value.parse::<f64>().map_err(|e| format!("bad tolerance value {value:?}: {e}"))?;
    Ok((name.trim().to_string(), v))
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| anyhow!("{what} is stochastic: pass --seed or set HML_SEED"))
}

fn experiment(
    id: ExperimentId,
    seed: Option<u64>,
    common: &ExperimentArgs,
    edit: impl FnOnce(&mut ExperimentConfig),
) -> Result<CliConfig> {
    let seed = require_seed(seed, id.name())?;
    let mut c = ExperimentConfig::defaults(id, SeedSpec::new(seed));
    if let Some(n) = common.n {
        c.n = n;
    }
    if let Some(reps) = common.reps {
        c.reps = reps;
    }
    c.tolerances.extend(common.tolerances.iter().cloned());
    edit(&mut c);
    c.validate()?;
    Ok(CliConfig::Experiment(c))
}

fn resolve(command: Command, seed: Option<u64>) -> Result<CliConfig> {
    Ok(match command {
        Command::Sample(a) => CliConfig::Sample {
            interval: a.interval,
            dim: a.dim,
            count: a.count,
            what: a.what,
            seed: require_seed(seed, "sample")?,
        },
        Command::Logdet(a) => {
            let seed = match a.coords {
                Some(_) => seed,
                None => Some(require_seed(seed, "logdet without --coords")?),
            };
            CliConfig::Logdet { interval: a.interval, n: a.n, grid: a.grid.0, coords: a.coords, seed }
        }
        Command::Kernel(a) => CliConfig::Kernel { kernel: a.kernel, grid: a.grid.0 },
        Command::Clt(a) => experiment(ExperimentId::CltFixedK, seed, &a.common, |c| {
            if let Some(k) = a.k {
                c.k = k;
            }
        })?,
        Command::Process(a) => {
            let id = match a.interval {
                IntervalKind::Unit => ExperimentId::ProcessUnit,
                IntervalKind::Halfline => ExperimentId::ProcessHalfline,
                IntervalKind::Realline => ExperimentId::ProcessRealline,
            };
            experiment(id, seed, &a.common, |c| {
                if let Some(g) = a.grid {
                    c.grid = g.0;
                }
            })?
        }
        Command::Ldp(a) if a.run => experiment(ExperimentId::LdpT1, seed, &a.common, |_| ())?,
        Command::Ldp(a) => {
            if a.x.is_none() && a.lambda.is_none() && a.f.is_none() {
                bail!("ldp needs at least one of --x, --lambda, --f, or --run");
            }
            CliConfig::Ldp { t: a.t, x: a.x, lambda: a.lambda, f: a.f }
        }
        Command::Appendix(a) => experiment(ExperimentId::AppendixChecks, seed, &a.common, |_| ())?,
        Command::OracleCheck(a) => experiment(ExperimentId::OracleSuite, seed, &a.common, |c| {
            if let Some(k) = a.k {
                c.k = k;
            }
        })?,
    })
}

fn provenance(config: &CliConfig) -> String {
    let cfg = serde_json::to_string(config).unwrap_or_default();
    format!("hml {} config={cfg}", env!("CARGO_PKG_VERSION"))
}

struct Output<'a> {
    dir: Option<&'a Path>,
}

impl Output<'_> {
    fn emit(&self, name: &str, body: &str) -> Result<()> {
        match self.dir {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
                let path = dir.join(name);
                fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            None => print!("{body}"),
        }
        Ok(())
    }
}

fn fmt_csv_row(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(",") + "\n"
}

fn sampler_for(interval: IntervalKind, dim: usize) -> Result<SamplerParams> {
    Ok(match interval {
        IntervalKind::Unit => SamplerParams::Unit,
        IntervalKind::Halfline => SamplerParams::Halfline(HalflineParams::unit_mean(dim)),
        IntervalKind::Realline => {
            if dim % 2 == 0 {
                bail!("real-line samples need an odd dimension, got {dim}");
            }
            SamplerParams::Realline(ReallineParams::unit_mean(dim.div_ceil(2)))
        }
    })
}

/// Returns whether all checks passed.
fn execute(config: &CliConfig, format: OutputFormat, out: &Output) -> Result<bool> {
    let prov = provenance(config);
    let header = format!("# {prov}\n");
    match config {
        CliConfig::Sample { interval, dim, count, what, seed } => {
            if *dim == 0 || *count == 0 {
                bail!("--dim and --count must be positive");
            }
            let params = sampler_for(*interval, *dim)?;
            let base = SeedSpec::new(*seed);
            let mut rows = vec![];
            for r in 0..*count {
                let c = sample_canonical(*dim, &params, base.replicate(r as u64))?;
                rows.push(match what {
                    SampleKind::Canonical => c.coords,
                    SampleKind::Moments => canonical_to_moments(&c).moments,
                });
            }
            let label = if *what == SampleKind::Canonical { "coord" } else { "m" };
            let body = match format {
                OutputFormat::Csv => {
                    let mut s = header.clone();
                    s += &fmt_csv_row(
                        std::iter::once("replicate".to_string()).chain((1..=*dim).map(|i| format!("{label}{i}"))),
                    );
                    for (r, row) in rows.iter().enumerate() {
                        s += &fmt_csv_row(std::iter::once(r.to_string()).chain(row.iter().map(|v| format!("{v:e}"))));
                    }
                    s
                }
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({"provenance": prov, "interval": interval,
                        "kind": what, "samples": rows}))? + "\n"
                }
            };
            out.emit(&file_name("sample", format), &body)?;
            Ok(true)
        }
        CliConfig::Logdet { interval, n, grid, coords, seed } => {
            let c = match (coords, seed) {
                (Some(v), _) => CanonicalCoords::new(*interval, v.clone())?,
                (None, Some(s)) => {
                    let dim = match interval {
                        IntervalKind::Realline => 2 * n + 1,
                        _ => 2 * n,
                    };
                    sample_canonical(dim, &sampler_for(*interval, dim)?, SeedSpec::new(*s))?
                }
                (None, None) => bail!("logdet needs --coords or --seed"),
            };
            let path = logdet_process(&c, *n, grid)?;
            let body = match format {
                OutputFormat::Csv => path.to_csv(&prov),
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({"provenance": prov, "path": path}))? + "\n"
                }
            };
            out.emit(&file_name("logdet", format), &body)?;
            Ok(true)
        }
        CliConfig::Kernel { kernel, grid } => {
            let body = kernel_table(*kernel, grid, format, &prov)?;
            out.emit(&file_name("kernel", format), &body)?;
            Ok(true)
        }
        CliConfig::Ldp { t, x, lambda, f } => {
            let mut rows: Vec<serde_json::Value> = vec![];
            let mut pass = true;
            if let Some(x) = x {
                let rate = lambda_t_star(*t, *x, 1e-13)?;
                let mut row = serde_json::json!({"quantity": "rate_t_star", "t": t, "argument": x, "value": rate});
                if *t == 1.0 {
                    let closed = rate_t1_closed(*x);
                    let ok = (rate - closed).abs() <= DUALITY_TOL;
                    pass &= ok;
                    row["closed_form"] = closed.into();
                    row["match"] = ok.into();
                }
                rows.push(row);
            }
            if let Some(lam) = lambda {
                let v = lambda_t(*t, *lam)?;
                rows.push(serde_json::json!({"quantity": "lambda_t", "t": t, "argument": lam,
                    "value": if v.is_finite() { serde_json::json!(v) } else { "inf".into() }}));
            }
            if let Some(spec) = f {
                let tf: TestFunction = spec.parse()?;
                let eval = lambda_functional(&tf, 1e-10)?;
                rows.push(serde_json::json!({"quantity": "lambda_functional", "argument": spec,
                    "value": eval.value.to_string(), "regime": eval.regime, "k": eval.k}));
            }
            let body = match format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({"provenance": prov, "results": rows}))? + "\n"
                }
                OutputFormat::Csv => {
                    let mut s = header.clone() + "quantity,t,argument,value,closed_form,match\n";
                    for row in &rows {
                        let field = |k: &str| match &row[k] {
                            serde_json::Value::Null => String::new(),
                            serde_json::Value::String(v) => csv_quote(v),
                            other => other.to_string(),
                        };
                        s += &fmt_csv_row(["quantity", "t", "argument", "value", "closed_form", "match"].map(field));
                    }
                    s
                }
            };
            out.emit(&file_name("ldp", format), &body)?;
            Ok(pass)
        }
        CliConfig::Experiment(c) => {
            let report = run_experiment(c)?;
            eprintln!("{}: {}", c.experiment_id, if report.pass { "pass" } else { "FAIL" });
            for f in report.failures() {
                eprintln!("  failed: {f}");
            }
            match out.dir {
                Some(dir) => {
                    for p in report.write(dir, format, &prov)? {
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => match format {
                    OutputFormat::Json => println!("{}", report.to_json()?),
                    OutputFormat::Csv => print!("{}", report.stats_csv(&prov)),
                },
            }
            Ok(report.pass)
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() }
}

fn file_name(stem: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => format!("{stem}.json"),
        OutputFormat::Csv => format!("{stem}.csv"),
    }
}

fn kernel_table(kernel: KernelName, grid: &[f64], format: OutputFormat, prov: &str) -> Result<String> {
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        bail!("kernel grid must lie in [0,1]");
    }
    let id = match kernel {
        KernelName::F => Some(KernelId::FUnit),
        KernelName::G => Some(KernelId::GHalfline),
        KernelName::GHalf => Some(KernelId::GHalfReal),
        KernelName::R => None,
    };
    let Some(id) = id else {
        let values: Vec<f64> = grid.iter().map(|&t| r(t)).collect::<hml_core::Result<_>>()?;
        return Ok(match format {
            OutputFormat::Csv => {
                let mut s = format!("# {prov}\nt,r\n");
                for (t, v) in grid.iter().zip(&values) {
                    s += &format!("{t},{v}\n");
                }
                s
            }
            OutputFormat::Json => {
                serde_json::to_string_pretty(&serde_json::json!({"provenance": prov, "t": grid, "r": values}))? + "\n"
            }
        });
    };
    let matrix: Vec<Vec<f64>> = grid
        .iter()
        .map(|&s| grid.iter().map(|&t| id.eval(s, t)).collect::<hml_core::Result<_>>())
        .collect::<hml_core::Result<_>>()?;
    Ok(match format {
        OutputFormat::Csv => {
            let mut s = format!("# {prov}\n");
            s += &fmt_csv_row(std::iter::once("s/t".to_string()).chain(grid.iter().map(|t| t.to_string())));
            for (si, row) in grid.iter().zip(&matrix) {
                s += &fmt_csv_row(std::iter::once(si.to_string()).chain(row.iter().map(|v| v.to_string())));
            }
            s
        }
        OutputFormat::Json => {
            serde_json::to_string_pretty(&serde_json::json!({"provenance": prov, "kernel": id, "grid": grid,
                "values": matrix}))? + "\n"
        }
    })
}

fn load_config(path: &Path) -> Result<CliConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let config: CliConfig =
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    if let CliConfig::Experiment(c) = &config {
        c.validate()?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<bool> {
    let mut config = match (cli.config.as_deref(), cli.command) {
        (Some(path), None) => load_config(path)?,
        (Some(_), Some(_)) => bail!("--config replaces the subcommand; give one or the other"),
        (None, Some(cmd)) => resolve(cmd, cli.seed)?,
        (None, None) => bail!("no subcommand given (see --help)"),
    };
    if let CliConfig::Experiment(c) = &mut config {
        if let Some(w) = cli.workers {
            c.workers = Some(w);
        }
        c.workers.get_or_insert(1);
        c.validate()?;
    }
    if let Some(path) = &cli.dump_config {
        fs::write(path, serde_json::to_string_pretty(&config)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        return Ok(true);
    }
    let start = Instant::now();
    let pass = execute(&config, cli.format, &Output { dir: cli.output_dir.as_deref() })?;
    eprintln!("wall-clock {:.3} s", start.elapsed().as_secs_f64());
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("0:1:0.25").unwrap().0, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = parse_grid("0:1:0.1").unwrap().0;
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(parse_grid("0.5").unwrap().0, vec![0.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a:1:0.1").is_err());
    }

    #[test]
    fn tolerance_syntax() {
        assert_eq!(parse_tolerance("cov_rel=0.1").unwrap(), ("cov_rel".to_string(), 0.1));
        assert!(parse_tolerance("cov_rel").is_err());
    }

    #[test]
    fn config_round_trip() {
        let c = resolve(
            Command::Kernel(KernelArgs { kernel: KernelName::F, grid: Grid(vec![0.0, 1.0]) }),
            None,
        )
        .unwrap();
        let back: CliConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CliConfig>(r#"{"kernel":{"kernel":"f","grid":[],"extra":1}}"#).is_err());
    }

    #[test]
    fn stochastic_commands_need_a_seed() {
        let args = SampleArgs { interval: IntervalKind::Unit, dim: 4, count: 1, what: SampleKind::Canonical };
        assert!(resolve(Command::Sample(args), None).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
