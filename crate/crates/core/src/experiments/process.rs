use rayon::prelude::*;

use super::{mean_and_covariance, ExperimentConfig, ExperimentId, ExperimentReport, KsRecord, MeanRule};
use crate::error::{Error, Result};
use crate::hankel_det::grid_index;
use crate::limit_theory::{build_kernel_grid, process_steps, standardized_process, LimitSpec};
use crate::moment_space::{CanonicalCoords, IntervalKind};
use crate::sampling::{
    halfline_canonical_with, realline_canonical_with, unit_canonical_prefix, HalflineParams, ReallineParams,
    SamplerParams,
};

enum Sampler {
    Unit { dim: usize, len: usize },
    Halfline(HalflineParams),
    Realline(ReallineParams),
}

fn sampler_for(config: &ExperimentConfig, interval: IntervalKind) -> Result<Sampler> {
    let n = config.n;
    let given = config.params.sampler.clone();
    if let Some(p) = &given {
        if p.interval() != interval {
            return Err(Error::Config(format!("{} sampler parameters given for a {interval} experiment", p.interval())));
        }
    }
    Ok(match interval {
        IntervalKind::Unit => {
            let k_max = config.grid.iter().map(|&t| grid_index(n, t)).max().unwrap_or(0);
            Sampler::Unit { dim: 2 * n, len: 2 * k_max }
        }
        IntervalKind::Halfline => {
            let p = match given {
                Some(SamplerParams::Halfline(p)) => p,
                _ => HalflineParams::unit_mean(2 * n),
            };
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
            if p.n != 2 * n {
                return Err(Error::Config(format!("half-line sampler needs dimension 2n = {}, got {}", 2 * n, p.n)));
            }
            Sampler::Halfline(p)
        }
        IntervalKind::Realline => {
            let p = match given {
                Some(SamplerParams::Realline(p)) => p,
                _ => ReallineParams::unit_mean(n),
            };
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
            if p.n != n {
                return Err(Error::Config(format!("real-line sampler needs n = {n}, got {}", p.n)));
            }
            Sampler::Realline(p)
        }
    })
}

/// Standardized log-determinant paths on the config grid against the
/// limiting Gaussian process.
pub fn run_process_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let interval = match config.experiment_id {
        ExperimentId::ProcessUnit => IntervalKind::Unit,
        ExperimentId::ProcessHalfline => IntervalKind::Halfline,
        ExperimentId::ProcessRealline => IntervalKind::Realline,
        other => return Err(Error::Config(format!("{other} is not a process experiment"))),
    };
    config.validate()?;
    let n = config.n;
    let grid = &config.grid;
    let sampler = sampler_for(config, interval)?;
    let rows: Vec<Vec<f64>> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = config.seed.replicate(r as u64).rng();
            let coords = match &sampler {
                Sampler::Unit { dim, len } => unit_canonical_prefix(&mut rng, *dim, *len),
                Sampler::Halfline(p) => halfline_canonical_with(&mut rng, p),
                Sampler::Realline(p) => realline_canonical_with(&mut rng, p),
            };
            standardized_process(&CanonicalCoords::new(interval, coords)?, n, grid)
        })
        .collect::<Result<_>>()?;

    let spec = LimitSpec::for_interval(interval);
    let kg = build_kernel_grid(&spec, grid)?;
    let d = grid.len();
    let labels: Vec<String> = grid.iter().map(|t| format!("t={t}")).collect();
    let means: Vec<f64> = grid.iter().map(|&t| spec.mean(t)).collect::<Result<_>>()?;
    let cov: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| kg.gram[(i, j)]).collect()).collect();
    let mut report = ExperimentReport::new(config);
    let rule = match interval {
        IntervalKind::Unit => MeanRule::StandardErrors(config.tolerance("mean_se")),
        _ => MeanRule::Absolute(config.tolerance("mean_abs")),
    };
    mean_and_covariance(
        &mut report,
        &rows,
        &labels,
        &means,
        &cov,
        rule,
        config.tolerance("cov_rel"),
        config.tolerance("cov_abs"),
        "kernel",
    );
    let alpha = config.tolerance("ks_alpha");
    for j in 0..d {
        let sd = cov[j][j].sqrt();
        if sd > 0.0 {
            let col: Vec<f64> = rows.iter().map(|row| row[j]).collect();
            report.ks.push(KsRecord::normal(format!("ks[{}]", labels[j]), &col, means[j], sd, alpha));
        }
    }
    report.notes.push(format!(
        "{interval}: paths use k = floor({} t) steps; kernel jitter {}",
        process_steps(interval, n),
        kg.jitter
    ));
    Ok(report.finish())
}
