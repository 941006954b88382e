use rayon::prelude::*;

use super::{mean_and_covariance, ExperimentConfig, ExperimentId, ExperimentReport, KsRecord, MeanRule};
use crate::error::{Error, Result};
use crate::hankel_det::{arcsine_centering, logdet_sequence};
use crate::limit_theory::sigma_fixed_k;
use crate::moment_space::{CanonicalCoords, IntervalKind};
use crate::sampling::unit_canonical_prefix;

/// `√(4n)(D_{2i} - D⁰_{2i})`, `i = 1..k`, for uniform vectors on
/// `M_{2n}([0,1])`. Only the first `2k` canonical moments are drawn.
pub fn run_clt_fixed_k(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment_id != ExperimentId::CltFixedK {
        return Err(Error::Config(format!("{} is not a fixed-k CLT config", config.experiment_id)));
    }
    config.validate()?;
    let (n, k) = (config.n, config.k);
    let scale = (4.0 * n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = config.seed.replicate(r as u64).rng();
            let c = CanonicalCoords::new(IntervalKind::Unit, unit_canonical_prefix(&mut rng, 2 * n, 2 * k))?;
            let d = logdet_sequence(&c, k)?;
            Ok((1..=k).map(|i| scale * (d[i] - arcsine_centering::<f64>(i))).collect())
        })
        .collect::<Result<_>>()?;

    let mut report = ExperimentReport::new(config);
    let sigma = sigma_fixed_k(k)?;
    let labels: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
    let cov_targets: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| sigma[(i, j)]).collect()).collect();
    mean_and_covariance(
        &mut report,
        &rows,
        &labels,
        &vec![0.0; k],
        &cov_targets,
        MeanRule::StandardErrors(config.tolerance("mean_se")),
        config.tolerance("cov_rel"),
        config.tolerance("cov_abs"),
        "sigma_k",
    );
    let alpha = config.tolerance("ks_alpha");
    for i in 0..k {
        let col: Vec<f64> = rows.iter().map(|row| row[i]).collect();
        report.ks.push(KsRecord::normal(format!("ks[{}]", i + 1), &col, 0.0, ((i + 1) as f64).sqrt(), alpha));
    }
    Ok(report.finish())
}
