use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentId, ExperimentReport, StatRecord};
use crate::error::{Error, Result};
use crate::sampling::{beta_draw, SeedSpec};
use crate::specfun::{beta_log_moments, trigamma};
use crate::stats::{linear_fit, mean, variance};

/// Default `n - i + 1` values for the `ξ̃` variance ladder.
pub const DEFAULT_XI_LADDER: [usize; 6] = [5, 10, 20, 50, 100, 200];

const DEFAULT_AUX_REPS: usize = 100_000;

/// `Var(log(p q))` for `p ~ Beta(a, a)`.
fn var_log_pq(a: f64) -> Result<f64> {
    Ok(2.0 * trigamma(a)? - 4.0 * trigamma(2.0 * a)?)
}

/// Exact `Var(ξ̃)` with `m = n - i + 1`: the two canonical moments are
/// `Beta(2m, 2m)` and `Beta(2m - 1, 2m - 1)`.
pub fn xi_variance_exact(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Parameter("m must be at least 1".into()));
    }
    Ok(var_log_pq(2.0 * m as f64)? + var_log_pq(2.0 * m as f64 - 1.0)?)
}

/// Sample variance and its standard error `sqrt((μ₄ - s⁴)/R)`.
fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let v = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
    (v, ((m4 - v * v).max(0.0) / xs.len() as f64).sqrt())
}

fn draws(reps: usize, seed: SeedSpec, f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync) -> Vec<f64> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.replicate(r as u64).rng();
            f(&mut rng)
        })
        .collect()
}

/// Appendix checks: the `ξ̃` variance ladder and its residual decay,
/// exact log-Beta moments against Monte Carlo, and `n Var(X) → 1/8` for
/// `X ~ Beta(n, n)` (with `n = config.n`).
pub fn run_appendix_checks(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment_id != ExperimentId::AppendixChecks {
        return Err(Error::Config(format!("{} is not an appendix config", config.experiment_id)));
    }
    config.validate()?;
    let ladder = config.params.xi_ladder.clone().unwrap_or_else(|| DEFAULT_XI_LADDER.to_vec());
    if ladder.len() < 2 || ladder.contains(&0) {
        return Err(Error::Config("xi_ladder needs at least two positive values".into()));
    }
    let aux_reps = config.params.aux_reps.unwrap_or(DEFAULT_AUX_REPS);
    if aux_reps < 100 {
        return Err(Error::Config("aux_reps must be at least 100".into()));
    }
    let k_se = config.tolerance("mean_se");
    let mut report = ExperimentReport::new(config);

    let mut log_m = vec![];
    let mut log_resid = vec![];
    let mut exact_resid = vec![];
    for (idx, &m) in ladder.iter().enumerate() {
        let a1 = 2.0 * m as f64;
        let a2 = a1 - 1.0;
        let xs = draws(config.reps, config.sub_seed(1 + idx as u64), |rng| {
            let p1 = beta_draw(rng, a1, a1);
            let p2 = beta_draw(rng, a2, a2);
            (p2 * (1.0 - p2)).ln() + (p1 * (1.0 - p1)).ln()
        });
        let (v, se) = variance_with_se(&xs);
        let exact = xi_variance_exact(m)?;
        let leading = 1.0 / (4.0 * (m * m) as f64);
        report.stats.push(StatRecord::within_se(format!("var_xi[m={m}]"), v, exact, se, k_se));
        report.notes.push(format!(
            "m = {m}: Var(xi) MC {v:.6e} (SE {se:.2e}), exact {exact:.6e}, leading term 1/(4m^2) = {leading:.6e}"
        ));
        log_m.push((m as f64).ln());
        log_resid.push((v - leading).abs().ln());
        exact_resid.push((exact - leading).abs().ln());
    }
    let (slope, _) = linear_fit(&log_m, &log_resid);
    let (exact_slope, _) = linear_fit(&log_m, &exact_resid);
    report.stats.push(StatRecord::at_least("var_xi_residual_exponent", -slope, config.tolerance("decay_exponent_min")));
    report.notes.push(format!("residual decay exponent: Monte Carlo {:.3}, exact {:.3}", -slope, -exact_slope));

    // log-Beta moments: X ~ Beta(5, 3)
    let xs = draws(aux_reps, config.sub_seed(100), |rng| beta_draw(rng, 5.0, 3.0).ln());
    let (mean_exact, var_exact) = beta_log_moments(5.0, 3.0)?;
    let m = mean(&xs);
    let (v, se) = variance_with_se(&xs);
    report.stats.push(StatRecord::within_se(
        "mean_log_beta(5,3)",
        m,
        mean_exact,
        (variance(&xs) / xs.len() as f64).sqrt(),
        k_se,
    ));
    report.stats.push(StatRecord::within_se("var_log_beta(5,3)", v, var_exact, se, k_se));

    // n Var(X), X ~ Beta(n, n)
    let n = config.n as f64;
    let xs = draws(aux_reps, config.sub_seed(200), |rng| beta_draw(rng, n, n));
    let (v, se) = variance_with_se(&xs);
    report.stats.push(
        StatRecord::within_tol(format!("n_var_beta(n={})", config.n), n * v, 0.125, config.tolerance("scaling_rel"), 0.0)
            .with_se(n * se),
    );
    report.notes.push(format!("exact n Var(X) = n / (4 (2n + 1)) = {:.6}", n / (4.0 * (2.0 * n + 1.0))));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_xi_variance_leading_term() {
        let v = xi_variance_exact(100).unwrap();
        assert!((v - 2.5e-5).abs() < 2e-7);
        assert!((v - 2.518_891_687_058e-5).abs() < 1e-15);
        assert!(xi_variance_exact(0).is_err());
    }

    #[test]
    fn small_run() {
        let mut c = ExperimentConfig::defaults(ExperimentId::AppendixChecks, SeedSpec::new(3));
        c.reps = 20_000;
        c.params.xi_ladder = Some(vec![5, 10, 20]);
        c.params.aux_reps = Some(20_000);
        let rep = run_appendix_checks(&c).unwrap();
        for name in ["var_xi[m=5]", "var_xi[m=10]", "mean_log_beta(5,3)", "var_log_beta(5,3)"] {
            assert!(rep.stat(name).unwrap().pass, "{name}");
        }
        let s = rep.stat("n_var_beta(n=10000)").unwrap();
        assert!((s.estimate - 0.125).abs() < 0.01);
        assert!(rep.stat("var_xi_residual_exponent").is_some());
    }

    #[test]
    fn ladder_validation() {
        let mut c = ExperimentConfig::defaults(ExperimentId::AppendixChecks, SeedSpec::new(3));
        c.params.xi_ladder = Some(vec![5]);
        assert!(run_appendix_checks(&c).is_err());
    }
}
