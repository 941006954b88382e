use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentId, ExperimentReport, StatRecord, TrendRecord};
use crate::error::{Error, Result};
use crate::ldp::{lambda_t, lambda_t_star, rate_t1_closed, z_n};
use crate::moment_space::{CanonicalCoords, IntervalKind};
use crate::sampling::unit_canonical_prefix;
use crate::specfun::log_beta;
use crate::stats::{log_mean_exp, mean, standard_error};

pub const DEFAULT_CUMULANT_LADDER: [usize; 3] = [50, 100, 200];
pub const DEFAULT_LAMBDAS: [f64; 4] = [-2.0, -1.0, 0.5, 1.0];
const DEFAULT_DUALITY_X: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0];

/// Coefficients `(c, e)` of coordinate `i` (1-based) in
/// `n Z_n(1) = -Σ_i (c_i log(4 p_i q_i) + e_i log(2 p_i))`.
fn coefficients(n: usize, i: usize) -> (f64, f64) {
    let j = i.div_ceil(2);
    if i % 2 == 1 { ((n - j + 1) as f64, 0.0) } else { ((n - j) as f64, 1.0) }
}

fn exponent(lam: f64, c: f64, e: f64, p: f64) -> f64 {
    -lam * (c * (4.0 * p * (1.0 - p)).ln() + e * (2.0 * p).ln())
}

/// Exact `(1/n) log E[exp(n λ Z_n(1))]` for a uniform vector on
/// `M_{2n}([0,1])`; `+∞` when the expectation diverges.
pub fn cumulant_exact(n: usize, lam: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let mut total = 0.0;
    for i in 1..=2 * n {
        let a = (2 * n - i + 1) as f64;
        let (c, e) = coefficients(n, i);
        let (s, u) = (-lam * (c + e), -lam * c);
        if a + s <= 0.0 || a + u <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total += -lam * c * 4f64.ln() - lam * e * 2f64.ln() + log_beta(a + s, a + u)? - log_beta(a, a)?;
    }
    Ok(total / n as f64)
}

struct CumulantEstimates {
    factorized: f64,
    naive: f64,
}

/// Per-coordinate Monte Carlo means multiplied across coordinates (the
/// canonical moments are independent), and the plain joint estimate.
fn cumulant_estimates(draws: &[Vec<f64>], n: usize, lam: f64) -> CumulantEstimates {
    let dim = 2 * n;
    let coef: Vec<(f64, f64)> = (1..=dim).map(|i| coefficients(n, i)).collect();
    let mut factorized = 0.0;
    let mut column = vec![0.0; draws.len()];
    for (i, &(c, e)) in coef.iter().enumerate() {
        for (slot, row) in column.iter_mut().zip(draws) {
            *slot = exponent(lam, c, e, row[i]);
        }
        factorized += log_mean_exp(&column);
    }
    let joint: Vec<f64> = draws
        .iter()
        .map(|row| row.iter().zip(&coef).map(|(&p, &(c, e))| exponent(lam, c, e, p)).sum())
        .collect();
    CumulantEstimates { factorized: factorized / n as f64, naive: log_mean_exp(&joint) / n as f64 }
}

/// Legendre duality at `t = 1`, convergence of the cumulant along an
/// `n`-ladder, and the law of large numbers `Z_n(1) → 1/2`.
pub fn run_ldp_t1(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment_id != ExperimentId::LdpT1 {
        return Err(Error::Config(format!("{} is not an LDP config", config.experiment_id)));
    }
    config.validate()?;
    let ladder = config.params.n_ladder.clone().unwrap_or_else(|| DEFAULT_CUMULANT_LADDER.to_vec());
    if ladder.len() < 2 || ladder.contains(&0) || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("n_ladder needs at least two increasing positive values".into()));
    }
    let lambdas = config.params.lambdas.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    if lambdas.iter().any(|l| !l.is_finite() || *l > 2.0) {
        return Err(Error::Config("lambdas must be finite and at most 2".into()));
    }
    let xs = config.params.duality_x.clone().unwrap_or_else(|| DEFAULT_DUALITY_X.to_vec());
    let mut report = ExperimentReport::new(config);

    let tol = config.tolerance("duality_abs");
    for &x in &xs {
        let numeric = lambda_t_star(1.0, x, 1e-13)?;
        report.stats.push(StatRecord::within_tol(format!("duality[x={x}]"), numeric, rate_t1_closed(x), 0.0, tol));
    }

    let mut estimates: Vec<Vec<CumulantEstimates>> = vec![];
    for (idx, &n) in ladder.iter().enumerate() {
        let seed = config.sub_seed(1 + idx as u64);
        let draws: Vec<Vec<f64>> = (0..config.reps)
            .into_par_iter()
            .map(|r| unit_canonical_prefix(&mut seed.replicate(r as u64).rng(), 2 * n, 2 * n))
            .collect();
        estimates.push(lambdas.iter().map(|&lam| cumulant_estimates(&draws, n, lam)).collect());
        let zero = cumulant_estimates(&draws, n, 0.0);
        report.stats.push(StatRecord::within_tol(format!("cumulant[lambda=0,n={n}]"), zero.factorized, 0.0, 0.0, 0.0));
    }
    let ladder_f: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    for (li, &lam) in lambdas.iter().enumerate() {
        let target = lambda_t(1.0, lam)?;
        let fact: Vec<f64> = estimates.iter().map(|e| e[li].factorized).collect();
        let naive: Vec<f64> = estimates.iter().map(|e| e[li].naive).collect();
        let exact: Vec<f64> = ladder.iter().map(|&n| cumulant_exact(n, lam)).collect::<Result<_>>()?;
        report.trends.push(TrendRecord::decreasing_error(format!("cumulant[lambda={lam}]"), ladder_f.clone(), fact, target));
        report.notes.push(format!(
            "lambda = {lam}: target {target:.6}; joint log-mean-exp {naive:?}; exact finite-n {exact:?}"
        ));
    }

    let n = config.n;
    let seed = config.sub_seed(1000);
    let zs: Vec<f64> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let coords = unit_canonical_prefix(&mut seed.replicate(r as u64).rng(), 2 * n, 2 * n);
            z_n(&CanonicalCoords::new(IntervalKind::Unit, coords)?, n, 1.0)
        })
        .collect::<Result<_>>()?;
    report.stats.push(
        StatRecord::within_tol(format!("lln_mean_z[n={n}]"), mean(&zs), 0.5, 0.0, config.tolerance("lln_abs"))
            .with_se(standard_error(&zs)),
    );
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::nu_n_weights;
    use crate::sampling::SeedSpec;

    #[test]
    fn coefficients_reproduce_z_n() {
        let n = 7;
        let coords = unit_canonical_prefix(&mut SeedSpec::new(2).rng(), 2 * n, 2 * n);
        let direct: f64 = (1..=2 * n).map(|i| {
            let (c, e) = coefficients(n, i);
            exponent(1.0, c, e, coords[i - 1])
        }).sum();
        let c = CanonicalCoords::new(IntervalKind::Unit, coords).unwrap();
        let z = z_n(&c, n, 1.0).unwrap();
        assert!((direct - n as f64 * z).abs() < 1e-10);
        let total: f64 = nu_n_weights(&c, n).unwrap().iter().map(|a| a.1).sum();
        assert!((total - z).abs() < 1e-12);
    }

    #[test]
    fn exact_cumulant_values() {
        assert_eq!(cumulant_exact(10, 0.0).unwrap(), 0.0);
        assert_eq!(cumulant_exact(10, 1.0).unwrap(), f64::INFINITY);
        let target = -(1.0f64 - 0.25).ln();
        let e50 = (cumulant_exact(50, 0.5).unwrap() - target).abs();
        let e200 = (cumulant_exact(200, 0.5).unwrap() - target).abs();
        assert!(e200 < e50);
        assert!(e200 < 0.01);
    }

    #[test]
    fn exact_cumulant_matches_monte_carlo() {
        let n = 5;
        let draws: Vec<Vec<f64>> =
            (0..200_000).map(|r| unit_canonical_prefix(&mut SeedSpec::new(8).replicate(r).rng(), 2 * n, 2 * n)).collect();
        let est = cumulant_estimates(&draws, n, -0.5);
        let exact = cumulant_exact(n, -0.5).unwrap();
        assert!((est.factorized - exact).abs() < 5e-3, "{} vs {exact}", est.factorized);
        assert!((est.naive - exact).abs() < 5e-3, "{} vs {exact}", est.naive);
    }

    #[test]
    fn small_run() {
        let mut c = ExperimentConfig::defaults(ExperimentId::LdpT1, SeedSpec::new(4));
        c.n = 50;
        c.reps = 500;
        c.params.n_ladder = Some(vec![10, 20]);
        c.params.lambdas = Some(vec![0.5]);
        let rep = run_ldp_t1(&c).unwrap();
        assert!(rep.stat("duality[x=1]").unwrap().pass);
        assert_eq!(rep.stat("cumulant[lambda=0,n=10]").unwrap().estimate, 0.0);
        assert_eq!(rep.trends.len(), 1);
        assert!((rep.stat("lln_mean_z[n=50]").unwrap().estimate - 0.5).abs() < 0.05);
        c.params.lambdas = Some(vec![2.5]);
        assert!(run_ldp_t1(&c).is_err());
    }
}
