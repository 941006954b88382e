use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{CheckRecord, ExperimentConfig, ExperimentId, ExperimentReport, StatRecord};
use crate::error::{Error, Result};
use crate::hankel_det::{arcsine_centering, det_product, logdet_product};
use crate::moment_space::{
    assemble_hankel, canonical_to_moments, moments_to_canonical, CanonicalCoords, IntervalKind,
};
use crate::oracle::{
    certify_product_formula, charpoly_dual_check, exact_canonical_to_moments, exact_det, int, random_exact_coords,
};
use crate::sampling::beta_hermite_matrix;
use crate::scalar::Field;
use crate::Rational;

const DEFAULT_TRIALS: usize = 50;
const DEFAULT_CHARPOLY_MAX_N: usize = 12;
const ARCSINE_K_MAX: usize = 50;
const INTERVALS: [IntervalKind; 3] = [IntervalKind::Unit, IntervalKind::Halfline, IntervalKind::Realline];

fn max_relative_error(a: &[Rational], b: &[Rational]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let diff = (x - y).abs();
            if diff.is_zero() {
                0.0
            } else if x.is_zero() {
                f64::INFINITY
            } else {
                (diff / x.abs()).to_f64_lossy()
            }
        })
        .fold(0.0, f64::max)
}

/// Exact certification of the product formulas, the arcsine and
/// reference-measure identities, exact round trips for dimensions up to
/// `config.n` (`config.reps` per interval), and the β-Hermite
/// characteristic polynomial computed two ways.
pub fn run_oracle_suite(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment_id != ExperimentId::OracleSuite {
        return Err(Error::Config(format!("{} is not an oracle config", config.experiment_id)));
    }
    config.validate()?;
    let trials = config.params.certification_trials.unwrap_or(DEFAULT_TRIALS);
    let charpoly_max_n = config.params.charpoly_max_n.unwrap_or(DEFAULT_CHARPOLY_MAX_N);
    let mut report = ExperimentReport::new(config);

    for (idx, &interval) in INTERVALS.iter().enumerate() {
        let cert = certify_product_formula(interval, config.k, trials, config.sub_seed(1 + idx as u64))?;
        let detail = match &cert.first_counterexample {
            None => format!(
                "{} determinant, {} moment-route and {} recursion checks, k <= {}, {} trials",
                cert.determinant_checks, cert.moment_route_checks, cert.recursion_checks, cert.k_max, cert.trials
            ),
            Some(c) => format!("counterexample: {c:?}"),
        };
        report.checks.push(CheckRecord { name: format!("certify[{interval}]"), detail, pass: cert.passed });
    }

    let half = CanonicalCoords::new(IntervalKind::Unit, vec![0.5f64; 2 * ARCSINE_K_MAX])?;
    let mut worst: f64 = 0.0;
    for k in 1..=ARCSINE_K_MAX {
        worst = worst.max((logdet_product(&half, k)? - arcsine_centering::<f64>(k)).abs());
    }
    report.stats.push(StatRecord::within_tol(
        format!("arcsine_identity_max_abs[k<={ARCSINE_K_MAX}]"),
        worst,
        0.0,
        0.0,
        config.tolerance("arcsine_abs"),
    ));

    let k_ref = config.k;
    let semicircle = CanonicalCoords::realline(vec![int(0); k_ref + 1], vec![int(1); k_ref])?;
    let z_one = CanonicalCoords::new(IntervalKind::Halfline, vec![int(1); 2 * k_ref])?;
    for (name, c) in [("semicircle", semicircle), ("halfline_z_one", z_one)] {
        let m = exact_canonical_to_moments(&c)?;
        let mut ok = true;
        for k in 1..=k_ref {
            ok &= det_product(&c, k)?.is_one() && exact_det(&assemble_hankel(&m, k)?).is_one();
        }
        report.checks.push(CheckRecord {
            name: format!("unit_determinants[{name}]"),
            detail: format!("det H_2k = 1 exactly for k <= {k_ref} (product and Bareiss)"),
            pass: ok,
        });
    }

    let mut rng = config.sub_seed(10).rng();
    for &interval in &INTERVALS {
        let mut worst: f64 = 0.0;
        for _ in 0..config.reps {
            let mut len = rng.random_range(1..=config.n);
            if interval == IntervalKind::Realline && len % 2 == 0 {
                len -= 1;
            }
            let c = random_exact_coords(&mut rng, interval, len);
            let back = moments_to_canonical(&canonical_to_moments(&c))?;
            worst = worst.max(max_relative_error(&c.coords, &back.coords));
        }
        report.stats.push(StatRecord::within_tol(
            format!("roundtrip_max_rel[{interval}]"),
            worst,
            0.0,
            0.0,
            config.tolerance("roundtrip_rel"),
        ));
    }
    report.notes.push(format!(
        "round trips run in exact rational arithmetic at dimensions 1..={}; f64 moments cannot resolve the \
         moment-space gaps at these dimensions",
        config.n
    ));

    let mut worst: f64 = 0.0;
    let mut exact_all = true;
    for n in 1..=charpoly_max_n {
        let j = beta_hermite_matrix(n, 2.0, config.sub_seed(100 + n as u64))?;
        let check = charpoly_dual_check(&j)?;
        worst = worst.max(check.max_relative_error);
        exact_all &= check.exact_match;
    }
    report.stats.push(StatRecord::within_tol(
        format!("charpoly_max_rel[n<={charpoly_max_n}]"),
        worst,
        0.0,
        0.0,
        config.tolerance("charpoly_rel"),
    ));
    report.checks.push(CheckRecord {
        name: "charpoly_exact_recurrence".into(),
        detail: format!("exact three-term recurrence equals exact dense expansion for n <= {charpoly_max_n}"),
        pass: exact_all,
    });
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeedSpec;

    #[test]
    fn small_suite_passes() {
        let mut c = ExperimentConfig::defaults(ExperimentId::OracleSuite, SeedSpec::new(7));
        c.n = 8;
        c.reps = 100;
        c.k = 3;
        c.params.certification_trials = Some(4);
        c.params.charpoly_max_n = Some(5);
        let rep = run_oracle_suite(&c).unwrap();
        assert!(rep.pass, "{:?}", rep.failures());
        assert_eq!(rep.checks.len(), 6);
    }

    #[test]
    fn relative_error_helper() {
        assert_eq!(max_relative_error(&[int(2)], &[int(2)]), 0.0);
        assert_eq!(max_relative_error(&[int(2)], &[int(3)]), 0.5);
        assert_eq!(max_relative_error(&[int(0)], &[int(1)]), f64::INFINITY);
    }
}
