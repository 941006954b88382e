//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on
//! any failure. Every stochastic criterion uses seed 7.

use std::process::ExitCode;
use std::time::Instant;

use hml_core::experiments::{
    run_appendix_checks, run_clt_fixed_k, run_ldp_t1, run_oracle_suite, run_process_experiment, ExperimentConfig,
    ExperimentId, ExperimentReport,
};
use hml_core::hankel_det::{arcsine_centering, logdet_product};
use hml_core::ldp::{lambda_functional, lambda_t, Regime, RateValue, TestFunction};
use hml_core::oracle::certify_product_formula;
use hml_core::{CanonicalCoords, IntervalKind, SeedSpec};

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(id: ExperimentId) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(id, SeedSpec::new(SEED));
    c.workers = Some(1);
    c
}

fn stat_line(rep: &ExperimentReport, name: &str) -> (bool, String) {
    match rep.stat(name) {
        Some(s) => (s.pass, format!("{name}={:.5} (target {:.5})", s.estimate, s.target)),
        None => (false, format!("{name} missing")),
    }
}

fn ks_line(rep: &ExperimentReport, name: &str) -> (bool, String) {
    match rep.ks_record(name) {
        Some(k) => (k.pass, format!("{name} D={:.5} crit={:.5} p={:.3}", k.statistic, k.critical_value, k.p_value)),
        None => (false, format!("{name} missing")),
    }
}

fn collect(parts: Vec<(bool, String)>) -> Outcome {
    let pass = parts.iter().all(|p| p.0);
    let detail = parts
        .iter()
        .map(|(ok, s)| if *ok { s.clone() } else { format!("!{s}") })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn oracle_certification() -> Outcome {
    let start = Instant::now();
    let mut parts = vec![];
    for (i, interval) in [IntervalKind::Unit, IntervalKind::Halfline, IntervalKind::Realline].into_iter().enumerate() {
        match certify_product_formula(interval, 6, 50, SeedSpec::with_stream(SEED, i as u64)) {
            Ok(r) => parts.push((r.passed, format!("{interval}: {} determinant checks", r.determinant_checks))),
            Err(e) => parts.push((false, format!("{interval}: {e}"))),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    parts.push((secs < 30.0, format!("{secs:.2}s")));
    collect(parts)
}

fn arcsine_identity(oracle: &ExperimentReport) -> Outcome {
    let half = CanonicalCoords::new(IntervalKind::Unit, vec![0.5f64; 100]).unwrap();
    let worst = (1..=50)
        .map(|k| (logdet_product(&half, k).unwrap() - arcsine_centering::<f64>(k)).abs())
        .fold(0.0, f64::max);
    let mut parts = vec![(worst <= 1e-12, format!("max abs error {worst:.2e} for k <= 50"))];
    for name in ["unit_determinants[semicircle]", "unit_determinants[halfline_z_one]"] {
        let ok = oracle.check(name).is_some_and(|c| c.pass);
        parts.push((ok, name.to_string()));
    }
    collect(parts)
}

fn clt_k1() -> Outcome {
    let c = config(ExperimentId::CltFixedK);
    let start = Instant::now();
    let rep = match run_clt_fixed_k(&c) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    collect(vec![
        stat_line(&rep, "mean[1]"),
        stat_line(&rep, "cov[1,1]"),
        ks_line(&rep, "ks[1]"),
        (secs < 120.0, format!("{secs:.2}s single-threaded")),
    ])
}

fn clt_k3() -> Outcome {
    let mut c = config(ExperimentId::CltFixedK);
    c.k = 3;
    let rep = match run_clt_fixed_k(&c) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut parts = vec![];
    for i in 1..=3 {
        for j in i..=3 {
            parts.push(stat_line(&rep, &format!("cov[{i},{j}]")));
        }
    }
    collect(parts)
}

fn process_unit() -> Outcome {
    let rep = match run_process_experiment(&config(ExperimentId::ProcessUnit)) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let grid = ["0.2", "0.4", "0.6", "0.8"];
    let mut parts = vec![];
    for (i, s) in grid.iter().enumerate() {
        parts.push(stat_line(&rep, &format!("mean[t={s}]")));
        for t in &grid[i..] {
            parts.push(stat_line(&rep, &format!("cov[t={s},t={t}]")));
        }
    }
    collect(parts)
}

fn process_half_real() -> Outcome {
    let mut parts = vec![];
    for id in [ExperimentId::ProcessHalfline, ExperimentId::ProcessRealline] {
        match run_process_experiment(&config(id)) {
            Ok(rep) => {
                parts.push(stat_line(&rep, "mean[t=1]"));
                parts.push(stat_line(&rep, "cov[t=1,t=1]"));
            }
            Err(e) => parts.push((false, format!("{id}: {e}"))),
        }
    }
    collect(parts)
}

fn headline() -> Outcome {
    let mut c = config(ExperimentId::ProcessUnit);
    c.n = 2000;
    c.reps = 20_000;
    c.grid = vec![1.0];
    match run_process_experiment(&c) {
        Ok(rep) => collect(vec![ks_line(&rep, "ks[t=1]")]),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn ldp_duality(ldp: &ExperimentReport) -> Outcome {
    let mut parts: Vec<(bool, String)> = ["0.05", "0.1", "0.25", "0.5", "1", "2", "5"]
        .iter()
        .map(|x| {
            let name = format!("duality[x={x}]");
            match ldp.stat(&name) {
                Some(s) => (s.pass, format!("{name} err {:.1e}", (s.estimate - s.target).abs())),
                None => (false, format!("{name} missing")),
            }
        })
        .collect();
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        for lam in [-3.0, -1.0, -0.25, 0.5, 1.0, 1.5] {
            let f = TestFunction::indicator(t, lam).unwrap();
            let functional = lambda_functional(&f, 1e-12).unwrap().value.finite().unwrap_or(f64::NAN);
            let closed = lambda_t(t, lam).unwrap();
            worst = worst.max((functional - closed).abs());
        }
    }
    parts.push((worst <= 1e-8, format!("functional vs closed form max err {worst:.1e}")));
    collect(parts)
}

fn regime_of(c: f64) -> Regime {
    lambda_functional(&TestFunction::constant(c).unwrap(), 1e-10).unwrap().regime
}

fn ldp_regimes() -> Outcome {
    let scan = [-1.0, 0.0, 0.5, 1.0, 1.9, 1.999, 2.001, 2.1, 3.0, 10.0];
    let scan_ok = scan.iter().all(|&c| (regime_of(c) == Regime::Supercritical) == (c > 2.0));
    let (mut lo, mut hi) = (0.0, 4.0);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if regime_of(mid) == Regime::Supercritical {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let flip = 0.5 * (lo + hi);
    let boundary_ok = [2.0, 2.0 - 5e-10, 2.0 + 5e-10].iter().all(|&c| {
        let r = lambda_functional(&TestFunction::constant(c).unwrap(), 1e-10).unwrap();
        r.regime == Regime::Boundary && r.value == RateValue::Undefined
    });
    collect(vec![
        (scan_ok, "supercritical iff c > 2 on scan".into()),
        ((flip - 2.0).abs() <= 1e-3, format!("flip at {flip:.6}")),
        (boundary_ok, "boundary with no value for |c - 2| <= 5e-10".into()),
    ])
}

fn cumulant_trend(ldp: &ExperimentReport) -> Outcome {
    collect(
        ["-1", "0.5", "1"]
            .iter()
            .map(|lam| {
                let name = format!("cumulant[lambda={lam}]");
                match ldp.trend(&name) {
                    Some(t) => (t.pass, format!("{name} errors {:.4?}", t.errors)),
                    None => (false, format!("{name} missing")),
                }
            })
            .collect(),
    )
}

fn appendix() -> Outcome {
    let rep = match run_appendix_checks(&config(ExperimentId::AppendixChecks)) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut parts: Vec<(bool, String)> = rep
        .stats
        .iter()
        .filter(|s| s.name.starts_with("var_xi[") || s.name.contains("log_beta"))
        .map(|s| (s.pass, s.name.clone()))
        .collect();
    parts.push(stat_line(&rep, "var_xi_residual_exponent"));
    parts.push(stat_line(&rep, "n_var_beta(n=10000)"));
    collect(parts)
}

fn round_trips(oracle: &ExperimentReport) -> Outcome {
    let mut parts: Vec<(bool, String)> = ["unit", "halfline", "realline"]
        .iter()
        .map(|i| stat_line(oracle, &format!("roundtrip_max_rel[{i}]")))
        .collect();
    parts.push(stat_line(oracle, "charpoly_max_rel[n<=12]"));
    collect(parts)
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, label: &str, o: Outcome| {
        println!("{} criterion {id:>2} {label}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };

    let mut oc = config(ExperimentId::OracleSuite);
    oc.params.certification_trials = Some(1);
    let oracle = run_oracle_suite(&oc).expect("oracle suite");
    let ldp = {
        let mut c = config(ExperimentId::LdpT1);
        c.params.lambdas = Some(vec![-1.0, 0.5, 1.0]);
        run_ldp_t1(&c).expect("ldp run")
    };

    report(1, "oracle certification", oracle_certification());
    report(2, "arcsine identity", arcsine_identity(&oracle));
    report(3, "fixed-k CLT, k = 1", clt_k1());
    report(4, "fixed-k CLT, k = 3", clt_k3());
    report(5, "unit process", process_unit());
    report(6, "half-line and real-line", process_half_real());
    report(7, "headline KS", headline());
    report(8, "LDP duality", ldp_duality(&ldp));
    report(9, "LDP regimes", ldp_regimes());
    report(10, "cumulant trend", cumulant_trend(&ldp));
    report(11, "appendix", appendix());
    report(12, "round trips", round_trips(&oracle));

    if failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
