//! Large-deviation functionals for random moment sequences on `[0,1]`:
//! the random measure `ν_n`, the cumulant functional `Λ(f)` and its
//! threshold `K`, the fixed-`t` functions `Λ_t` and `Λ*_t`, and the
//! canonical-coordinate rate for fixed `k`.
//!
//! `Λ(f)` is finite only while `K = sup G(x)/(1-x) < 2`, where
//! `G(x) = ∫_x^1 f`. The case `K = 2` is open and is reported as
//! [`Regime::Boundary`] with no value.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel_det::{arcsine_centering, grid_index, logdet_sequence};
use crate::moment_space::{CanonicalCoords, IntervalKind};
use crate::quadrature::integrate;
use crate::sampling::{unit_canonical_prefix, SeedSpec};
use crate::stats::log_mean_exp;

/// Half-width of the band around `K = 2` reported as [`Regime::Boundary`].
pub const K_BOUNDARY_EPS: f64 = 1e-9;

const SUP_CHECK_POINTS: usize = 10_000;
const K_SCAN_POINTS: usize = 1_000;
const K_SCAN_END: f64 = 1.0 - 1e-6;

#[derive(Clone)]
enum Shape {
    Constant(f64),
    /// `values[i]` on `(breaks[i], breaks[i+1]]`, the first piece closed at 0.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A bounded test function on `[0,1]`.
#[derive(Clone)]
pub struct TestFunction {
    shape: Shape,
    sup_norm_bound: f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Constant(c) => write!(f, "TestFunction::Constant({c})"),
            Shape::Piecewise { breaks, values } => {
                write!(f, "TestFunction::Piecewise {{ breaks: {breaks:?}, values: {values:?} }}")
            }
            Shape::Custom(_) => write!(f, "TestFunction::Custom {{ sup_norm_bound: {} }}", self.sup_norm_bound),
        }
    }
}

/// JSON form of a piecewise-constant test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl TestFunction {
    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Parameter(format!("constant {c} is not finite")));
        }
        Ok(TestFunction { shape: Shape::Constant(c), sup_norm_bound: c.abs() })
    }

    /// `lam · 1[0, t]`.
    pub fn indicator(t: f64, lam: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("indicator endpoint {t} outside [0,1]")));
        }
        if t == 1.0 {
            return Self::constant(lam);
        }
        if t == 0.0 {
            return Self::constant(0.0);
        }
        Self::piecewise(vec![0.0, t, 1.0], vec![lam, 0.0])
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breaks.len() != values.len() + 1 {
            return Err(Error::Parameter(format!(
                "piecewise function needs one more break than values, got {} and {}",
                breaks.len(),
                values.len()
            )));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::Domain("breaks must start at 0 and end at 1".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("breaks must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("piecewise values must be finite".into()));
        }
        let sup_norm_bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(TestFunction { shape: Shape::Piecewise { breaks, values }, sup_norm_bound })
    }

    /// Arbitrary bounded function; `bound` is checked on a uniform grid.
    pub fn custom<F>(f: F, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for i in 0..SUP_CHECK_POINTS {
            let x = i as f64 / (SUP_CHECK_POINTS - 1) as f64;
            let v = f(x);
            if !v.is_finite() || v.abs() > bound {
                return Err(Error::Parameter(format!("|f({x})| = {} exceeds the stated bound {bound}", v.abs())));
            }
        }
        Ok(TestFunction { shape: Shape::Custom(Arc::new(f)), sup_norm_bound: bound })
    }

    pub fn sup_norm_bound(&self) -> f64 {
        self.sup_norm_bound
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Piecewise { breaks, values } => {
                let i = breaks[1..].partition_point(|&b| b < x).min(values.len() - 1);
                values[i]
            }
            Shape::Custom(f) => f(x),
        }
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        match &self.shape {
            Shape::Constant(v) => Self::constant(c * v),
            Shape::Piecewise { breaks, values } => {
                Self::piecewise(breaks.clone(), values.iter().map(|v| c * v).collect())
            }
            Shape::Custom(f) => {
                let f = Arc::clone(f);
                Ok(TestFunction {
                    shape: Shape::Custom(Arc::new(move |x| c * f(x))),
                    sup_norm_bound: c.abs() * self.sup_norm_bound,
                })
            }
        }
    }

    /// `G(x)/(1-x) = ∫_0^1 f(x + (1-x)u) du`, the mean of `f` over `[x,1]`;
    /// equals `f(1⁻)` at `x = 1`.
    ///
    /// Custom functions go through adaptive quadrature, which can step over
    /// a jump lying very close to `x`; use [`TestFunction::piecewise`] for
    /// step functions.
    pub fn tail_mean(&self, x: f64) -> Result<f64> {
        match &self.shape {
            Shape::Constant(c) => Ok(*c),
            Shape::Piecewise { breaks, values } => {
                if x >= 1.0 {
                    return Ok(*values.last().unwrap());
                }
                let mut g = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let lo = breaks[i].max(x);
                    if breaks[i + 1] > lo {
                        g += v * (breaks[i + 1] - lo);
                    }
                }
                Ok(g / (1.0 - x))
            }
            Shape::Custom(f) => {
                if x >= 1.0 {
                    return Ok(f(1.0 - 1e-12));
                }
                Ok(integrate(|u| f(x + (1.0 - x) * u), 0.0, 1.0, 1e-12, 1e-12)?.value)
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Piecewise { breaks, .. } => breaks.clone(),
            _ => vec![0.0, 1.0],
        }
    }

    /// `K = sup_{x ∈ [0,1)} G(x)/(1-x)`.
    ///
    /// Exact for constant and piecewise-constant functions. For custom
    /// functions a grid scan on `[0, 1 - 1e-6]` is refined by golden
    /// section and compared with `f(1⁻)`; narrow spikes between grid points
    /// can be missed.
    pub fn k_threshold(&self) -> Result<f64> {
        match &self.shape {
            Shape::Constant(c) => Ok(*c),
            Shape::Piecewise { breaks, values } => {
                // the tail mean is monotone on each piece
                let mut k = *values.last().unwrap();
                for &b in &breaks[..breaks.len() - 1] {
                    k = k.max(self.tail_mean(b)?);
                }
                Ok(k)
            }
            Shape::Custom(_) => {
                let xs: Vec<f64> =
                    (0..K_SCAN_POINTS).map(|i| K_SCAN_END * i as f64 / (K_SCAN_POINTS - 1) as f64).collect();
                let vals: Vec<f64> = xs.iter().map(|&x| self.tail_mean(x)).collect::<Result<_>>()?;
                let (imax, &vmax) =
                    vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty scan");
                let lo = xs[imax.saturating_sub(1)];
                let hi = xs[(imax + 1).min(xs.len() - 1)];
                let (_, refined) = golden_max(|x| self.tail_mean(x).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-12);
                Ok(vmax.max(refined).max(self.tail_mean(1.0)?))
            }
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `const:c`, `indicator:t`, `indicator:t:lam`, or a JSON object
    /// `{"breaks": [...], "values": [...]}`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {v:?} in test function: {e}")))
        };
        if s.starts_with('{') {
            let spec: PiecewiseSpec =
                serde_json::from_str(s).map_err(|e| Error::Config(format!("bad piecewise test function: {e}")))?;
            return Self::piecewise(spec.breaks, spec.values);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["const", c] => Self::constant(num(c)?),
            ["indicator", t] => Self::indicator(num(t)?, 1.0),
            ["indicator", t, lam] => Self::indicator(num(t)?, num(lam)?),
            _ => Err(Error::Config(format!(
                "unknown test function {s:?}; expected const:c, indicator:t[:lam] or a JSON piecewise spec"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Supercritical,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RateValue {
    Finite(f64),
    Infinite,
    /// No value exists in the theory (the `K = 2` case).
    Undefined,
}

impl RateValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            RateValue::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateValue::Finite(v) => write!(f, "{v}"),
            RateValue::Infinite => write!(f, "inf"),
            RateValue::Undefined => write!(f, "undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEval {
    pub value: RateValue,
    pub regime: Regime,
    pub k: f64,
}

pub fn classify_k(k: f64) -> Regime {
    if k < 2.0 - K_BOUNDARY_EPS {
        Regime::Subcritical
    } else if k > 2.0 + K_BOUNDARY_EPS {
        Regime::Supercritical
    } else {
        Regime::Boundary
    }
}

/// `Λ(f) = -∫_0^1 log(1 - G(x)/(2(1-x))) dx`.
pub fn lambda_functional(f: &TestFunction, quad_tol: f64) -> Result<RateEval> {
    let k = f.k_threshold()?;
    let regime = classify_k(k);
    let value = match regime {
        Regime::Supercritical => RateValue::Infinite,
        Regime::Boundary => RateValue::Undefined,
        Regime::Subcritical => {
            let integrand = |x: f64| -(-0.5 * f.tail_mean(x).unwrap_or(f64::NAN)).ln_1p();
            let mut total = 0.0;
            for w in f.breakpoints().windows(2) {
                total += integrate(integrand, w[0], w[1], quad_tol, quad_tol)?.value;
            }
            RateValue::Finite(total)
        }
    };
    Ok(RateEval { value, regime, k })
}

/// Mean of `log` along the segment between two nonnegative endpoints.
fn mean_log(a: f64, b: f64) -> f64 {
    let wb = a.max(b);
    if wb == 0.0 {
        return f64::NEG_INFINITY;
    }
    let eps = (a.min(b) - wb) / wb;
    let tail = if eps == -1.0 {
        -1.0
    } else if eps.abs() < 1e-4 {
        eps / 2.0 - eps * eps / 6.0 + eps.powi(3) / 12.0 - eps.powi(4) / 20.0
    } else {
        (1.0 + eps) * eps.ln_1p() / eps - 1.0
    };
    wb.ln() + tail
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("t = {t} outside (0,1]")))
    }
}

/// `Λ_t(λ) = -∫_0^t log(1 - λ(t-y)/(2(1-y))) dy`, `+∞` for `λ > 2/t`.
/// At `λ = 2/t` this is the limit from below.
pub fn lambda_t(t: f64, lam: f64) -> Result<f64> {
    check_t(t)?;
    if lam * t > 2.0 {
        return Ok(f64::INFINITY);
    }
    // both logs integrate a linear function of y from y = 0 to y = t
    let s = 1.0 - t;
    let v = -t * (mean_log(2.0 * s, 2.0 - lam * t) - mean_log(2.0 * s, 2.0));
    Ok(if v.is_nan() { f64::INFINITY } else { v })
}

/// Golden-section maximizer of a unimodal function on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let fa = f(a);
    let fb = f(b);
    [(a, fa), (c, fc), (d, fd), (b, fb)].into_iter().fold((a, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
}

/// `Λ*_t(x) = sup_{λ ≤ 2/t} (λx - Λ_t(λ))`; `+∞` for `x ≤ 0`.
pub fn lambda_t_star(t: f64, x: f64, tol: f64) -> Result<f64> {
    check_t(t)?;
    if x.is_nan() {
        return Err(Error::Domain("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let phi = |lam: f64| {
        let l = lambda_t(t, lam).unwrap_or(f64::INFINITY);
        if l.is_infinite() { f64::NEG_INFINITY } else { lam * x - l }
    };
    let upper = 2.0 / t;
    let mut lower = -1.0;
    while phi(lower) >= phi(0.5 * lower) {
        lower *= 2.0;
        if lower.abs() > 1e12 {
            return Err(Error::Bracket(format!("no finite maximizer below {lower} for t = {t}, x = {x}")));
        }
    }
    let (_, best) = golden_max(phi, lower, upper, tol.max(1e-15));
    Ok(best)
}

/// `I(x) = 2x - 1 - log(2x)` for `x > 0`, `+∞` otherwise.
pub fn rate_t1_closed(x: f64) -> f64 {
    if x > 0.0 { 2.0 * x - 1.0 - (2.0 * x).ln() } else { f64::INFINITY }
}

/// `I(x) = 2 Σ (-log(x_i - x_i²) - log 4)` on `(0,1)^{2k}`, `+∞` elsewhere.
pub fn rate_fixed_k_canonical(x: &[f64]) -> Result<f64> {
    if x.is_empty() || x.len() % 2 != 0 {
        return Err(Error::Parameter(format!("need an even, nonzero number of coordinates, got {}", x.len())));
    }
    if x.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * x.iter().map(|&v| -(v * (1.0 - v)).ln() - 4f64.ln()).sum::<f64>())
}

fn unit_prefix(c: &CanonicalCoords<f64>, n: usize) -> Result<&[f64]> {
    if c.interval != IntervalKind::Unit {
        return Err(Error::Unsupported(format!("the measure ν_n is defined for [0,1], got {}", c.interval)));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if c.coords.len() < 2 * n {
        return Err(Error::Length { needed: 2 * n, available: c.coords.len() });
    }
    Ok(&c.coords[..2 * n])
}

/// Atoms `(i/n, w_i)` of `ν_n`.
pub fn nu_n_weights(c: &CanonicalCoords<f64>, n: usize) -> Result<Vec<(f64, f64)>> {
    let p = unit_prefix(c, n)?;
    let l4 = 4f64.ln();
    let nf = n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    let mut atoms = Vec::with_capacity(n);
    for i in 1..=n {
        let po = p[2 * i - 2];
        odd += l4 + (po * (1.0 - po)).ln();
        let pe = p[2 * i - 1];
        let bracket = odd + even + (2.0 * pe).ln();
        atoms.push((i as f64 / nf, -bracket / nf));
        even += l4 + (pe * (1.0 - pe)).ln();
    }
    Ok(atoms)
}

/// `ν_n(f) = Σ w_i f(i/n)`.
pub fn nu_n_apply(atoms: &[(f64, f64)], f: &TestFunction) -> f64 {
    atoms.iter().map(|&(t, w)| w * f.eval(t)).sum()
}

/// `Z_n(t) = -(1/n)(D_{2⌊nt⌋} - D⁰_{2⌊nt⌋})`.
pub fn z_n(c: &CanonicalCoords<f64>, n: usize, t: f64) -> Result<f64> {
    unit_prefix(c, n)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0,1]")));
    }
    let k = grid_index(n, t);
    let d = logdet_sequence(c, k)?;
    Ok(-(d[k] - arcsine_centering::<f64>(k)) / n as f64)
}

/// Monte Carlo estimate of `(1/n) log E[exp(n ν_n(f))]` with `reps`
/// independent uniform moment vectors of dimension `2n`.
pub fn monte_carlo_cumulant(f: &TestFunction, n: usize, reps: usize, seed: SeedSpec) -> Result<f64> {
    if n == 0 || reps == 0 {
        return Err(Error::Parameter("n and reps must be at least 1".into()));
    }
    let exps: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.replicate(r as u64).rng();
            let coords = unit_canonical_prefix(&mut rng, 2 * n, 2 * n);
            let c = CanonicalCoords::new(IntervalKind::Unit, coords)?;
            Ok(n as f64 * nu_n_apply(&nu_n_weights(&c, n)?, f))
        })
        .collect::<Result<_>>()?;
    Ok(log_mean_exp(&exps) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_theory::r;
    use proptest::prelude::*;
    use rand::Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn lambda_functional_examples() {
        let one = lambda_functional(&TestFunction::constant(1.0).unwrap(), 1e-12).unwrap();
        assert_eq!(one.regime, Regime::Subcritical);
        assert_eq!(one.k, 1.0);
        assert!((one.value.finite().unwrap() - LN2).abs() < 1e-12);
        let zero = lambda_functional(&TestFunction::constant(0.0).unwrap(), 1e-12).unwrap();
        assert_eq!(zero.value, RateValue::Finite(0.0));
        let three = lambda_functional(&TestFunction::constant(3.0).unwrap(), 1e-12).unwrap();
        assert_eq!((three.value, three.regime), (RateValue::Infinite, Regime::Supercritical));
        let two = lambda_functional(&TestFunction::constant(2.0).unwrap(), 1e-12).unwrap();
        assert_eq!((two.value, two.regime), (RateValue::Undefined, Regime::Boundary));
    }

    #[test]
    fn lambda_t_examples() {
        assert_eq!(lambda_t(0.4, 0.0).unwrap(), 0.0);
        assert!((lambda_t(1.0, 1.0).unwrap() - LN2).abs() < 1e-15);
        for lam in [-5.0, -1.0, 0.3, 1.5, 1.99] {
            let expect = -(1.0f64 - lam / 2.0).ln();
            assert!((lambda_t(1.0, lam).unwrap() - expect).abs() < 1e-13, "lam = {lam}");
        }
        assert_eq!(lambda_t(1.0, 2.0).unwrap(), f64::INFINITY);
        assert_eq!(lambda_t(0.5, 4.1).unwrap(), f64::INFINITY);
        assert!(lambda_t(0.5, 4.0).unwrap().is_finite());
        assert!(lambda_t(0.0, 1.0).is_err());
    }

    #[test]
    fn lambda_t_matches_quadrature() {
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            for &lam in &[-10.0, -1.0, 0.2, 1.0, 1.9 / t] {
                let q = integrate(|y| -(-lam * (t - y) / (2.0 * (1.0 - y))).ln_1p(), 0.0, t, 1e-14, 1e-14).unwrap();
                let closed = lambda_t(t, lam).unwrap();
                assert!((closed - q.value).abs() < 1e-10, "t={t} lam={lam}: {closed} vs {}", q.value);
            }
        }
    }

    #[test]
    fn lambda_t_left_limit_at_critical() {
        let t = 0.6;
        let at = lambda_t(t, 2.0 / t).unwrap();
        let below = lambda_t(t, 2.0 / t - 1e-9).unwrap();
        assert!((at - below).abs() < 1e-6);
    }

    #[test]
    fn star_examples() {
        assert!(lambda_t_star(1.0, 0.5, 1e-12).unwrap().abs() < 1e-10);
        assert!((lambda_t_star(1.0, 1.0, 1e-12).unwrap() - (1.0 - LN2)).abs() < 1e-9);
        for x in [0.1, 0.25, 2.0, 3.0] {
            let num = lambda_t_star(1.0, x, 1e-12).unwrap();
            assert!((num - rate_t1_closed(x)).abs() < 1e-6, "x = {x}");
        }
        assert_eq!(lambda_t_star(0.5, 0.0, 1e-12).unwrap(), f64::INFINITY);
        assert_eq!(lambda_t_star(0.5, -0.3, 1e-12).unwrap(), f64::INFINITY);
    }

    #[test]
    fn legendre_duality_at_one() {
        let mut x = 0.05;
        while x <= 5.0 {
            let num = lambda_t_star(1.0, x, 1e-12).unwrap();
            assert!((num - rate_t1_closed(x)).abs() < 1e-6, "x = {x}");
            x += 0.05;
        }
    }

    #[test]
    fn star_vanishes_at_law_of_large_numbers() {
        for t in [0.2, 0.5, 0.9] {
            let centre = r(t).unwrap() / 2.0;
            let at = lambda_t_star(t, centre, 1e-12).unwrap();
            assert!(at.abs() < 1e-9, "t = {t}: {at}");
            assert!(lambda_t_star(t, 1.2 * centre, 1e-12).unwrap() > 1e-6);
            assert!(lambda_t_star(t, 0.8 * centre, 1e-12).unwrap() > 1e-6);
        }
    }

    #[test]
    fn convexity() {
        for t in [0.25, 0.5, 1.0] {
            let h = 0.01;
            let lams: Vec<f64> = (0..300).map(|i| -3.0 + i as f64 * h).filter(|l| l + h < 2.0 / t).collect();
            for &l in &lams {
                let d2 = lambda_t(t, l + h).unwrap() - 2.0 * lambda_t(t, l).unwrap() + lambda_t(t, l - h).unwrap();
                assert!(d2 >= -1e-8, "t={t} lam={l}");
            }
            let xs: Vec<f64> = (1..60).map(|i| i as f64 * 0.05).collect();
            let vals: Vec<f64> = xs.iter().map(|&x| lambda_t_star(t, x, 1e-12).unwrap()).collect();
            for w in vals.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-7);
            }
            assert!(vals.iter().all(|&v| v >= -1e-10));
        }
    }

    #[test]
    fn functional_agrees_with_lambda_t() {
        for &t in &[0.1, 0.3, 0.5, 0.8, 1.0] {
            for &frac in &[-2.0, -0.5, 0.1, 0.5, 0.9, 0.99] {
                let lam = frac * 2.0 / t;
                let f = TestFunction::indicator(t, lam).unwrap();
                let eval = lambda_functional(&f, 1e-12).unwrap();
                let v = eval.value.finite().unwrap();
                assert!((v - lambda_t(t, lam).unwrap()).abs() < 1e-8, "t={t} lam={lam}");
            }
        }
    }

    #[test]
    fn custom_smooth_function() {
        // f(x) = x: tail mean (1 + x)/2, K = f(1) = 1
        let f = TestFunction::custom(|x| x, 1.0).unwrap();
        let eval = lambda_functional(&f, 1e-11).unwrap();
        assert!((eval.k - 1.0).abs() < 1e-6);
        let expect = integrate(|x| -((3.0 - x) / 4.0).ln(), 0.0, 1.0, 1e-14, 1e-14).unwrap().value;
        assert!((eval.value.finite().unwrap() - expect).abs() < 1e-10);
        let smooth = TestFunction::custom(|x| 1.0 + x, 2.0).unwrap();
        assert_eq!(lambda_functional(&smooth, 1e-10).unwrap().regime, Regime::Boundary);
        assert!(TestFunction::custom(|x| 3.0 * x, 1.0).is_err());
    }

    #[test]
    fn custom_step_function_close_to_piecewise() {
        let pw = TestFunction::piecewise(vec![0.0, 0.3, 0.7, 1.0], vec![1.0, -0.5, 1.5]).unwrap();
        let pw2 = pw.clone();
        let custom = TestFunction::custom(move |x| pw2.eval(x), 1.5).unwrap();
        let a = lambda_functional(&pw, 1e-12).unwrap();
        let b = lambda_functional(&custom, 1e-8).unwrap();
        assert!((a.k - 1.5).abs() < 1e-12);
        assert!((b.k - 1.5).abs() < 1e-6);
        assert!((a.value.finite().unwrap() - b.value.finite().unwrap()).abs() < 1e-5);
    }

    #[test]
    fn threshold_scaling() {
        let f = TestFunction::piecewise(vec![0.0, 0.2, 0.6, 1.0], vec![0.4, 1.3, 0.9]).unwrap();
        let kf = f.k_threshold().unwrap();
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if lambda_functional(&f.scaled(mid).unwrap(), 1e-8).unwrap().regime == Regime::Supercritical {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((hi - 2.0 / kf).abs() < 1e-3);
    }

    #[test]
    fn parse_test_functions() {
        assert_eq!(TestFunction::from_str("const:1.5").unwrap().eval(0.3), 1.5);
        let ind = TestFunction::from_str("indicator:0.4").unwrap();
        assert_eq!((ind.eval(0.2), ind.eval(0.5)), (1.0, 0.0));
        let ind = TestFunction::from_str("indicator:0.4:2").unwrap();
        assert_eq!(ind.eval(0.4), 2.0);
        assert_eq!(ind.eval(0.41), 0.0);
        let pw = TestFunction::from_str(r#"{"breaks":[0,0.5,1],"values":[1,3]}"#).unwrap();
        assert_eq!((pw.eval(0.0), pw.eval(0.5), pw.eval(0.51), pw.eval(1.0)), (1.0, 1.0, 3.0, 3.0));
        assert!(TestFunction::from_str("sine:2").is_err());
        assert!(TestFunction::from_str(r#"{"breaks":[0,1],"values":[1,3]}"#).is_err());
        assert!(TestFunction::piecewise(vec![0.0, 0.5, 0.5, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn closed_rates() {
        assert_eq!(rate_t1_closed(0.5), 0.0);
        assert!((rate_t1_closed(1.0) - (1.0 - LN2)).abs() < 1e-15);
        assert_eq!(rate_t1_closed(-1.0), f64::INFINITY);
        assert_eq!(rate_t1_closed(0.0), f64::INFINITY);
        assert!(rate_fixed_k_canonical(&[0.5; 6]).unwrap().abs() < 1e-15);
        let v = rate_fixed_k_canonical(&[0.5, 0.25]).unwrap();
        assert!((v - 2.0 * (4.0f64 / 3.0).ln()).abs() < 1e-14);
        assert!((v - 0.575_364_144_903_562).abs() < 1e-12);
        assert_eq!(rate_fixed_k_canonical(&[0.0, 0.5]).unwrap(), f64::INFINITY);
        assert!(rate_fixed_k_canonical(&[1e-300, 0.5]).unwrap() > 1e3);
        assert!(rate_fixed_k_canonical(&[0.5]).is_err());
    }

    #[test]
    fn nu_n_examples() {
        let c = CanonicalCoords::new(IntervalKind::Unit, vec![0.5; 20]).unwrap();
        assert!(nu_n_weights(&c, 10).unwrap().iter().all(|&(_, w)| w.abs() < 1e-15));
        let c = CanonicalCoords::new(IntervalKind::Unit, vec![0.3, 0.8]).unwrap();
        let atoms = nu_n_weights(&c, 1).unwrap();
        let expect = -((4.0f64 * 0.7 * 0.3).ln() + 1.6f64.ln());
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].0, 1.0);
        assert!((atoms[0].1 - expect).abs() < 1e-15);
        assert!(nu_n_weights(&c, 2).is_err());
        let h = CanonicalCoords::new(IntervalKind::Halfline, vec![1.0, 2.0]).unwrap();
        assert!(nu_n_weights(&h, 1).is_err());
    }

    #[test]
    fn nu_n_cumsum_is_z_n() {
        let mut rng = SeedSpec::new(12).rng();
        for _ in 0..20 {
            let n = 10;
            let coords: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.02..0.98)).collect();
            let c = CanonicalCoords::new(IntervalKind::Unit, coords).unwrap();
            let atoms = nu_n_weights(&c, n).unwrap();
            let mut cum = 0.0;
            for (i, &(t, w)) in atoms.iter().enumerate() {
                cum += w;
                let z = z_n(&c, n, t).unwrap();
                assert!((cum - z).abs() < 1e-10, "i = {i}");
                let ind = TestFunction::indicator(t, 1.0).unwrap();
                assert!((nu_n_apply(&atoms, &ind) - z).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monte_carlo_cumulant_trends_to_lambda() {
        // f ≡ 1/2: exact finite-n values tend to Λ = -log(3/4)
        let f = TestFunction::constant(0.5).unwrap();
        let target = lambda_functional(&f, 1e-12).unwrap().value.finite().unwrap();
        let est = monte_carlo_cumulant(&f, 20, 20_000, SeedSpec::new(9)).unwrap();
        assert!((est - target).abs() < 0.05, "{est} vs {target}");
    }

    proptest! {
        #[test]
        fn piecewise_k_dominates_scan(values in prop::collection::vec(-3.0f64..3.0, 1..6)) {
            let m = values.len();
            let breaks: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
            let f = TestFunction::piecewise(breaks, values).unwrap();
            let k = f.k_threshold().unwrap();
            for i in 0..200 {
                let x = i as f64 / 200.0;
                prop_assert!(f.tail_mean(x).unwrap() <= k + 1e-12);
            }
        }

        #[test]
        fn star_nonnegative(t in 0.05f64..1.0, x in 0.01f64..4.0) {
            prop_assert!(lambda_t_star(t, x, 1e-12).unwrap() >= -1e-10);
        }
    }
}
