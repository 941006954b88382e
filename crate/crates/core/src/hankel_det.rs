//! Hankel log-determinants `log det H_{2k}`, computed directly from a
//! factorization of the moment matrix or from canonical coordinates.
//!
//! With the recurrence coefficients `beta_j` of [`canonical_to_jacobi`],
//! all three intervals share
//!
//! ```text
//! det H_{2k} = prod_{j=1}^{k} beta_j^{k-j+1}
//! ```
//!
//! where `beta_j = q_{2j-2} p_{2j-1} q_{2j-1} p_{2j}` on `[0,1]`,
//! `z_{2j-1} z_{2j}` on `[0,∞)` and `a_j` on `ℝ`.
//!
//! [`canonical_to_jacobi`]: crate::moment_space::canonical_to_jacobi

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment_space::{assemble_hankel, ldl_pivots, CanonicalCoords, IntervalKind, MomentVector};
use crate::oracle::ln_rational;
use crate::scalar::{Field, Real};
use crate::Rational;
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogDetMethod {
    Direct,
    Product,
}

/// `values[k] = log det H_{2k}` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelLogDet<T> {
    pub interval: IntervalKind,
    pub values: Vec<T>,
    pub method: LogDetMethod,
}

impl<T: Real> HankelLogDet<T> {
    pub fn direct(m: &MomentVector<T>, k_max: usize) -> Result<Self> {
        let values = (0..=k_max).map(|k| logdet_direct(m, k)).collect::<Result<Vec<_>>>()?;
        Ok(HankelLogDet { interval: m.interval, values, method: LogDetMethod::Direct })
    }

    pub fn product(c: &CanonicalCoords<T>, k_max: usize) -> Result<Self> {
        check_length(c, k_max)?;
        let layers = layer_logs(c, k_max);
        let mut values = Vec::with_capacity(k_max + 1);
        let mut d = CompensatedSum::new();
        let mut s = CompensatedSum::new();
        values.push(d.value());
        for l in layers {
            s.add(l);
            d.add(s.sum);
            d.add(s.carry);
            values.push(d.value());
        }
        Ok(HankelLogDet { interval: c.interval, values, method: LogDetMethod::Product })
    }
}

/// Neumaier summation; keeps `D_{2k}` accurate to a few ulps at `k = 50`.
struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    fn new() -> Self {
        CompensatedSum { sum: T::zero(), carry: T::zero() }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

fn check_length<T>(c: &CanonicalCoords<T>, k: usize) -> Result<()> {
    if c.coords.len() < 2 * k {
        let needed = match c.interval {
            IntervalKind::Realline => 2 * k + 1,
            _ => 2 * k,
        };
        return Err(Error::Length { needed, available: c.coords.len() });
    }
    Ok(())
}

/// `log beta_j` for `j = 1..=k`, each as a sum of logarithms of the
/// underlying coordinates.
fn layer_logs<T: Real>(c: &CanonicalCoords<T>, k: usize) -> Vec<T> {
    let x = &c.coords;
    (1..=k)
        .map(|j| match c.interval {
            IntervalKind::Unit => {
                let (p1, p2) = (x[2 * j - 2], x[2 * j - 1]);
                let mut l = p1.ln() + (T::one() - p1).ln() + p2.ln();
                if j >= 2 {
                    l = l + (T::one() - x[2 * j - 3]).ln();
                }
                l
            }
            IntervalKind::Halfline => x[2 * j - 2].ln() + x[2 * j - 1].ln(),
            IntervalKind::Realline => x[2 * j - 1].ln(),
        })
        .collect()
}

/// `beta_j` for `j = 1..=k` in exact arithmetic.
fn layer_factors<T: Field>(c: &CanonicalCoords<T>, k: usize) -> Vec<T> {
    let x = &c.coords;
    (1..=k)
        .map(|j| match c.interval {
            IntervalKind::Unit => {
                let (p1, p2) = (x[2 * j - 2].clone(), x[2 * j - 1].clone());
                let q0 = if j >= 2 { T::one() - x[2 * j - 3].clone() } else { T::one() };
                q0 * p1.clone() * (T::one() - p1) * p2
            }
            IntervalKind::Halfline => x[2 * j - 2].clone() * x[2 * j - 1].clone(),
            IntervalKind::Realline => x[2 * j - 1].clone(),
        })
        .collect()
}

/// Product formula for `det H_{2k}` without logarithms; exact for rationals.
pub fn det_product<T: Field>(c: &CanonicalCoords<T>, k: usize) -> Result<T> {
    check_length(c, k)?;
    let mut det = T::one();
    for (j, f) in layer_factors(c, k).into_iter().enumerate() {
        for _ in 0..(k - j) {
            det = det * f.clone();
        }
    }
    Ok(det)
}

pub fn logdet_product<T: Real>(c: &CanonicalCoords<T>, k: usize) -> Result<T> {
    Ok(HankelLogDet::product(c, k)?.values[k])
}

/// Sum of log pivots of an `LDLᵀ` factorization of `H_{2k}`.
pub fn logdet_direct<T: Real>(m: &MomentVector<T>, k: usize) -> Result<T> {
    let h = assemble_hankel(m, k)?;
    let pivots = ldl_pivots(&h);
    let mut acc = T::zero();
    for (index, p) in pivots.iter().enumerate() {
        if *p <= T::zero() || !p.is_finite() {
            return Err(Error::NonpositivePivot { index, value: p.to_f64_lossy() });
        }
        acc = acc + p.ln();
    }
    Ok(acc)
}

/// [`logdet_direct`] with exact pivots; only the final logarithms round.
/// Use it where the Hankel matrix is too ill-conditioned for floating-point
/// elimination (on `[0,1]` the condition number grows like `16^k`).
pub fn logdet_direct_exact(m: &MomentVector<Rational>, k: usize) -> Result<f64> {
    let h = assemble_hankel(m, k)?;
    let mut acc = 0.0;
    for (index, p) in ldl_pivots(&h).iter().enumerate() {
        if *p <= Rational::zero() {
            return Err(Error::NonpositivePivot { index, value: p.to_f64_lossy() });
        }
        acc += ln_rational(p);
    }
    Ok(acc)
}

/// `D⁰_{2k} = -k(2k+1) log 2`, the log-determinant at the arcsine law.
pub fn arcsine_centering<T: Real>(k: usize) -> T {
    let k = T::from_usize(k).expect("small integer");
    -(k * (T::lit(2.0) * k + T::one())) * T::LN_2()
}

/// Reference centering for an interval: arcsine on `[0,1]`, zero for the
/// Marchenko–Pastur and semicircle centers.
pub fn reference_centering<T: Real>(interval: IntervalKind, k: usize) -> T {
    match interval {
        IntervalKind::Unit => arcsine_centering(k),
        _ => T::zero(),
    }
}

/// `⌊n t⌋`, tolerant to grid points like `0.3 * 10` landing just below an
/// integer.
pub fn grid_index(n: usize, t: f64) -> usize {
    (n as f64 * t + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint<T> {
    pub t: f64,
    pub k: usize,
    pub logdet: T,
    pub centered_logdet: T,
}

/// `D_{2⌊nt⌋}` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDetPath<T> {
    pub interval: IntervalKind,
    pub n: usize,
    pub points: Vec<PathPoint<T>>,
}

impl<T: Real> LogDetPath<T> {
    pub fn to_csv(&self, provenance: &str) -> String {
        let mut out = String::new();
        if !provenance.is_empty() {
            out.push_str(&format!("# {provenance}\n"));
        }
        out.push_str("t,k,logdet,centered_logdet\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{:e},{:e}\n",
                p.t,
                p.k,
                p.logdet.to_f64_lossy(),
                p.centered_logdet.to_f64_lossy()
            ));
        }
        out
    }
}

/// All of `D_{2k}` for `k = 0..=k_max`, adding one product layer per step.
pub fn logdet_sequence<T: Real>(c: &CanonicalCoords<T>, k_max: usize) -> Result<Vec<T>> {
    Ok(HankelLogDet::product(c, k_max)?.values)
}

pub fn logdet_process<T: Real>(c: &CanonicalCoords<T>, n: usize, grid: &[f64]) -> Result<LogDetPath<T>> {
    for &t in grid {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("grid point {t} outside [0,1]")));
        }
    }
    let k_max = grid.iter().map(|&t| grid_index(n, t)).max().unwrap_or(0);
    let values = logdet_sequence(c, k_max)?;
    let points = grid
        .iter()
        .map(|&t| {
            let k = grid_index(n, t);
            let logdet = values[k];
            PathPoint { t, k, logdet, centered_logdet: logdet - reference_centering(c.interval, k) }
        })
        .collect();
    Ok(LogDetPath { interval: c.interval, n, points })
}
