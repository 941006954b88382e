//! Limit objects of the log-determinant processes: the drift `r`, the
//! covariance kernels `f` and `g`, the fixed-`k` covariance `min(i, j)`,
//! and Gaussian path simulation on a grid.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel_det::{grid_index, logdet_sequence, reference_centering};
use crate::moment_space::{CanonicalCoords, IntervalKind};
use crate::quadrature::integrate;
use crate::sampling::SeedSpec;

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {x} outside [0,1]")))
    }
}

/// `r(t) = t + (1 - t) log(1 - t)`, with `0 log 0 = 0`.
pub fn r(t: f64) -> Result<f64> {
    check_unit(t, "t")?;
    if t == 1.0 {
        return Ok(1.0);
    }
    Ok(t + (1.0 - t) * (-t).ln_1p())
}

/// `f(s,t) = (s∧t)(2 - s∨t) - (s + t - 2) log(1 - s∧t)`.
pub fn kernel_f(s: f64, t: f64) -> Result<f64> {
    check_unit(s, "s")?;
    check_unit(t, "t")?;
    let (a, b) = (s.min(t), s.max(t));
    if a == 1.0 {
        return Ok(1.0);
    }
    Ok(a * (2.0 - b) - (s + t - 2.0) * (-a).ln_1p())
}

/// `g(s,t) = ½ (s∧t)(s + t - 2 + s∨t) - (s - 1)(t - 1) log(1 - s∧t)`.
pub fn kernel_g(s: f64, t: f64) -> Result<f64> {
    check_unit(s, "s")?;
    check_unit(t, "t")?;
    let (a, b) = (s.min(t), s.max(t));
    let log_term = if a == 1.0 { 0.0 } else { (s - 1.0) * (t - 1.0) * (-a).ln_1p() };
    Ok(0.5 * a * (s + t - 2.0 + b) - log_term)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    FUnit,
    GHalfline,
    GHalfReal,
}

impl KernelId {
    pub fn eval(self, s: f64, t: f64) -> Result<f64> {
        match self {
            KernelId::FUnit => kernel_f(s, t),
            KernelId::GHalfline => kernel_g(s, t),
            KernelId::GHalfReal => Ok(0.5 * kernel_g(s, t)?),
        }
    }
}

/// Integral form of the kernels, for cross-checking the closed forms.
pub fn kernel_by_quadrature(kernel: KernelId, s: f64, t: f64) -> Result<f64> {
    check_unit(s, "s")?;
    check_unit(t, "t")?;
    let a = s.min(t);
    let value = match kernel {
        KernelId::FUnit => {
            integrate(|x| (t - x) * (s - x) / ((1.0 - x) * (1.0 - x)), 0.0, a, 1e-13, 1e-13)?.value
        }
        KernelId::GHalfline | KernelId::GHalfReal => {
            integrate(|x| (t - x) * (s - x) / (1.0 - x), 0.0, a, 1e-13, 1e-13)?.value
        }
    };
    Ok(if kernel == KernelId::GHalfReal { 0.5 * value } else { value })
}

/// `Σ_k = (min(i, j))_{i,j=1..k}`.
pub fn sigma_fixed_k(k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| (i.min(j) + 1) as f64))
}

/// Mean and covariance of a limit process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub interval: IntervalKind,
    /// Mean is `mean_scale · r(t)`.
    pub mean_scale: f64,
    /// Covariance is `cov_scale` times the interval's base kernel.
    pub cov_scale: f64,
}

impl LimitSpec {
    pub fn for_interval(interval: IntervalKind) -> Self {
        let (mean_scale, cov_scale) = match interval {
            IntervalKind::Unit => (0.0, 1.0),
            IntervalKind::Halfline => (-0.5, 1.0),
            IntervalKind::Realline => (-0.25, 0.5),
        };
        LimitSpec { interval, mean_scale, cov_scale }
    }

    pub fn validate(&self) -> Result<()> {
        if *self != LimitSpec::for_interval(self.interval) {
            return Err(Error::Parameter(format!(
                "no limit process with mean scale {} and covariance scale {} on {}",
                self.mean_scale, self.cov_scale, self.interval
            )));
        }
        Ok(())
    }

    pub fn kernel_id(&self) -> KernelId {
        match self.interval {
            IntervalKind::Unit => KernelId::FUnit,
            IntervalKind::Halfline => KernelId::GHalfline,
            IntervalKind::Realline => KernelId::GHalfReal,
        }
    }

    pub fn mean(&self, t: f64) -> Result<f64> {
        Ok(self.mean_scale * r(t)?)
    }

    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        self.kernel_id().eval(s, t)
    }
}

const JITTERS: [f64; 5] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9];

#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub grid: Vec<f64>,
    pub gram: DMatrix<f64>,
    pub kernel_id: KernelId,
    /// Lower-triangular `L` with `L Lᵀ = gram + jitter·I`.
    pub chol: DMatrix<f64>,
    pub jitter: f64,
}

impl KernelGrid {
    pub fn residual(&self) -> f64 {
        (&self.chol * self.chol.transpose() - &self.gram).amax()
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    for &t in grid {
        check_unit(t, "grid point")?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn build_kernel_grid(spec: &LimitSpec, grid: &[f64]) -> Result<KernelGrid> {
    spec.validate()?;
    validate_grid(grid)?;
    let n = grid.len();
    let kernel = spec.kernel_id();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(grid[i], grid[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    for &jitter in &JITTERS {
        let shifted = &gram + DMatrix::identity(n, n) * jitter;
        if let Some(ch) = Cholesky::new(shifted) {
            let kg = KernelGrid { grid: grid.to_vec(), gram: gram.clone(), kernel_id: kernel, chol: ch.l(), jitter };
            if kg.residual() <= 1e-8 {
                return Ok(kg);
            }
        }
    }
    Err(Error::Factorization(format!("kernel Gram matrix on {n} points is not positive definite up to jitter 1e-9")))
}

/// `n_paths` draws of the limit process on `grid`, one row per path.
/// Path `i` uses the replicate stream `i` of `seed`.
pub fn sample_limit_paths(spec: &LimitSpec, grid: &[f64], n_paths: usize, seed: SeedSpec) -> Result<Vec<Vec<f64>>> {
    let kg = build_kernel_grid(spec, grid)?;
    let mean: Vec<f64> = grid.iter().map(|&t| spec.mean(t)).collect::<Result<_>>()?;
    let d = grid.len();
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.replicate(i as u64).rng();
            let xi = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let y = &kg.chol * xi;
            (0..d).map(|j| mean[j] + y[j]).collect()
        })
        .collect())
}

/// Steps `k = ⌊m t⌋` used for the path at `t`: `m = n` on `[0,1]` and
/// `[0,∞)`, `m = n - 1` on `ℝ`.
pub fn process_steps(interval: IntervalKind, n: usize) -> usize {
    match interval {
        IntervalKind::Realline => n.saturating_sub(1),
        _ => n,
    }
}

/// Standardized log-determinant path:
/// `(2/√n)(D_{2⌊nt⌋} - D⁰_{2⌊nt⌋} + (n/2) r(t))` on `[0,1]`, `D/n` otherwise.
pub fn standardized_process(c: &CanonicalCoords<f64>, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    for &t in grid {
        check_unit(t, "grid point")?;
    }
    let steps = process_steps(c.interval, n);
    let k_max = grid.iter().map(|&t| grid_index(steps, t)).max().unwrap_or(0);
    let d = logdet_sequence(c, k_max)?;
    let nf = n as f64;
    grid.iter()
        .map(|&t| {
            let k = grid_index(steps, t);
            Ok(match c.interval {
                IntervalKind::Unit => {
                    2.0 / nf.sqrt() * (d[k] - reference_centering::<f64>(IntervalKind::Unit, k) + 0.5 * nf * r(t)?)
                }
                _ => d[k] / nf,
            })
        })
        .collect()
}
