//! Seeded samplers for the canonical coordinates of random moment vectors.
//!
//! * `[0,1]`, uniform law on `M_N`: `p_i ~ Beta(N-i+1, N-i+1)` independent.
//! * `[0,∞)`: `z_k ~ Gamma(γ_k + n - k + 1, rate δ_k)` independent.
//! * `ℝ`: `b_k ~ N(0, 1/(2 δ_{2k-1}))`, `a_k ~ Gamma(γ_k + 2n - 2k, rate δ_{2k})`.
//!
//! Streams come from ChaCha8 keyed by `seed` with `stream_id` as the
//! stream selector, so two specs never share output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment_space::{canonical_to_moments, CanonicalCoords, IntervalKind, JacobiCoefficients, MomentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(seed: u64) -> Self {
        SeedSpec { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        SeedSpec { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for replicate `r` under this spec. Replicate streams depend
    /// only on `(seed, stream_id, r)`, not on how replicates are split
    /// across workers.
    pub fn replicate(&self, r: u64) -> SeedSpec {
        SeedSpec { seed: self.seed, stream_id: (self.stream_id << 32) | (r & 0xffff_ffff) }
    }
}

pub(crate) fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters").sample(rng)
}

/// `Beta(a, b)` as `X / (X + Y)` with independent gammas, redrawn until
/// strictly inside `(0,1)`.
pub(crate) fn beta_draw<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let ga = Gamma::new(a, 1.0).expect("positive shape");
    let gb = Gamma::new(b, 1.0).expect("positive shape");
    loop {
        let x: f64 = ga.sample(rng);
        let y: f64 = gb.sample(rng);
        let p = x / (x + y);
        if p > 0.0 && p < 1.0 {
            return p;
        }
    }
}

/// First `len` canonical moments of a uniform vector on `M_dim([0,1])`.
pub fn unit_canonical_prefix<R: Rng + ?Sized>(rng: &mut R, dim: usize, len: usize) -> Vec<f64> {
    (1..=len.min(dim))
        .map(|i| {
            let s = (dim - i + 1) as f64;
            beta_draw(rng, s, s)
        })
        .collect()
}

pub fn sample_unit_canonical(n: usize, seed: SeedSpec) -> Result<CanonicalCoords<f64>> {
    if n == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    let coords = unit_canonical_prefix(&mut seed.rng(), n, n);
    CanonicalCoords::new(IntervalKind::Unit, coords)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalflineParams {
    pub n: usize,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
}

impl HalflineParams {
    pub fn new(n: usize, gamma: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let p = HalflineParams { n, gamma, delta };
        p.validate()?;
        Ok(p)
    }

    /// `γ ≡ 0`, `δ_k = n - k + 1`: every `z_k` has mean one.
    pub fn unit_mean(n: usize) -> Self {
        HalflineParams { n, gamma: vec![0.0; n], delta: (1..=n).map(|k| (n - k + 1) as f64).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        if self.gamma.len() != self.n || self.delta.len() != self.n {
            return Err(Error::Parameter(format!(
                "need {} gamma and delta values, got {} and {}",
                self.n,
                self.gamma.len(),
                self.delta.len()
            )));
        }
        for k in 1..=self.n {
            let g = self.gamma[k - 1];
            let d = self.delta[k - 1];
            if !(g > -((self.n - k + 1) as f64)) || !g.is_finite() {
                return Err(Error::Parameter(format!("gamma_{k} = {g} must exceed -{}", self.n - k + 1)));
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Parameter(format!("delta_{k} = {d} must be positive")));
            }
        }
        Ok(())
    }

    pub fn shape(&self, k: usize) -> f64 {
        self.gamma[k - 1] + (self.n - k + 1) as f64
    }
}

pub fn halfline_canonical_with<R: Rng + ?Sized>(rng: &mut R, params: &HalflineParams) -> Vec<f64> {
    (1..=params.n)
        .map(|k| loop {
            let z = gamma_draw(rng, params.shape(k), params.delta[k - 1]);
            if z > 0.0 {
                break z;
            }
        })
        .collect()
}

pub fn sample_halfline_canonical(params: &HalflineParams, seed: SeedSpec) -> Result<CanonicalCoords<f64>> {
    params.validate()?;
    CanonicalCoords::new(IntervalKind::Halfline, halfline_canonical_with(&mut seed.rng(), params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReallineParams {
    pub n: usize,
    /// `γ_1, …, γ_{n-1}`
    pub gamma: Vec<f64>,
    /// `δ_1, …, δ_{2n-1}`; odd positions scale `b`, even positions `a`.
    pub delta: Vec<f64>,
}

impl ReallineParams {
    pub fn new(n: usize, gamma: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        let p = ReallineParams { n, gamma, delta };
        p.validate()?;
        Ok(p)
    }

    /// `γ ≡ 0`, `b_k ~ N(0,1)` and `δ_{2k} = 2n - 2k` so every `a_k` has mean one.
    pub fn unit_mean(n: usize) -> Self {
        let delta = (1..2 * n).map(|i| if i % 2 == 1 { 0.5 } else { (2 * n - i) as f64 }).collect();
        ReallineParams { n, gamma: vec![0.0; n.saturating_sub(1)], delta }
    }

    /// Parameters under which `a_k ~ χ²_{β(n-k)} / 2` and `b_k ~ N(0,1)`.
    pub fn beta_hermite(n: usize, beta: f64) -> Self {
        let gamma = (1..n).map(|k| (beta / 2.0 - 2.0) * (n - k) as f64).collect();
        let delta = (1..2 * n).map(|i| if i % 2 == 1 { 0.5 } else { 1.0 }).collect();
        ReallineParams { n, gamma, delta }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        if self.gamma.len() + 1 != self.n || self.delta.len() + 1 != 2 * self.n {
            return Err(Error::Parameter(format!(
                "need {} gamma and {} delta values, got {} and {}",
                self.n - 1,
                2 * self.n - 1,
                self.gamma.len(),
                self.delta.len()
            )));
        }
        for k in 1..self.n {
            let g = self.gamma[k - 1];
            if !(g > -2.0 * (self.n - k) as f64) || !g.is_finite() {
                return Err(Error::Parameter(format!("gamma_{k} = {g} must exceed -{}", 2 * (self.n - k))));
            }
        }
        for (i, d) in self.delta.iter().enumerate() {
            if !(*d > 0.0) || !d.is_finite() {
                return Err(Error::Parameter(format!("delta_{} = {d} must be positive", i + 1)));
            }
        }
        Ok(())
    }

    /// Gamma shape of `a_k`.
    pub fn a_shape(&self, k: usize) -> f64 {
        self.gamma[k - 1] + (2 * self.n - 2 * k) as f64
    }
}

pub fn realline_canonical_with<R: Rng + ?Sized>(rng: &mut R, params: &ReallineParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * params.n - 1);
    for k in 1..=params.n {
        let sd = (0.5 / params.delta[2 * k - 2]).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        out.push(sd * z);
        if k < params.n {
            let a = loop {
                let a = gamma_draw(rng, params.a_shape(k), params.delta[2 * k - 1]);
                if a > 0.0 {
                    break a;
                }
            };
            out.push(a);
        }
    }
    out
}

pub fn sample_realline_canonical(params: &ReallineParams, seed: SeedSpec) -> Result<CanonicalCoords<f64>> {
    params.validate()?;
    CanonicalCoords::new(IntervalKind::Realline, realline_canonical_with(&mut seed.rng(), params))
}

/// Random tridiagonal model with `N(0,1)` diagonal and off-diagonal
/// squares `a_i ~ χ²_{β(n-i)} / 2`.
pub fn beta_hermite_matrix(n: usize, beta: f64, seed: SeedSpec) -> Result<JacobiCoefficients<f64>> {
    if n == 0 || !(beta > 0.0) {
        return Err(Error::Parameter(format!("need n >= 1 and beta > 0, got n = {n}, beta = {beta}")));
    }
    let c = sample_realline_canonical(&ReallineParams::beta_hermite(n, beta), seed)?;
    Ok(JacobiCoefficients { alpha: c.b(), beta: c.a() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "interval", rename_all = "lowercase")]
pub enum SamplerParams {
    Unit,
    Halfline(HalflineParams),
    Realline(ReallineParams),
}

impl SamplerParams {
    pub fn interval(&self) -> IntervalKind {
        match self {
            SamplerParams::Unit => IntervalKind::Unit,
            SamplerParams::Halfline(_) => IntervalKind::Halfline,
            SamplerParams::Realline(_) => IntervalKind::Realline,
        }
    }
}

pub fn sample_canonical(dim: usize, params: &SamplerParams, seed: SeedSpec) -> Result<CanonicalCoords<f64>> {
    match params {
        SamplerParams::Unit => sample_unit_canonical(dim, seed),
        SamplerParams::Halfline(p) => {
            if p.n != dim {
                return Err(Error::Parameter(format!("dimension {dim} does not match n = {}", p.n)));
            }
            sample_halfline_canonical(p, seed)
        }
        SamplerParams::Realline(p) => {
            if 2 * p.n - 1 != dim {
                return Err(Error::Parity(dim));
            }
            sample_realline_canonical(p, seed)
        }
    }
}

/// Canonical sampler composed with the inverse transform.
pub fn sample_moment_vector(
    interval: IntervalKind,
    dim: usize,
    params: &SamplerParams,
    seed: SeedSpec,
) -> Result<MomentVector<f64>> {
    if params.interval() != interval {
        return Err(Error::Parameter(format!("{} parameters given for {interval}", params.interval())));
    }
    Ok(canonical_to_moments(&sample_canonical(dim, params, seed)?))
}
