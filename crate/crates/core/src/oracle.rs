//! Exact rational arithmetic checks for the floating-point core.
//!
//! The map from canonical coordinates to moments is recomputed here
//! without the Jacobi operator: each moment is placed at the root of an
//! affine determinant condition (the moment range endpoints on `[0,1]`
//! and `[0,∞)` are where a Hankel family becomes singular; on `ℝ` the
//! recurrence coefficients fix ratios of consecutive determinants).
//! Agreement with [`canonical_to_moments`] certifies the coordinate
//! conventions, and exact determinants certify the product formula.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel_det::det_product;
use crate::moment_space::{assemble_hankel, canonical_to_moments, CanonicalCoords, IntervalKind, JacobiCoefficients, MomentVector};
use crate::sampling::SeedSpec;
use crate::scalar::Field;
use crate::Rational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Natural logarithm of a positive rational, accurate to double precision
/// even when numerator or denominator overflow `f64`.
pub fn ln_rational(v: &Rational) -> f64 {
    if !v.is_positive() {
        return f64::NAN;
    }
    let ln_int = |x: &BigInt| {
        let shift = x.bits().saturating_sub(60);
        let top = (x >> shift).to_f64_lossy_int();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    };
    ln_int(v.numer()) - ln_int(v.denom())
}

trait ToF64Int {
    fn to_f64_lossy_int(&self) -> f64;
}

impl ToF64Int for BigInt {
    fn to_f64_lossy_int(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Fraction-free (Bareiss) elimination after clearing row denominators.
pub fn exact_det(a: &DMatrix<Rational>) -> Rational {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant of a non-square matrix");
    if n == 0 {
        return Rational::one();
    }
    let mut scale = BigInt::one();
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let l = (0..n).fold(BigInt::one(), |acc, j| acc.lcm(a[(i, j)].denom()));
        rows.push((0..n).map(|j| (a[(i, j)].clone() * Rational::from_integer(l.clone())).to_integer()).collect());
        scale *= l;
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if rows[k][k].is_zero() {
            match (k + 1..n).find(|&i| !rows[i][k].is_zero()) {
                Some(i) => {
                    rows.swap(k, i);
                    sign = -sign;
                }
                None => return Rational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &rows[i][j] * &rows[k][k] - &rows[i][k] * &rows[k][j];
                rows[i][j] = v / &prev;
            }
        }
        prev = rows[k][k].clone();
    }
    Rational::new(sign * rows[n - 1][n - 1].clone(), scale)
}

/// Laplace expansion along the first row; exponential, for self-checks.
pub fn cofactor_det(a: &DMatrix<Rational>) -> Rational {
    let n = a.nrows();
    if n == 0 {
        return Rational::one();
    }
    if n == 1 {
        return a[(0, 0)].clone();
    }
    let mut acc = Rational::zero();
    for j in 0..n {
        if a[(0, j)].is_zero() {
            continue;
        }
        let minor = a.clone().remove_row(0).remove_column(j);
        let term = a[(0, j)].clone() * cofactor_det(&minor);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// `m_0, m_1, …` with a slot for the unknown newest moment.
struct Known<'a> {
    m: &'a [Rational],
    x: Rational,
}

impl Known<'_> {
    fn get(&self, s: usize) -> Rational {
        if s < self.m.len() {
            self.m[s].clone()
        } else {
            assert_eq!(s, self.m.len(), "moment index beyond the unknown");
            self.x.clone()
        }
    }
}

fn hankel_from(size: usize, entry: impl Fn(usize) -> Rational) -> DMatrix<Rational> {
    DMatrix::from_fn(size, size, |i, j| entry(i + j))
}

/// Family whose determinant vanishes at the lower endpoint of `m_k`.
fn lower_family(k: usize, known: &Known) -> DMatrix<Rational> {
    if k % 2 == 0 {
        hankel_from(k / 2 + 1, |s| known.get(s))
    } else {
        hankel_from(k / 2 + 1, |s| known.get(s + 1))
    }
}

/// Family whose determinant vanishes at the upper endpoint of `m_k` on `[0,1]`.
fn upper_family(k: usize, known: &Known) -> DMatrix<Rational> {
    if k % 2 == 0 {
        hankel_from(k / 2, |s| known.get(s + 1) - known.get(s + 2))
    } else {
        hankel_from(k / 2 + 1, |s| known.get(s) - known.get(s + 1))
    }
}

/// Root in `x` of the affine map `x ↦ det(family(x)) - target`.
fn affine_root(
    m: &[Rational],
    target: &Rational,
    family: impl Fn(&Known) -> DMatrix<Rational>,
) -> Result<Rational> {
    let d0 = exact_det(&family(&Known { m, x: Rational::zero() }));
    let d1 = exact_det(&family(&Known { m, x: Rational::one() }));
    let slope = d1 - d0.clone();
    if slope.is_zero() {
        return Err(Error::Boundary { order: m.len() });
    }
    Ok((target.clone() - d0) / slope)
}

/// Lower endpoint `m_k^-` given `m_0, …, m_{k-1}`.
pub fn exact_lower_bound(m_with_zero: &[Rational]) -> Result<Rational> {
    let k = m_with_zero.len();
    affine_root(m_with_zero, &Rational::zero(), |kn| lower_family(k, kn))
}

/// Upper endpoint `m_k^+` on `[0,1]` given `m_0, …, m_{k-1}`.
pub fn exact_upper_bound(m_with_zero: &[Rational]) -> Result<Rational> {
    let k = m_with_zero.len();
    affine_root(m_with_zero, &Rational::zero(), |kn| upper_family(k, kn))
}

/// Moments from exact canonical coordinates by the determinant route.
pub fn exact_canonical_to_moments(c: &CanonicalCoords<Rational>) -> Result<MomentVector<Rational>> {
    let n = c.coords.len();
    let mut m: Vec<Rational> = vec![Rational::one()];
    match c.interval {
        IntervalKind::Unit => {
            for k in 1..=n {
                let lo = exact_lower_bound(&m)?;
                let hi = exact_upper_bound(&m)?;
                let p = c.coords[k - 1].clone();
                m.push(lo.clone() + p * (hi - lo));
            }
        }
        IntervalKind::Halfline => {
            let mut prev_gap = Rational::one();
            for k in 1..=n {
                let lo = exact_lower_bound(&m)?;
                let gap = c.coords[k - 1].clone() * prev_gap;
                m.push(lo + gap.clone());
                prev_gap = gap;
            }
        }
        IntervalKind::Realline => {
            if n % 2 == 0 {
                return Err(Error::Parity(n));
            }
            let b = c.b();
            let a = c.a();
            // dets[j] = det H_{2j-2}, with det H_{-2} = det H_0 = 1
            let mut dets: Vec<Rational> = vec![Rational::one(), Rational::one()];
            let mut a_prod = Rational::one();
            let mut b_sum = Rational::zero();
            for order in 1..=n {
                if order % 2 == 1 {
                    // order 2j+1: det M / det H_{2j-2} = a_1…a_j (b_1 + … + b_{j+1})
                    let j = order / 2;
                    b_sum += b[j].clone();
                    let target = a_prod.clone() * b_sum.clone() * dets[j].clone();
                    let x = affine_root(&m, &target, |kn| {
                        DMatrix::from_fn(j + 1, j + 1, |r, col| if col < j { kn.get(r + col) } else { kn.get(r + j + 1) })
                    })?;
                    m.push(x);
                } else {
                    // order 2j: det H_{2j} = a_1…a_j det H_{2j-2}
                    let j = order / 2;
                    a_prod *= a[j - 1].clone();
                    let target = a_prod.clone() * dets[j].clone();
                    let x = affine_root(&m, &target, |kn| hankel_from(j + 1, |s| kn.get(s)))?;
                    m.push(x);
                    dets.push(target);
                }
            }
        }
    }
    m.remove(0);
    MomentVector::new(c.interval, m)
}

/// The product with the outer index in place of the inner one,
/// `prod_{j=1}^{k} (z_{2k-1} z_{2k})^{k-j+1}`.
pub fn literal_halfline_product(z: &[Rational], k: usize) -> Rational {
    let f = z[2 * k - 2].clone() * z[2 * k - 1].clone();
    let mut acc = Rational::one();
    for _ in 0..k * (k + 1) / 2 {
        acc *= f.clone();
    }
    acc
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub check: String,
    pub order: usize,
    pub coords: Vec<String>,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CertificationReport {
    pub interval: IntervalKind,
    pub k_max: usize,
    pub trials: usize,
    pub determinant_checks: usize,
    pub moment_route_checks: usize,
    pub recursion_checks: usize,
    pub first_counterexample: Option<Counterexample>,
    pub passed: bool,
}

fn random_rational<R: Rng>(rng: &mut R, lo_num: i64, hi_num: impl Fn(i64) -> i64) -> Rational {
    let den: i64 = rng.random_range(2..=64);
    let num = rng.random_range(lo_num.max(-hi_num(den))..=hi_num(den));
    ratio(num, den)
}

/// Random strictly interior coordinates with denominators at most 64.
pub fn random_exact_coords<R: Rng>(rng: &mut R, interval: IntervalKind, len: usize) -> CanonicalCoords<Rational> {
    let coords = (0..len)
        .map(|i| match interval {
            IntervalKind::Unit => random_rational(rng, 1, |d| d - 1),
            IntervalKind::Halfline => random_rational(rng, 1, |d| 3 * d),
            IntervalKind::Realline if i % 2 == 0 => random_rational(rng, i64::MIN, |d| 2 * d),
            IntervalKind::Realline => random_rational(rng, 1, |d| 3 * d),
        })
        .collect();
    CanonicalCoords::new(interval, coords).expect("interior by construction")
}

fn show(v: &[Rational]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

/// Which product is compared with the exact determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductForm {
    Corrected,
    /// Outer-index reading on `[0,∞)`; kept as a regression guard.
    LiteralHalfline,
}

pub fn certify_product_formula(interval: IntervalKind, k_max: usize, trials: usize, seed: SeedSpec) -> Result<CertificationReport> {
    certify_with(interval, k_max, trials, seed, ProductForm::Corrected)
}

pub fn certify_with(
    interval: IntervalKind,
    k_max: usize,
    trials: usize,
    seed: SeedSpec,
    form: ProductForm,
) -> Result<CertificationReport> {
    if k_max == 0 || k_max > 8 {
        return Err(Error::Parameter(format!("k_max must be in 1..=8, got {k_max}")));
    }
    if form == ProductForm::LiteralHalfline && interval != IntervalKind::Halfline {
        return Err(Error::Parameter("the literal product form only exists on the half line".into()));
    }
    let mut report = CertificationReport {
        interval,
        k_max,
        trials,
        determinant_checks: 0,
        moment_route_checks: 0,
        recursion_checks: 0,
        first_counterexample: None,
        passed: true,
    };
    let len = if interval == IntervalKind::Realline { 2 * k_max + 1 } else { 2 * k_max };
    for trial in 0..trials {
        let mut rng = seed.replicate(trial as u64).rng();
        let c = random_exact_coords(&mut rng, interval, len);
        let mut fail = |check: &str, order: usize, expected: &Rational, got: &Rational| {
            if report.first_counterexample.is_none() {
                report.first_counterexample = Some(Counterexample {
                    trial,
                    check: check.to_string(),
                    order,
                    coords: show(&c.coords),
                    expected: expected.to_string(),
                    got: got.to_string(),
                });
            }
        };

        let m = canonical_to_moments(&c);
        let m_det = exact_canonical_to_moments(&c)?;
        report.moment_route_checks += 1;
        if let Some(i) = (0..len).find(|&i| m.moments[i] != m_det.moments[i]) {
            fail("moment routes", i + 1, &m_det.moments[i], &m.moments[i]);
        }

        for k in 1..=k_max {
            let exact = exact_det(&assemble_hankel(&m, k)?);
            let product = match form {
                ProductForm::Corrected => det_product(&c, k)?,
                ProductForm::LiteralHalfline => literal_halfline_product(&c.coords, k),
            };
            report.determinant_checks += 1;
            if exact != product {
                fail("product formula", 2 * k, &exact, &product);
            }
        }

        if interval == IntervalKind::Halfline {
            // det H_k = (m_k - m_k^-) det H_{k-2}, odd k using (m_{i+j+1})
            let full: Vec<Rational> = std::iter::once(Rational::one()).chain(m.moments.iter().cloned()).collect();
            let det_of = |k: usize| -> Rational {
                let kn = Known { m: &full[..=k], x: Rational::zero() };
                exact_det(&lower_family(k, &kn))
            };
            for k in 1..=len {
                let lo = exact_lower_bound(&full[..k])?;
                let prev = if k >= 2 { det_of(k - 2) } else { Rational::one() };
                let lhs = det_of(k);
                let rhs = (full[k].clone() - lo) * prev;
                report.recursion_checks += 1;
                if lhs != rhs {
                    fail("gap recursion", k, &lhs, &rhs);
                }
            }
        }
    }
    report.passed = report.first_counterexample.is_none();
    Ok(report)
}

/// Coefficients of `det(xI - A)` (increasing degree) by Faddeev–LeVerrier.
pub fn faddeev_leverrier(a: &DMatrix<Rational>) -> Vec<Rational> {
    let n = a.nrows();
    let mut coeffs = vec![Rational::zero(); n + 1];
    coeffs[n] = Rational::one();
    let mut m = DMatrix::from_element(n, n, Rational::zero());
    for k in 1..=n {
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1].clone();
        }
        m = next;
        let am = a * &m;
        let trace = (0..n).fold(Rational::zero(), |acc, i| acc + am[(i, i)].clone());
        coeffs[n - k] = -trace / int(k as i64);
    }
    coeffs
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CharPolyCheck {
    pub n: usize,
    /// `max_k |c_k(float recurrence) - c_k(exact dense)| / |c_k(exact dense)|`
    pub max_relative_error: f64,
    /// Exact recurrence equals the exact dense expansion coefficientwise.
    pub exact_match: bool,
}

/// Compares the recurrence characteristic polynomial of `j` in `f64`
/// against an exact expansion of the dense tridiagonal matrix built from
/// the same (exactly representable) coefficients.
pub fn charpoly_dual_check(j: &JacobiCoefficients<f64>) -> Result<CharPolyCheck> {
    let n = j.alpha.len();
    let to_exact = |v: f64| Rational::from_float(v).ok_or_else(|| Error::Domain(format!("non-finite coefficient {v}")));
    let alpha = j.alpha.iter().map(|v| to_exact(*v)).collect::<Result<Vec<_>>>()?;
    let beta = j.beta.iter().map(|v| to_exact(*v)).collect::<Result<Vec<_>>>()?;
    let dense = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            alpha[r].clone()
        } else if c == r + 1 {
            Rational::one()
        } else if r == c + 1 {
            beta[c].clone()
        } else {
            Rational::zero()
        }
    });
    let exact = faddeev_leverrier(&dense);
    let exact_rec = JacobiCoefficients { alpha, beta }.characteristic_polynomial()?;
    let float_rec = j.characteristic_polynomial()?;
    let mut max_rel: f64 = 0.0;
    for (f, e) in float_rec.iter().zip(&exact) {
        let diff = (Rational::from_float(*f).expect("finite") - e.clone()).abs();
        let rel = if e.is_zero() {
            if diff.is_zero() { 0.0 } else { f64::INFINITY }
        } else {
            (diff / e.abs()).to_f64_lossy()
        };
        max_rel = max_rel.max(rel);
    }
    Ok(CharPolyCheck { n, max_relative_error: max_rel, exact_match: exact_rec == exact })
}
