//! Moment vectors on `[0,1]`, `[0,∞)` and `ℝ`, their Hankel matrices and
//! the maps to and from canonical coordinates.
//!
//! Canonical coordinates are indexed so that the `k`-th moment is an affine
//! function of the `k`-th coordinate once the earlier ones are fixed:
//!
//! * `[0,1]`: `p_k`, through the chain `ζ_1 = p_1`, `ζ_k = (1 - p_{k-1}) p_k`;
//! * `[0,∞)`: `z_k` directly;
//! * `ℝ`: the interleaved recurrence coefficients `(b_1, a_1, b_2, …, b_n)`.
//!
//! Moments are recovered as `m_k = (J^k)_{00}` where `J` is the tridiagonal
//! Jacobi operator with diagonal `alpha`, superdiagonal ones and
//! subdiagonal `beta`. The forward map evaluates `m_k` at `c_k = 0` and
//! `c_k = 1` and solves the affine relation for `c_k`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    Unit,
    Halfline,
    Realline,
}

impl IntervalKind {
    pub fn name(self) -> &'static str {
        match self {
            IntervalKind::Unit => "unit",
            IntervalKind::Halfline => "halfline",
            IntervalKind::Realline => "realline",
        }
    }
}

impl std::fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for IntervalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(IntervalKind::Unit),
            "halfline" => Ok(IntervalKind::Halfline),
            "realline" => Ok(IntervalKind::Realline),
            other => Err(Error::Config(format!("unknown interval `{other}`"))),
        }
    }
}

/// Ordinary moments `(m_1, …, m_N)`; `m_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector<T> {
    pub interval: IntervalKind,
    pub moments: Vec<T>,
}

impl<T: Field> MomentVector<T> {
    pub fn new(interval: IntervalKind, moments: Vec<T>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::Length { needed: 1, available: 0 });
        }
        Ok(MomentVector { interval, moments })
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    /// `m_k` with `m_0 = 1`.
    pub fn m(&self, k: usize) -> T {
        if k == 0 {
            T::one()
        } else {
            self.moments[k - 1].clone()
        }
    }
}

/// Interval-specific canonical coordinates, stored flat in moment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCoords<T> {
    pub interval: IntervalKind,
    pub coords: Vec<T>,
}

impl<T: Field> CanonicalCoords<T> {
    /// Validates the interval invariants.
    pub fn new(interval: IntervalKind, coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Length { needed: 1, available: 0 });
        }
        check_coordinates(interval, &coords)?;
        Ok(CanonicalCoords { interval, coords })
    }

    /// Builds `[0,∞)` or `[0,1]` coordinates, or interleaves `(b, a)` for `ℝ`.
    pub fn realline(b: Vec<T>, a: Vec<T>) -> Result<Self> {
        if b.len() != a.len() + 1 {
            return Err(Error::Parameter(format!(
                "need len(b) = len(a) + 1, got {} and {}",
                b.len(),
                a.len()
            )));
        }
        let mut coords = Vec::with_capacity(b.len() + a.len());
        for i in 0..a.len() {
            coords.push(b[i].clone());
            coords.push(a[i].clone());
        }
        coords.push(b[a.len()].clone());
        Self::new(IntervalKind::Realline, coords)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Diagonal coefficients `b_1, b_2, …` of a real-line vector.
    pub fn b(&self) -> Vec<T> {
        self.coords.iter().step_by(2).cloned().collect()
    }

    /// Off-diagonal coefficients `a_1, a_2, …` of a real-line vector.
    pub fn a(&self) -> Vec<T> {
        self.coords.iter().skip(1).step_by(2).cloned().collect()
    }

    /// Truncation to the first `len` coordinates.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len > self.coords.len() {
            return Err(Error::Length { needed: len, available: self.coords.len() });
        }
        Ok(CanonicalCoords { interval: self.interval, coords: self.coords[..len].to_vec() })
    }
}

fn check_coordinates<T: Field>(interval: IntervalKind, coords: &[T]) -> Result<()> {
    let zero = T::zero();
    let one = T::one();
    for (i, c) in coords.iter().enumerate() {
        let ok = match interval {
            IntervalKind::Unit => *c > zero && *c < one,
            IntervalKind::Halfline => *c > zero,
            IntervalKind::Realline => i % 2 == 0 || *c > zero,
        };
        if !ok {
            return Err(Error::Domain(format!(
                "{interval} coordinate {} out of range: {c:?}",
                i + 1
            )));
        }
    }
    if interval == IntervalKind::Realline && coords.len() % 2 == 0 {
        return Err(Error::Parity(coords.len()));
    }
    Ok(())
}

/// Three-term recurrence data `x P_k = P_{k+1} + alpha_{k+1} P_k + beta_k P_{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiCoefficients<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Field> JacobiCoefficients<T> {
    /// Monic characteristic polynomial of the `alpha.len()`-dimensional
    /// Jacobi matrix, coefficients in increasing degree.
    pub fn characteristic_polynomial(&self) -> Result<Vec<T>> {
        let n = self.alpha.len();
        if n == 0 || self.beta.len() + 1 < n {
            return Err(Error::Length { needed: n.saturating_sub(1), available: self.beta.len() });
        }
        let mut prev: Vec<T> = vec![T::one()];
        let mut cur: Vec<T> = vec![-self.alpha[0].clone(), T::one()];
        for k in 1..n {
            let mut next = vec![T::zero(); k + 2];
            for (d, c) in cur.iter().enumerate() {
                next[d + 1] = next[d + 1].clone() + c.clone();
                next[d] = next[d].clone() - self.alpha[k].clone() * c.clone();
            }
            for (d, c) in prev.iter().enumerate() {
                next[d] = next[d].clone() - self.beta[k - 1].clone() * c.clone();
            }
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// `m_1, …, m_count` of the measure with these recurrence coefficients.
    /// Missing trailing coefficients that `count` never reaches are ignored.
    pub fn moments(&self, count: usize) -> Vec<T> {
        jacobi_moments(&self.alpha, &self.beta, count)
    }
}

fn jacobi_moments<T: Field>(alpha: &[T], beta: &[T], count: usize) -> Vec<T> {
    // depth d is only reachable at step j if d <= min(j, count - j)
    let size = count / 2 + 1;
    let coef = |v: &[T], i: usize| v.get(i).cloned().unwrap_or_else(T::zero);
    let mut v = vec![T::zero(); size];
    v[0] = T::one();
    let mut out = Vec::with_capacity(count);
    for step in 1..=count {
        let reach = step.min(count - step + 1).min(size - 1);
        let mut w = vec![T::zero(); size];
        for i in 0..=reach {
            let mut acc = coef(alpha, i) * v[i].clone();
            if i + 1 < size {
                acc = acc + v[i + 1].clone();
            }
            if i >= 1 {
                acc = acc + coef(beta, i - 1) * v[i - 1].clone();
            }
            w[i] = acc;
        }
        v = w;
        out.push(v[0].clone());
    }
    out
}

/// Recurrence coefficients from an unvalidated coordinate prefix.
fn chain_to_jacobi<T: Field>(interval: IntervalKind, coords: &[T]) -> (Vec<T>, Vec<T>) {
    let chain: Vec<T> = match interval {
        IntervalKind::Unit => {
            let mut zeta = Vec::with_capacity(coords.len());
            let mut q_prev = T::one();
            for p in coords {
                zeta.push(q_prev.clone() * p.clone());
                q_prev = T::one() - p.clone();
            }
            zeta
        }
        IntervalKind::Halfline => coords.to_vec(),
        IntervalKind::Realline => {
            let alpha = coords.iter().step_by(2).cloned().collect();
            let beta = coords.iter().skip(1).step_by(2).cloned().collect();
            return (alpha, beta);
        }
    };
    let n = chain.len();
    let mut alpha = Vec::with_capacity(n / 2 + 1);
    let mut beta = Vec::with_capacity(n / 2);
    if n >= 1 {
        alpha.push(chain[0].clone());
    }
    let mut k = 1;
    while 2 * k <= n {
        beta.push(chain[2 * k - 2].clone() * chain[2 * k - 1].clone());
        if 2 * k < n {
            alpha.push(chain[2 * k - 1].clone() + chain[2 * k].clone());
        }
        k += 1;
    }
    (alpha, beta)
}

fn prefix_moments<T: Field>(interval: IntervalKind, coords: &[T]) -> Vec<T> {
    let (alpha, beta) = chain_to_jacobi(interval, coords);
    jacobi_moments(&alpha, &beta, coords.len())
}

/// Last moment `m_k` determined by the coordinate prefix of length `k`.
fn last_moment<T: Field>(interval: IntervalKind, coords: &[T]) -> T {
    prefix_moments(interval, coords).pop().unwrap_or_else(T::one)
}

pub fn canonical_to_jacobi<T: Field>(c: &CanonicalCoords<T>) -> JacobiCoefficients<T> {
    let (alpha, beta) = chain_to_jacobi(c.interval, &c.coords);
    JacobiCoefficients { alpha, beta }
}

pub fn canonical_to_moments<T: Field>(c: &CanonicalCoords<T>) -> MomentVector<T> {
    MomentVector { interval: c.interval, moments: prefix_moments(c.interval, &c.coords) }
}

/// Inverse of [`canonical_to_moments`]; rejects non-interior input with
/// the first order at which the coordinate leaves its range.
pub fn moments_to_canonical<T: Field>(m: &MomentVector<T>) -> Result<CanonicalCoords<T>> {
    let n = m.moments.len();
    if m.interval == IntervalKind::Realline && n % 2 == 0 {
        return Err(Error::Parity(n));
    }
    let zero = T::zero();
    let one = T::one();
    let mut coords: Vec<T> = Vec::with_capacity(n);
    for k in 1..=n {
        coords.push(zero.clone());
        let at0 = last_moment(m.interval, &coords);
        coords[k - 1] = one.clone();
        let at1 = last_moment(m.interval, &coords);
        let slope = at1 - at0.clone();
        if slope <= zero {
            return Err(Error::Boundary { order: k });
        }
        let c = (m.moments[k - 1].clone() - at0) / slope;
        let valid = match m.interval {
            IntervalKind::Unit => c > zero && c < one,
            IntervalKind::Halfline => c > zero,
            IntervalKind::Realline => k % 2 == 1 || c > zero,
        };
        if !valid {
            return Err(Error::Boundary { order: k });
        }
        coords[k - 1] = c;
    }
    Ok(CanonicalCoords { interval: m.interval, coords })
}

/// Range of the next moment given a prefix; `upper == None` means `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBounds<T> {
    pub lower: T,
    pub upper: Option<T>,
}

/// Extreme feasible values of `m_k` given `(m_1, …, m_{k-1})`.
pub fn moment_bounds<T: Field>(prefix: &[T], interval: IntervalKind) -> Result<MomentBounds<T>> {
    if interval == IntervalKind::Realline {
        return Err(Error::Unsupported("moment bounds on the real line are infinite".into()));
    }
    let mut coords = if prefix.is_empty() {
        Vec::new()
    } else {
        moments_to_canonical(&MomentVector { interval, moments: prefix.to_vec() })?.coords
    };
    coords.push(T::zero());
    let lower = last_moment(interval, &coords);
    let upper = match interval {
        IntervalKind::Unit => {
            *coords.last_mut().expect("nonempty") = T::one();
            Some(last_moment(interval, &coords))
        }
        _ => None,
    };
    Ok(MomentBounds { lower, upper })
}

/// `H_{2k} = (m_{i+j})_{i,j=0..k}`.
pub fn assemble_hankel<T: Field>(m: &MomentVector<T>, k: usize) -> Result<DMatrix<T>> {
    if 2 * k > m.len() {
        return Err(Error::Order { requested: 2 * k, available: m.len() });
    }
    Ok(DMatrix::from_fn(k + 1, k + 1, |i, j| m.m(i + j)))
}

/// Pivots of an unpivoted symmetric `LDLᵀ` elimination. Stops after the
/// first nonpositive pivot, which is the last entry returned.
pub fn ldl_pivots<T: Field>(a: &DMatrix<T>) -> Vec<T> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let piv = work[(k, k)].clone();
        pivots.push(piv.clone());
        if piv <= T::zero() {
            break;
        }
        for i in k + 1..n {
            let l = work[(i, k)].clone() / piv.clone();
            if l.is_zero() {
                continue;
            }
            for j in k + 1..=i {
                let v = work[(i, j)].clone() - l.clone() * work[(j, k)].clone();
                work[(i, j)] = v.clone();
                work[(j, i)] = v;
            }
        }
    }
    pivots
}

fn strictly_positive_definite<T: Field>(a: &DMatrix<T>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    let pivots = ldl_pivots(a);
    if pivots.len() < a.nrows() || pivots.iter().any(|p| *p <= T::zero()) {
        return false;
    }
    let max = pivots.iter().cloned().fold(T::zero(), |acc, p| if p > acc { p } else { acc });
    let min = pivots.iter().cloned().fold(max.clone(), |acc, p| if p < acc { p } else { acc });
    min > T::pivot_tolerance() * max
}

/// Strict positive definiteness of the Hankel family characterizing the
/// interior of the moment space of `m.interval`.
pub fn is_interior<T: Field>(m: &MomentVector<T>) -> bool {
    let n = m.len();
    if n == 0 {
        return false;
    }
    let hankel = |size: usize, entry: &dyn Fn(usize) -> T| DMatrix::from_fn(size, size, |i, j| entry(i + j));
    let a = hankel(n / 2 + 1, &|s| m.m(s));
    if !strictly_positive_definite(&a) {
        return false;
    }
    if m.interval == IntervalKind::Realline {
        return true;
    }
    let b = hankel((n - 1) / 2 + 1, &|s| m.m(s + 1));
    if !strictly_positive_definite(&b) {
        return false;
    }
    if m.interval == IntervalKind::Halfline {
        return true;
    }
    let c = hankel(n / 2, &|s| m.m(s + 1) - m.m(s + 2));
    let d = hankel((n - 1) / 2 + 1, &|s| m.m(s) - m.m(s + 1));
    strictly_positive_definite(&c) && strictly_positive_definite(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ratio;
    use crate::Rational;
    use proptest::prelude::*;

    fn unit(ms: &[f64]) -> MomentVector<f64> {
        MomentVector::new(IntervalKind::Unit, ms.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn hankel_examples() {
        let h = assemble_hankel(&unit(&[0.5, 0.375]), 1).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.375]));
        let h0 = assemble_hankel(&unit(&[0.3]), 0).unwrap();
        assert_eq!(h0, DMatrix::from_element(1, 1, 1.0));
        let cat = MomentVector::new(IntervalKind::Realline, vec![0.0, 1.0, 0.0, 2.0]).unwrap();
        let h = assemble_hankel(&cat, 2).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0]));
        assert!(matches!(assemble_hankel(&cat, 3), Err(Error::Order { requested: 6, available: 4 })));
    }

    #[test]
    fn interior_examples() {
        assert!(is_interior(&unit(&[0.5, 0.375, 0.3125])));
        assert!(!is_interior(&unit(&[0.5, 0.25])));
        assert!(is_interior(&MomentVector::new(IntervalKind::Halfline, vec![1.0, 2.0, 5.0]).unwrap()));
        // upper boundary m_2 = m_1
        assert!(!is_interior(&unit(&[0.5, 0.5])));
        assert!(!is_interior(&MomentVector::new(IntervalKind::Halfline, vec![-1.0]).unwrap()));
    }

    #[test]
    fn bounds_examples() {
        let b = moment_bounds(&[0.5f64], IntervalKind::Unit).unwrap();
        assert!((b.lower - 0.25).abs() < 1e-15 && (b.upper.unwrap() - 0.5).abs() < 1e-15);
        let b = moment_bounds::<f64>(&[], IntervalKind::Unit).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, Some(1.0)));
        let b = moment_bounds(&[1.0], IntervalKind::Halfline).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, None));
        assert!(matches!(moment_bounds(&[0.0], IntervalKind::Realline), Err(Error::Unsupported(_))));
        assert!(matches!(moment_bounds(&[0.5, 0.25], IntervalKind::Unit), Err(Error::Boundary { order: 2 })));
    }

    #[test]
    fn forward_map_examples() {
        let c = moments_to_canonical(&unit(&[0.5, 0.375, 0.3125, 35.0 / 128.0])).unwrap();
        assert!(close(&c.coords, &[0.5; 4], 1e-14));
        let r = moments_to_canonical(&MomentVector::new(IntervalKind::Realline, vec![0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(r.coords, vec![0.0, 1.0, 0.0]);
        let h = moments_to_canonical(&MomentVector::new(IntervalKind::Halfline, vec![1.0, 2.0, 6.0]).unwrap()).unwrap();
        assert!(close(&h.coords, &[1.0, 1.0, 2.0], 1e-14));
        let even = MomentVector::new(IntervalKind::Realline, vec![0.0, 1.0]).unwrap();
        assert_eq!(moments_to_canonical(&even), Err(Error::Parity(2)));
        assert_eq!(moments_to_canonical(&unit(&[0.5, 0.25])), Err(Error::Boundary { order: 2 }));
    }

    #[test]
    fn inverse_map_examples() {
        let c = CanonicalCoords::new(IntervalKind::Unit, vec![0.5, 0.5]).unwrap();
        assert!(close(&canonical_to_moments(&c).moments, &[0.5, 0.375], 1e-15));
        let c = CanonicalCoords::new(IntervalKind::Unit, vec![0.3, 0.9]).unwrap();
        assert_eq!(canonical_to_moments(&c).moments[0], 0.3);
        let c = CanonicalCoords::new(IntervalKind::Realline, vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(canonical_to_moments(&c).moments, vec![0.0, 1.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn jacobi_examples() {
        let c = CanonicalCoords::new(IntervalKind::Unit, vec![0.5; 7]).unwrap();
        let j = canonical_to_jacobi(&c);
        assert_eq!(j.alpha, vec![0.5; 4]);
        assert_eq!(j.beta, vec![0.125, 0.0625, 0.0625]);
        let c = CanonicalCoords::realline(vec![0.3, -1.0, 2.0], vec![0.7, 1.5]).unwrap();
        let j = canonical_to_jacobi(&c);
        assert_eq!((j.alpha, j.beta), (vec![0.3, -1.0, 2.0], vec![0.7, 1.5]));
        let c = CanonicalCoords::new(IntervalKind::Halfline, vec![1.0, 1.0, 2.0]).unwrap();
        let j = canonical_to_jacobi(&c);
        assert_eq!((j.alpha.clone(), j.beta.clone()), (vec![1.0, 3.0], vec![1.0]));
        assert_eq!(j.moments(3), vec![1.0, 2.0, 6.0]);
    }

    #[test]
    fn laguerre_chain_gives_factorials() {
        let z: Vec<f64> = (1..=10).map(|k| ((k + 1) / 2) as f64).collect();
        let m = canonical_to_moments(&CanonicalCoords::new(IntervalKind::Halfline, z).unwrap());
        let mut fact = 1.0;
        for (k, v) in m.moments.iter().enumerate() {
            fact *= (k + 1) as f64;
            assert_eq!(*v, fact);
        }
    }

    #[test]
    fn characteristic_polynomial_small() {
        // [[a, 1], [b, c]] -> x^2 - (a+c) x + (ac - b)
        let j = JacobiCoefficients { alpha: vec![2.0, 3.0], beta: vec![5.0] };
        assert_eq!(j.characteristic_polynomial().unwrap(), vec![1.0, -5.0, 1.0]);
    }

    #[test]
    fn coordinate_validation() {
        assert!(CanonicalCoords::new(IntervalKind::Unit, vec![0.5, 1.0]).is_err());
        assert!(CanonicalCoords::new(IntervalKind::Halfline, vec![0.0]).is_err());
        assert!(CanonicalCoords::new(IntervalKind::Realline, vec![-3.0, -1.0, 0.0]).is_err());
        assert_eq!(CanonicalCoords::new(IntervalKind::Realline, vec![0.0, 1.0]), Err(Error::Parity(2)));
        assert!(CanonicalCoords::new(IntervalKind::Realline, vec![-3.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn exact_unit_bounds_match_lens() {
        // m_2 ranges over [m_1^2, m_1]
        let b = moment_bounds(&[ratio(1, 3)], IntervalKind::Unit).unwrap();
        assert_eq!(b.lower, ratio(1, 9));
        assert_eq!(b.upper, Some(ratio(1, 3)));
    }

    #[test]
    fn exact_round_trip_twenty() {
        let coords: Vec<Rational> = (0..20).map(|i| ratio(5 + (i * 7) % 50, 64)).collect();
        for interval in [IntervalKind::Unit, IntervalKind::Halfline] {
            let c = CanonicalCoords::new(interval, coords.clone()).unwrap();
            let m = canonical_to_moments(&c);
            assert!(is_interior(&m));
            assert_eq!(moments_to_canonical(&m).unwrap(), c);
        }
    }

    #[test]
    fn boundary_limits() {
        let base = [0.3f64, 0.6, 0.45];
        for (p, upper) in [(1e-6, false), (1.0 - 1e-6, true)] {
            let mut coords = base.to_vec();
            coords.push(p);
            let m = canonical_to_moments(&CanonicalCoords::new(IntervalKind::Unit, coords).unwrap());
            let b = moment_bounds(&m.moments[..3], IntervalKind::Unit).unwrap();
            let target = if upper { b.upper.unwrap() } else { b.lower };
            assert!((m.moments[3] - target).abs() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn f64_round_trip_small(interval in prop::sample::select(vec![IntervalKind::Unit, IntervalKind::Halfline, IntervalKind::Realline]),
                                raw in prop::collection::vec(0.05f64..0.95, 1..=7)) {
            let mut coords = raw;
            if interval == IntervalKind::Realline && coords.len() % 2 == 0 {
                coords.pop();
            }
            prop_assume!(!coords.is_empty());
            if interval == IntervalKind::Realline {
                for (i, c) in coords.iter_mut().enumerate() {
                    if i % 2 == 0 { *c = 4.0 * *c - 2.0; }
                }
            }
            let c = CanonicalCoords::new(interval, coords).unwrap();
            let m = canonical_to_moments(&c);
            let back = moments_to_canonical(&m).unwrap();
            prop_assert!(close(&back.coords, &c.coords, 1e-9));
        }

        #[test]
        fn unit_images_are_interior(raw in prop::collection::vec(0.05f64..0.95, 1..=6)) {
            let m = canonical_to_moments(&CanonicalCoords::new(IntervalKind::Unit, raw).unwrap());
            prop_assert!(m.moments.iter().all(|v| *v > 0.0 && *v < 1.0));
            prop_assert!(is_interior(&m));
        }
    }
}
