use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::StarError;
use crate::geometry::{Observable, PhasePoint, Polynomial};

/// Exact complex rational coefficient.
pub type Coefficient = Complex<BigRational>;

pub(crate) fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn real(r: BigRational) -> Coefficient {
    Complex::new(r, BigRational::zero())
}

/// Shortest decimal rendering of `x`, read back as an exact rational.
pub fn rational_from_f64(x: f64) -> Result<BigRational, StarError> {
    if !x.is_finite() {
        return Err(StarError::NonFinite(x));
    }
    super::syntax::parse_decimal(&format!("{x}")).ok_or(StarError::NonFinite(x))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Polynomial in `(q, p)` with exact complex rational coefficients. Keys are
/// `(q-degree, p-degree)`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolynomialObservable {
    terms: BTreeMap<(u32, u32), Coefficient>,
}

impl PolynomialObservable {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, Coefficient::one())
    }

    pub fn q() -> Self {
        Self::monomial(1, 0, Coefficient::one())
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, Coefficient::one())
    }

    pub fn monomial(a: u32, b: u32, c: Coefficient) -> Self {
        let mut out = Self::zero();
        out.add_term(a, b, c);
        out
    }

    /// `n/d · q^a p^b`
    pub fn rational_monomial(a: u32, b: u32, n: i64, d: i64) -> Self {
        Self::monomial(a, b, real(rational(n, d)))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), Coefficient)>) -> Self {
        let mut out = Self::zero();
        for ((a, b), c) in terms {
            out.add_term(a, b, c);
        }
        out
    }

    pub fn add_term(&mut self, a: u32, b: u32, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((a, b)).or_insert_with(Coefficient::zero);
        *slot = &*slot + c;
        if slot.is_zero() {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Coefficient)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: u32, b: u32) -> Coefficient {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(Coefficient::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn q_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn p_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Coefficient) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Complex conjugate of every coefficient.
    pub fn conj(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v.conj())).collect(),
        }
    }

    /// `∂_q^k ∂_p^l`
    pub fn derivative(&self, k: u32, l: u32) -> Self {
        let mut out = Self::zero();
        for (&(a, b), c) in &self.terms {
            if a < k || b < l {
                continue;
            }
            let falling = |n: u32, m: u32| (n - m + 1..=n).fold(BigInt::one(), |acc, x| acc * x);
            let f = falling(a, k) * falling(b, l);
            out.add_term(a - k, b - l, c * real(BigRational::from_integer(f)));
        }
        out
    }

    pub fn evaluate(&self, x: PhasePoint) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(a, b), c)| {
                Complex64::new(to_f64(&c.re), to_f64(&c.im)) * x.q.powi(a as i32) * x.p.powi(b as i32)
            })
            .sum()
    }

    /// Floating-point copy of the coefficients as `(a, b, coefficient)`.
    pub fn to_complex_terms(&self) -> Vec<(u32, u32, Complex64)> {
        self.terms
            .iter()
            .map(|(&(a, b), c)| (a, b, Complex64::new(to_f64(&c.re), to_f64(&c.im))))
            .collect()
    }

    /// Real polynomial observable; fails on a non-real coefficient.
    pub fn to_observable(&self) -> Result<Observable, StarError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (&(a, b), c) in &self.terms {
            if !c.im.is_zero() {
                return Err(StarError::NonRealCoefficient { q_degree: a, p_degree: b });
            }
            terms.push((a, b, to_f64(&c.re)));
        }
        Ok(Observable::Polynomial(Polynomial::new(terms)))
    }

    /// Exact copy of a polynomial observable (or a sum of them).
    pub fn from_observable(obs: &Observable) -> Result<Self, StarError> {
        match obs {
            Observable::Polynomial(poly) => {
                let mut out = Self::zero();
                for &(a, b, c) in poly.terms() {
                    out.add_term(a, b, real(rational_from_f64(c)?));
                }
                Ok(out)
            }
            Observable::Sum(parts) => parts.iter().try_fold(Self::zero(), |acc, p| Ok(acc + Self::from_observable(p)?)),
            Observable::Pendulum => Err(StarError::NotPolynomial),
        }
    }
}

impl Add for PolynomialObservable {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for ((a, b), c) in rhs.terms {
            self.add_term(a, b, c);
        }
        self
    }
}

impl Add for &PolynomialObservable {
    type Output = PolynomialObservable;
    fn add(self, rhs: Self) -> PolynomialObservable {
        self.clone() + rhs.clone()
    }
}

impl Neg for PolynomialObservable {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            terms: self.terms.into_iter().map(|(k, v)| (k, -v)).collect(),
        }
    }
}

impl Sub for PolynomialObservable {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Sub for &PolynomialObservable {
    type Output = PolynomialObservable;
    fn sub(self, rhs: Self) -> PolynomialObservable {
        self.clone() - rhs.clone()
    }
}

impl Mul for &PolynomialObservable {
    type Output = PolynomialObservable;
    fn mul(self, rhs: Self) -> PolynomialObservable {
        let mut out = PolynomialObservable::zero();
        for (&(a, b), c) in &self.terms {
            for (&(d, e), f) in &rhs.terms {
                out.add_term(a + d, b + e, c * f);
            }
        }
        out
    }
}

impl Mul for PolynomialObservable {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}
