use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;

use super::poly::{Coefficient, PolynomialObservable};
use crate::geometry::PhasePoint;

/// Power series in `h` truncated at a fixed order, with polynomial
/// coefficients: `Σ_{n ≤ order} hⁿ fₙ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalSeries {
    coeffs: Vec<PolynomialObservable>,
}

impl FormalSeries {
    pub fn zero(order: usize) -> Self {
        FormalSeries {
            coeffs: vec![PolynomialObservable::zero(); order + 1],
        }
    }

    /// `f` as a series with no `h` dependence.
    pub fn constant(f: PolynomialObservable, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = f;
        s
    }

    /// Series from its coefficients; the order is `coeffs.len() − 1`.
    pub fn from_coefficients(mut coeffs: Vec<PolynomialObservable>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(PolynomialObservable::zero());
        }
        FormalSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `hⁿ` (zero beyond the order).
    pub fn coefficient(&self, n: usize) -> PolynomialObservable {
        self.coeffs.get(n).cloned().unwrap_or_default()
    }

    pub fn coefficients(&self) -> &[PolynomialObservable] {
        &self.coeffs
    }

    pub(crate) fn coefficient_mut(&mut self, n: usize) -> &mut PolynomialObservable {
        &mut self.coeffs[n]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(PolynomialObservable::is_zero)
    }

    /// Same series cut (or zero-padded) to `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, PolynomialObservable::zero());
        FormalSeries { coeffs }
    }

    pub fn scale(&self, c: &Coefficient) -> Self {
        FormalSeries {
            coeffs: self.coeffs.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// Conjugates every coefficient (`h` is real).
    pub fn conj(&self) -> Self {
        FormalSeries {
            coeffs: self.coeffs.iter().map(PolynomialObservable::conj).collect(),
        }
    }

    /// Numerical value at a phase point for a given `h`.
    pub fn evaluate(&self, x: PhasePoint, h: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, f)| f.evaluate(x) * h.powi(n as i32))
            .sum()
    }
}

impl From<PolynomialObservable> for FormalSeries {
    fn from(f: PolynomialObservable) -> Self {
        FormalSeries::constant(f, 0)
    }
}

impl Add for &FormalSeries {
    type Output = FormalSeries;
    /// Truncates at the smaller order.
    fn add(self, rhs: Self) -> FormalSeries {
        let order = self.order().min(rhs.order());
        FormalSeries {
            coeffs: (0..=order).map(|n| &self.coeffs[n] + &rhs.coeffs[n]).collect(),
        }
    }
}

impl Add for FormalSeries {
    type Output = FormalSeries;
    fn add(self, rhs: Self) -> FormalSeries {
        &self + &rhs
    }
}

impl Neg for FormalSeries {
    type Output = FormalSeries;
    fn neg(self) -> FormalSeries {
        FormalSeries {
            coeffs: self.coeffs.into_iter().map(|f| -f).collect(),
        }
    }
}

impl Sub for &FormalSeries {
    type Output = FormalSeries;
    fn sub(self, rhs: Self) -> FormalSeries {
        let order = self.order().min(rhs.order());
        FormalSeries {
            coeffs: (0..=order).map(|n| &self.coeffs[n] - &rhs.coeffs[n]).collect(),
        }
    }
}

impl Sub for FormalSeries {
    type Output = FormalSeries;
    fn sub(self, rhs: Self) -> FormalSeries {
        &self - &rhs
    }
}
