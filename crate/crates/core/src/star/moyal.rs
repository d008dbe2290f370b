use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::{Coefficient, PolynomialObservable};
use super::series::FormalSeries;
use super::StarError;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 8;

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * (n - j) / (j + 1))
}

/// `(i/2)ⁿ / n!` as an exact complex rational.
fn moyal_weight(n: u32) -> Coefficient {
    let fact = (1..=n).fold(BigInt::one(), |acc, k| acc * k);
    let mag = BigRational::new(BigInt::one(), BigInt::from(2).pow(n) * fact);
    let zero = BigRational::zero();
    match n % 4 {
        0 => Complex::new(mag, zero),
        1 => Complex::new(zero, mag),
        2 => Complex::new(-mag, zero),
        _ => Complex::new(zero, -mag),
    }
}

/// The n-th Moyal bidifferential operator without its `hⁿ`:
/// `(i/2)ⁿ/n! Σ_k C(n,k) (−1)^k ∂_q^{n−k}∂_p^k f · ∂_p^{n−k}∂_q^k g`.
pub fn bidifferential(f: &PolynomialObservable, g: &PolynomialObservable, n: u32) -> PolynomialObservable {
    let mut acc = PolynomialObservable::zero();
    for k in 0..=n {
        let df = f.derivative(n - k, k);
        if df.is_zero() {
            continue;
        }
        let dg = g.derivative(k, n - k);
        if dg.is_zero() {
            continue;
        }
        let mut c = BigRational::from_integer(binomial(n, k));
        if k % 2 == 1 {
            c = -c;
        }
        acc = acc + (&df * &dg).scale(&Complex::new(c, BigRational::zero()));
    }
    acc.scale(&moyal_weight(n))
}

fn check_order(order: usize) -> Result<(), StarError> {
    if order > MAX_ORDER {
        Err(StarError::OrderOverflow { order, max: MAX_ORDER })
    } else {
        Ok(())
    }
}

/// Moyal product truncated at `hᴺ`. Coefficients of `f` and `g` beyond
/// their own orders are taken as zero.
pub fn moyal_product(f: &FormalSeries, g: &FormalSeries, order: usize) -> Result<FormalSeries, StarError> {
    check_order(order)?;
    let mut out = FormalSeries::zero(order);
    for i in 0..=f.order().min(order) {
        let fi = f.coefficient(i);
        if fi.is_zero() {
            continue;
        }
        for j in 0..=g.order().min(order - i) {
            let gj = g.coefficient(j);
            if gj.is_zero() {
                continue;
            }
            let top = (order - i - j).min(fi.degree().min(gj.degree()) as usize);
            for n in 0..=top {
                let m = bidifferential(&fi, &gj, n as u32);
                let slot = out.coefficient_mut(i + j + n);
                *slot = &*slot + &m;
            }
        }
    }
    Ok(out)
}

/// `(f⋆g)⋆k − f⋆(g⋆k)` truncated at `hᴺ`.
pub fn associativity_defect(
    f: &FormalSeries,
    g: &FormalSeries,
    k: &FormalSeries,
    order: usize,
) -> Result<FormalSeries, StarError> {
    let left = moyal_product(&moyal_product(f, g, order)?, k, order)?;
    let right = moyal_product(f, &moyal_product(g, k, order)?, order)?;
    Ok(left - right)
}

/// `f⋆g − g⋆f`
pub fn star_commutator(f: &FormalSeries, g: &FormalSeries, order: usize) -> Result<FormalSeries, StarError> {
    Ok(moyal_product(f, g, order)? - moyal_product(g, f, order)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::star::poly::{rational, real};

    fn series(f: PolynomialObservable) -> FormalSeries {
        FormalSeries::constant(f, 0)
    }

    #[test]
    fn canonical_pair() {
        let q = series(PolynomialObservable::q());
        let p = series(PolynomialObservable::p());
        let qp = moyal_product(&q, &p, 2).unwrap();
        assert_eq!(qp.coefficient(0), PolynomialObservable::rational_monomial(1, 1, 1, 1));
        let half_i = Complex::new(BigRational::zero(), rational(1, 2));
        assert_eq!(qp.coefficient(1), PolynomialObservable::monomial(0, 0, half_i));
        assert!(qp.coefficient(2).is_zero());
        let comm = star_commutator(&q, &p, 3).unwrap();
        assert_eq!(comm.coefficient(1), PolynomialObservable::monomial(0, 0, Complex::new(BigRational::zero(), rational(1, 1))));
    }

    #[test]
    fn q2_star_p2() {
        let f = series(PolynomialObservable::rational_monomial(2, 0, 1, 1));
        let g = series(PolynomialObservable::rational_monomial(0, 2, 1, 1));
        let s = moyal_product(&f, &g, 4).unwrap();
        assert_eq!(s.coefficient(0), PolynomialObservable::rational_monomial(2, 2, 1, 1));
        assert_eq!(
            s.coefficient(1),
            PolynomialObservable::monomial(1, 1, Complex::new(BigRational::zero(), rational(2, 1)))
        );
        assert_eq!(s.coefficient(2), PolynomialObservable::monomial(0, 0, real(rational(-1, 2))));
        assert!(s.coefficient(3).is_zero() && s.coefficient(4).is_zero());
    }

    #[test]
    fn order_bound() {
        let one = series(PolynomialObservable::one());
        assert!(matches!(
            moyal_product(&one, &one, 9),
            Err(StarError::OrderOverflow { order: 9, .. })
        ));
    }
}
