use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use proptest::prelude::*;

use semiclassical::geometry::{Observable, PhasePoint, PrequantumForm, ReferenceLagrangian};
use semiclassical::semiclassics::{overlap, HessianMode, OverlapOptions, SystemLevel};
use semiclassical::star::{
    associativity_defect, homomorphism_check, moyal_product, parse_series, semiclassical_matrix_element,
    star_commutator, Coefficient, FormalSeries, HomomorphismOptions, PolynomialObservable, StarError,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn coefficient((re, im): (i64, i64)) -> Coefficient {
    Complex::new(rat(re, 3), rat(im, 5))
}

/// Random polynomial of total degree ≤ 3 with small complex rational
/// coefficients.
fn polynomial() -> impl Strategy<Value = PolynomialObservable> {
    prop::collection::vec(((0u32..=3, 0u32..=3), (-4i64..=4, -3i64..=3)), 1..5).prop_map(|terms| {
        let mut f = PolynomialObservable::zero();
        for ((a, b), c) in terms {
            if a + b <= 3 {
                f.add_term(a, b, coefficient(c));
            }
        }
        f
    })
}

fn series(f: PolynomialObservable) -> FormalSeries {
    FormalSeries::constant(f, 0)
}

fn monomials(max_degree: u32) -> Vec<FormalSeries> {
    (0..=max_degree)
        .flat_map(|d| (0..=d).map(move |a| series(PolynomialObservable::rational_monomial(a, d - a, 1, 1))))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn associative_on_random_polynomials(f in polynomial(), g in polynomial(), k in polynomial()) {
        let d = associativity_defect(&series(f), &series(g), &series(k), 6).unwrap();
        prop_assert!(d.is_zero());
    }

    #[test]
    fn conjugation_reverses_products(f in polynomial(), g in polynomial()) {
        let (f, g) = (series(f), series(g));
        let fg = moyal_product(&f, &g, 6).unwrap();
        let gf = moyal_product(&g.conj(), &f.conj(), 6).unwrap();
        prop_assert_eq!(fg.conj(), gf);
        prop_assert_eq!(fg.conj().conj(), fg);
    }

    #[test]
    fn commutator_starts_with_the_bracket(f in polynomial(), g in polynomial()) {
        // [f, g]⋆ = ih{f, g} + O(h³)
        let c = star_commutator(&series(f.clone()), &series(g.clone()), 4).unwrap();
        let bracket = &f.derivative(1, 0) * &g.derivative(0, 1) - &f.derivative(0, 1) * &g.derivative(1, 0);
        let i = Complex::new(rat(0, 1), rat(1, 1));
        prop_assert!(c.coefficient(0).is_zero());
        prop_assert_eq!(c.coefficient(1), bracket.scale(&i));
        prop_assert!(c.coefficient(2).is_zero());
    }

    #[test]
    fn display_round_trips(f in polynomial()) {
        let text = f.to_string();
        let back: PolynomialObservable = text.parse().unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn monomial_triples_up_to_degree_four() {
    let m = monomials(4);
    assert_eq!(m.len(), 15);
    for f in &m {
        for g in &m {
            for k in &m {
                assert!(associativity_defect(f, g, k, 6).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn q_squared_star_p_squared() {
    let s = moyal_product(
        &parse_series("q^2", 4).unwrap(),
        &parse_series("p^2", 4).unwrap(),
        4,
    )
    .unwrap();
    assert_eq!(s, parse_series("q^2 p^2 + 2 i h q p - 1/2 h^2", 4).unwrap());
    assert_eq!(s.to_string(), "q^2 p^2 + 2 i h q p - 1/2 h^2");
}

#[test]
fn bilinear_and_unital() {
    let f = parse_series("q p - 2 q^3", 5).unwrap();
    let g = parse_series("p^2 + 1/3 q", 5).unwrap();
    let k = parse_series("i q^2 p", 5).unwrap();
    let one = parse_series("1", 5).unwrap();
    assert_eq!(moyal_product(&one, &f, 5).unwrap(), f);
    assert_eq!(moyal_product(&f, &one, 5).unwrap(), f);
    let lhs = moyal_product(&f, &(g.clone() + k.clone()), 5).unwrap();
    let rhs = moyal_product(&f, &g, 5).unwrap() + moyal_product(&f, &k, 5).unwrap();
    assert_eq!(lhs, rhs);
}

#[test]
fn truncation_is_consistent() {
    let f = parse_series("q^3 p + h q", 6).unwrap();
    let g = parse_series("p^3 - h^2 p", 6).unwrap();
    let high = moyal_product(&f, &g, 6).unwrap();
    let low = moyal_product(&f.with_order(3), &g.with_order(3), 3).unwrap();
    assert_eq!(high.with_order(3), low);
}

#[test]
fn errors() {
    let one = parse_series("1", 2).unwrap();
    assert!(matches!(moyal_product(&one, &one, 9), Err(StarError::OrderOverflow { order: 9, max: 8 })));
    match "q^2 + * p".parse::<PolynomialObservable>() {
        Err(StarError::Parse { position, .. }) => assert_eq!(position, 6),
        other => panic!("{other:?}"),
    }
    assert!("h q".parse::<PolynomialObservable>().is_err());
    assert!("q *".parse::<PolynomialObservable>().is_err());
    assert_eq!("2 * q * p".parse::<PolynomialObservable>().unwrap(), "2 q p".parse().unwrap());
    let complex: PolynomialObservable = "i q".parse().unwrap();
    assert!(matches!(complex.to_observable(), Err(StarError::NonRealCoefficient { .. })));
    assert!(matches!(
        PolynomialObservable::from_observable(&Observable::pendulum()),
        Err(StarError::NotPolynomial)
    ));
}

#[test]
fn observable_conversion_and_evaluation() {
    let ho = PolynomialObservable::from_observable(&Observable::harmonic_oscillator()).unwrap();
    assert_eq!(ho.to_string(), "1/2 q^2 + 1/2 p^2");
    let x = PhasePoint::new(0.3, -1.2);
    assert!((ho.evaluate(x).re - Observable::harmonic_oscillator().value(x)).abs() < 1e-15);
    assert_eq!(ho.to_observable().unwrap(), Observable::harmonic_oscillator());
}

fn bracket_opts() -> OverlapOptions {
    OverlapOptions::default().with_hessian(HessianMode::Bracket)
}

#[test]
fn fiber_constant_symbol_scales_the_overlap() {
    let (h, b) = (0.1, 0.65);
    let s1 = SystemLevel::new(Observable::position(), 0.4);
    let s2 = SystemLevel::new(Observable::harmonic_oscillator(), b);
    let lambda = ReferenceLagrangian::slope(1.0);
    let alpha = PrequantumForm::canonical();
    let f = parse_series("1/2 q^2 + 1/2 p^2", 0).unwrap();
    let weighted = semiclassical_matrix_element(&f, &s1, &s2, &lambda, &alpha, h, &bracket_opts()).unwrap();
    let plain = overlap(&s1, &s2, &lambda, &alpha, h, &bracket_opts()).unwrap();
    for (w, t) in weighted.terms.iter().zip(&plain.terms) {
        assert!((w.contribution - t.contribution * b).norm() < 1e-12 * t.contribution.norm());
    }
    assert!((weighted.value - plain.value * b).norm() < 1e-12 * plain.value.norm());
}

#[test]
fn homomorphism_for_linear_fibrations() {
    let lambda = ReferenceLagrangian::slope(1.0);
    let alpha = PrequantumForm::canonical();
    let s1 = SystemLevel::new(Observable::momentum(), 0.4);
    let s2 = SystemLevel::new(Observable::linear(1.0, 0.7), -0.3);
    let opts = HomomorphismOptions {
        overlap: bracket_opts(),
        ..HomomorphismOptions::default()
    };
    let f = parse_series("q + 2 p", 2).unwrap();
    let g = parse_series("p^2 - q", 2).unwrap();
    for h in [0.1, 0.05] {
        let r = homomorphism_check(&f, &g, &s1, &s2, &lambda, &alpha, h, &opts).unwrap();
        assert!(r.deviation < 1e-8, "h = {h}: {:e}", r.deviation);
        assert_eq!(r.gluing_indices.len(), 1);
    }
}

#[test]
fn homomorphism_between_oscillators() {
    let lambda = ReferenceLagrangian::slope(1.0);
    let alpha = PrequantumForm::canonical();
    let s1 = SystemLevel::new(Observable::harmonic_oscillator(), 0.5);
    let s2 = SystemLevel::new(Observable::displaced_oscillator(1.0, 0.8), 0.5);
    let opts = HomomorphismOptions {
        interval: (-0.1, 0.9),
        overlap: bracket_opts(),
        ..HomomorphismOptions::default()
    };
    let f = parse_series("p", 2).unwrap();
    let g = parse_series("q^2", 2).unwrap();
    for h in [0.1, 0.05, 0.025] {
        let r = homomorphism_check(&f, &g, &s1, &s2, &lambda, &alpha, h, &opts).unwrap();
        // the stationary-phase stencils leave an h-independent floor near 2e-7
        assert!(r.deviation < 1e-6, "h = {h}: {:e}", r.deviation);
        assert_eq!(r.gluing_indices, [1, 1]);
    }
}
