use std::f64::consts::TAU;

use proptest::prelude::*;

use semiclassical::geometry::{
    action_along_fiber, find_intersections, poisson_bracket, seed_on_level, trace_level_curve, DomainBox,
    Observable, PhasePoint, PrequantumForm, Tolerances, TraceOptions,
};
use semiclassical::Execution;

fn cubic(c: [f64; 10]) -> Observable {
    let mut terms = Vec::new();
    let mut k = 0;
    for total in 0..=3u32 {
        for a in 0..=total {
            terms.push((a, total - a, c[k]));
            k += 1;
        }
    }
    Observable::polynomial(terms)
}

fn coefficients() -> impl Strategy<Value = [f64; 10]> {
    prop::array::uniform10(-2.0f64..2.0)
}

fn point() -> impl Strategy<Value = PhasePoint> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(q, p)| PhasePoint::new(q, p))
}

fn oscillator_fiber(obs: &Observable, b: f64) -> semiclassical::geometry::FiberCurve {
    let opts = TraceOptions::default();
    let seed = seed_on_level(obs, b, PhasePoint::new(0.0, 1.0), &opts).unwrap();
    trace_level_curve(obs, b, seed, &opts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn bracket_is_antisymmetric(a in coefficients(), b in coefficients(), x in point()) {
        let (f, g) = (cubic(a), cubic(b));
        let fg = poisson_bracket(&f, &g, x);
        let gf = poisson_bracket(&g, &f, x);
        prop_assert!((fg + gf).abs() <= 1e-12 * (1.0 + fg.abs()));
        prop_assert_eq!(poisson_bracket(&f, &f, x), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences(a in coefficients(), x in point()) {
        let f = cubic(a);
        let g = f.gradient(x);
        let e = 1e-5;
        let dq = (f.value(PhasePoint::new(x.q + e, x.p)) - f.value(PhasePoint::new(x.q - e, x.p))) / (2.0 * e);
        let dp = (f.value(PhasePoint::new(x.q, x.p + e)) - f.value(PhasePoint::new(x.q, x.p - e))) / (2.0 * e);
        let scale = 1.0 + g.norm();
        prop_assert!((g.q - dq).abs() < 1e-7 * scale, "{} vs {}", g.q, dq);
        prop_assert!((g.p - dp).abs() < 1e-7 * scale, "{} vs {}", g.p, dp);
    }

    #[test]
    fn pendulum_bracket_is_a_derivation(x in point()) {
        // {H, qp} = q H_q - p H_p
        let h = Observable::pendulum();
        let qp = Observable::polynomial([(1, 1, 1.0)]);
        let g = h.gradient(x);
        let expect = x.q * g.q - x.p * g.p;
        prop_assert!((poisson_bracket(&h, &qp, x) - expect).abs() < 1e-12);
    }

    #[test]
    fn loop_action_is_enclosed_area(b in 0.2f64..2.5) {
        let c = oscillator_fiber(&Observable::harmonic_oscillator(), b);
        prop_assert!(c.closed);
        prop_assert!((c.loop_action().unwrap() - TAU * b).abs() < 1e-8);
    }

    #[test]
    fn action_is_additive(b in 0.3f64..2.0, t in 0.2f64..1.2, u in 1.4f64..2.6) {
        let c = oscillator_fiber(&Observable::harmonic_oscillator(), b);
        let r = (2.0 * b).sqrt();
        let at = |s: f64| PhasePoint::new(r * s.cos(), r * s.sin());
        let alpha = PrequantumForm::canonical();
        let (x, y, z) = (at(0.1), at(t), at(u));
        let xy = action_along_fiber(&c, x, y, &alpha).unwrap();
        let yz = action_along_fiber(&c, y, z, &alpha).unwrap();
        let xz = action_along_fiber(&c, x, z, &alpha).unwrap();
        let period = c.loop_action().unwrap();
        let defect = (xy + yz - xz).rem_euclid(period);
        prop_assert!(defect.min(period - defect) < 1e-8, "defect {defect}");
    }

    #[test]
    fn exact_gauge_changes_arcs_by_endpoints(b in 0.3f64..2.0, g in coefficients()) {
        let c = oscillator_fiber(&Observable::harmonic_oscillator(), b);
        let r = (2.0 * b).sqrt();
        let x = PhasePoint::new(r * 0.3f64.cos(), r * 0.3f64.sin());
        let y = PhasePoint::new(r * 2.2f64.cos(), r * 2.2f64.sin());
        let f = cubic(g);
        let plain = action_along_fiber(&c, x, y, &PrequantumForm::canonical()).unwrap();
        let gauged = action_along_fiber(&c, x, y, &PrequantumForm::with_gauge(f.clone())).unwrap();
        let shift = f.value(y) - f.value(x);
        prop_assert!((gauged - plain - shift).abs() < 1e-10 * (1.0 + shift.abs()));
    }
}

#[test]
fn displaced_oscillator_area_scales_with_frequency() {
    let (omega, b) = (1.7, 0.9);
    let c = oscillator_fiber(&Observable::displaced_oscillator(omega, 0.4), b);
    assert!((c.loop_action().unwrap() - TAU * b / omega).abs() < 1e-8);
    assert!((c.period.unwrap().abs() - TAU / omega).abs() < 1e-7);
}

#[test]
fn circle_and_line_intersections_are_analytic() {
    let (b, a) = (1.0, 0.5);
    let pts = find_intersections(
        &Observable::harmonic_oscillator(),
        b,
        &Observable::position(),
        a,
        &DomainBox::square(4.0),
        &Tolerances::default(),
        Execution::Sequential,
    )
    .unwrap();
    let p = (2.0 * b - a * a).sqrt();
    assert_eq!(pts.len(), 2);
    assert!((pts[0].c.p + p).abs() < 1e-12 && (pts[1].c.p - p).abs() < 1e-12);
    for x in &pts {
        assert!((x.c.q - a).abs() < 1e-12);
        // {H, q} = -p
        assert!((x.bracket + x.c.p).abs() < 1e-12);
    }
}

#[test]
fn sequential_and_parallel_scans_agree() {
    let run = |exec| {
        find_intersections(
            &Observable::pendulum(),
            0.2,
            &Observable::displaced_oscillator(1.0, 0.5),
            0.8,
            &DomainBox::square(4.0),
            &Tolerances::default(),
            exec,
        )
        .unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}
