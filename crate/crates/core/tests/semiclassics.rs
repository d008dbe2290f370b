use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use semiclassical::geometry::{reference_point, FiberCurve, Observable, PhasePoint, PrequantumForm, ReferenceLagrangian};
use semiclassical::semiclassics::{
    bohr_sommerfeld_levels, closed_fiber, compose_kernels, cyclic_amplitude, gluing_index, maslov_loop,
    maslov_segment, overlap, probability_from_terms, transition_probability, write_amplitude_table, BsOptions,
    ComposeOptions, HessianMode, OverlapOptions, SemiclassicalError, SystemLevel,
};
use semiclassical::Execution;

fn lambda() -> ReferenceLagrangian {
    ReferenceLagrangian::slope(1.0)
}

fn bracket_opts() -> OverlapOptions {
    OverlapOptions::default().with_hessian(HessianMode::Bracket)
}

fn wrap(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

/// Difference of `S/h + πμ/2` between the two arcs from `c` to `x` on a
/// closed fiber.
fn arc_exponent_gap(curve: &FiberCurve, c: PhasePoint, x: PhasePoint, other: &Observable, h: f64) -> f64 {
    let pc = curve.locate(c).unwrap();
    let px = curve.locate(x).unwrap();
    let alpha = PrequantumForm::canonical();
    let fwd_s = curve.action_between(&pc, &px) + alpha.exact_part(c, x);
    let fwd_m = maslov_segment(curve, &pc, &px, other).unwrap().index;
    // the complement runs x → c and is traversed backwards
    let back_s = -(curve.action_between(&px, &pc) + alpha.exact_part(x, c));
    let back_m = -maslov_segment(curve, &px, &pc, other).unwrap().index;
    (fwd_s - back_s) / h + FRAC_PI_2 * (fwd_m - back_m) as f64
}

#[test]
fn oscillator_ladder() {
    let h = 0.1;
    let ladder = bohr_sommerfeld_levels(&Observable::harmonic_oscillator(), h, (0.0, 3.1), &BsOptions::default()).unwrap();
    assert_eq!(ladder.levels.len(), 31);
    for l in &ladder.levels {
        assert!((l.b - h * (l.n as f64 + 0.5)).abs() < 1e-9);
        assert_eq!(l.loop_maslov, 2);
        assert!((l.period.abs() - TAU).abs() < 1e-7);
    }
}

#[test]
fn ladder_is_identical_in_both_modes() {
    let run = |exec| {
        let opts = BsOptions {
            exec,
            ..BsOptions::default()
        };
        bohr_sommerfeld_levels(&Observable::pendulum(), 0.05, (-0.9, 0.6), &opts).unwrap().levels
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn plane_wave_probability() {
    for h in [1.0, 0.1, 0.01] {
        let p = transition_probability(
            &SystemLevel::new(Observable::position(), 0.3),
            &SystemLevel::new(Observable::momentum(), -1.1),
            &lambda(),
            h,
            &bracket_opts(),
        )
        .unwrap();
        let exact = 1.0 / (TAU * h);
        assert!((p.value - exact).abs() < 1e-10 * exact);
    }
}

#[test]
fn loop_and_complementary_arcs() {
    let curve = closed_fiber(&Observable::harmonic_oscillator(), 0.75, &BsOptions::default()).unwrap();
    let q = Observable::position();
    assert_eq!(maslov_loop(&curve, &q).unwrap().index, 2);
    let r = 1.5f64.sqrt();
    for (s, t) in [(0.4, 2.0), (1.0, 4.0), (3.5, 5.9)] {
        let a = curve.locate(PhasePoint::new(r * f64::cos(s), r * f64::sin(s))).unwrap();
        let b = curve.locate(PhasePoint::new(r * f64::cos(t), r * f64::sin(t))).unwrap();
        let there = maslov_segment(&curve, &a, &b, &q).unwrap().index;
        let back = maslov_segment(&curve, &b, &a, &q).unwrap().index;
        assert_eq!(there + back, 2);
    }
    assert!(matches!(
        maslov_loop(
            &SystemLevel::new(Observable::momentum(), 0.2).trace(&Default::default()).unwrap(),
            &q
        ),
        Err(SemiclassicalError::NoClosedFiber { .. })
    ));
}

#[test]
fn exponent_is_arc_independent_on_bohr_sommerfeld_levels() {
    let h = 0.1;
    let ho = Observable::harmonic_oscillator();
    let q = Observable::position();
    let curve = closed_fiber(&ho, 0.75, &BsOptions::default()).unwrap();
    let x = reference_point(&curve, &lambda()).unwrap();
    let on = |r: f64, t: f64| PhasePoint::new(r * t.cos(), r * t.sin());
    for t in [1.2, 3.9] {
        let c = on(1.5f64.sqrt(), t);
        let gap = arc_exponent_gap(&curve, c, x, &q, h);
        assert!(wrap(gap).abs() < 1e-8, "gap {gap}");
    }
    // off the ladder the two arcs disagree by the missing fraction of 2π
    let off = closed_fiber(&ho, 0.8, &BsOptions::default()).unwrap();
    let x = reference_point(&off, &lambda()).unwrap();
    let c = on(1.6f64.sqrt(), 1.2);
    let gap = wrap(arc_exponent_gap(&off, c, x, &q, h));
    assert!((gap.abs() - PI).abs() < 1e-6, "{gap}");
}

#[test]
fn hessians_agree_in_both_modes() {
    let sys = (
        SystemLevel::new(Observable::pendulum(), 0.3),
        SystemLevel::new(Observable::displaced_oscillator(1.3, 0.4), 1.5),
    );
    let fd = overlap(&sys.0, &sys.1, &lambda(), &PrequantumForm::canonical(), 0.1, &OverlapOptions::default()).unwrap();
    let br = overlap(&sys.0, &sys.1, &lambda(), &PrequantumForm::canonical(), 0.1, &bracket_opts()).unwrap();
    assert_eq!(fd.terms.len(), br.terms.len());
    assert!(!fd.terms.is_empty());
    for (a, b) in fd.terms.iter().zip(&br.terms) {
        assert!((a.hessian_det.abs() - b.hessian_det.abs()).abs() < 1e-4 * b.hessian_det.abs());
        assert_eq!(a.maslov, b.maslov);
    }
}

#[test]
fn probability_is_squared_modulus() {
    let amp = overlap(
        &SystemLevel::new(Observable::position(), 0.4),
        &SystemLevel::new(Observable::harmonic_oscillator(), 0.65),
        &lambda(),
        &PrequantumForm::canonical(),
        0.1,
        &bracket_opts(),
    )
    .unwrap();
    assert_eq!(amp.terms.len(), 2);
    let p = probability_from_terms(&amp);
    assert!((p - amp.value.norm_sqr()).abs() < 1e-12 * p);
}

#[test]
fn sheared_linear_gluing_is_exact() {
    let h = 0.1;
    let s1 = SystemLevel::new(Observable::position(), 0.3);
    let s2 = SystemLevel::new(Observable::linear(1.0, 0.7), -0.2);
    let opts = bracket_opts();
    let u01 = |b: f64| overlap(&s1, &SystemLevel::new(Observable::momentum(), b), &lambda(), &PrequantumForm::canonical(), h, &opts);
    let u20 = |b: f64| overlap(&SystemLevel::new(Observable::momentum(), b), &s2, &lambda(), &PrequantumForm::canonical(), h, &opts);
    let comp = compose_kernels(&u20, &u01, (-3.0, 3.0), h, &ComposeOptions::default()).unwrap();
    let direct = overlap(&s1, &s2, &lambda(), &PrequantumForm::canonical(), h, &opts).unwrap();
    assert_eq!(comp.points.len(), 1);
    assert!((comp.value.norm() - direct.value.norm()).abs() < 1e-10 * direct.value.norm());
    let (_, residual) = gluing_index(comp.value, direct.value);
    assert!(residual.abs() < 1e-6);
}

#[test]
fn literal_linear_triple_is_degenerate() {
    let h = 0.1;
    let s1 = SystemLevel::new(Observable::position(), 0.3);
    let s2 = SystemLevel::new(Observable::position(), -0.2);
    let opts = bracket_opts();
    let u01 = |b: f64| overlap(&s1, &SystemLevel::new(Observable::momentum(), b), &lambda(), &PrequantumForm::canonical(), h, &opts);
    let u20 = |b: f64| overlap(&SystemLevel::new(Observable::momentum(), b), &s2, &lambda(), &PrequantumForm::canonical(), h, &opts);
    let r = compose_kernels(&u20, &u01, (-3.0, 3.0), h, &ComposeOptions::default());
    assert!(matches!(r, Err(SemiclassicalError::DegenerateStationaryPoint { .. })), "{r:?}");
}

#[test]
fn two_cycle_is_squared_modulus() {
    let h = 0.05;
    let sys = [
        SystemLevel::new(Observable::position(), 0.35),
        SystemLevel::new(Observable::harmonic_oscillator(), 0.625),
    ];
    let cyc = cyclic_amplitude(&sys, None, &lambda(), &PrequantumForm::canonical(), h, &bracket_opts()).unwrap();
    let a = overlap(&sys[0], &sys[1], &lambda(), &PrequantumForm::canonical(), h, &bracket_opts()).unwrap();
    let b = overlap(&sys[1], &sys[0], &lambda(), &PrequantumForm::canonical(), h, &bracket_opts()).unwrap();
    assert!((cyc.value - a.value * b.value).norm() < 1e-10 * cyc.value.norm());
    assert!((cyc.value.norm() - a.value.norm_sqr()).abs() < 1e-10 * cyc.value.norm());
}

#[test]
fn invalid_inputs_are_rejected() {
    let sys = SystemLevel::new(Observable::position(), 0.0);
    let r = overlap(&sys, &sys, &lambda(), &PrequantumForm::canonical(), -1.0, &OverlapOptions::default());
    assert!(matches!(r, Err(SemiclassicalError::InvalidInput(_))));
    let r = cyclic_amplitude(&[sys], None, &lambda(), &PrequantumForm::canonical(), 0.1, &OverlapOptions::default());
    assert!(matches!(r, Err(SemiclassicalError::InvalidInput(_))));
}

#[test]
fn amplitude_table_has_fixed_columns() {
    let amp = overlap(
        &SystemLevel::new(Observable::position(), 0.3),
        &SystemLevel::new(Observable::momentum(), 0.1),
        &lambda(),
        &PrequantumForm::canonical(),
        0.5,
        &bracket_opts(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_amplitude_table(&[amp.clone(), amp], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "b1,b2,h,re,im,abs,n_terms");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",1"));
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 24,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn gauge_changes_phase_only(c in prop::array::uniform6(-1.0f64..1.0), b1 in -0.8f64..0.8) {
        let h = 0.1;
        let f = Observable::polynomial([(1, 0, c[0]), (0, 1, c[1]), (2, 0, c[2]), (1, 1, c[3]), (0, 2, c[4]), (3, 0, c[5])]);
        let sys = (
            SystemLevel::new(Observable::position(), b1),
            SystemLevel::new(Observable::harmonic_oscillator(), 0.75),
        );
        let plain = overlap(&sys.0, &sys.1, &lambda(), &PrequantumForm::canonical(), h, &bracket_opts()).unwrap();
        let gauged = overlap(&sys.0, &sys.1, &lambda(), &PrequantumForm::with_gauge(f.clone()), h, &bracket_opts()).unwrap();
        prop_assert!((plain.value.norm() - gauged.value.norm()).abs() < 1e-12);
        let [x1, x2] = plain.reference_points;
        let expect = (f.value(x1) - f.value(x2)) / h;
        let shift = (gauged.value / plain.value).arg();
        prop_assert!(wrap(shift - expect).abs() < 1e-8, "{shift} vs {expect}");
        prop_assert!(gauged.value != Complex64::new(0.0, 0.0));
    }
}

#[test]
fn only_the_traced_pendulum_well_contributes() {
    let amp = overlap(
        &SystemLevel::new(Observable::momentum(), -0.2),
        &SystemLevel::new(Observable::pendulum(), -0.5),
        &lambda(),
        &PrequantumForm::canonical(),
        0.1,
        &bracket_opts(),
    )
    .unwrap();
    assert_eq!(amp.terms.len(), 2);
    assert!(amp.terms.iter().all(|t| t.c.c.q.abs() < PI));
}
