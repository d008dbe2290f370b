//! Stationary-phase overlaps of eigenstates of two fibrations.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::maslov::maslov_segment;
use super::{SemiclassicalError, Warning};
use crate::exec::Execution;
use crate::geometry::{
    action_between_positions, intersections_along, newton_polish, reference_point, seed_on_level,
    trace_level_curve, CurvePosition, FiberCurve, GeometryError, IntersectionPoint, Observable, PhasePoint,
    PrequantumForm, ReferenceLagrangian, TraceOptions,
};

/// An observable together with one of its levels. `anchor` selects the
/// connected component of the level set nearest to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemLevel {
    pub observable: Observable,
    pub level: f64,
    #[serde(default)]
    pub anchor: PhasePoint,
}

impl SystemLevel {
    pub fn new(observable: Observable, level: f64) -> Self {
        SystemLevel {
            observable,
            level,
            anchor: PhasePoint::default(),
        }
    }

    pub fn with_anchor(mut self, anchor: PhasePoint) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn at_level(&self, level: f64) -> Self {
        SystemLevel {
            level,
            ..self.clone()
        }
    }

    pub fn trace(&self, opts: &TraceOptions) -> Result<FiberCurve, SemiclassicalError> {
        let seed = seed_on_level(&self.observable, self.level, self.anchor, opts)?;
        Ok(trace_level_curve(&self.observable, self.level, seed, opts)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMode {
    /// Centered finite differences of the phase in `(b₁, b₂)`, cross-checked
    /// against `1/|{H₁,H₂}|`.
    #[default]
    FiniteDifference,
    /// `1/|{H₁,H₂}(c)|` directly.
    Bracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlapOptions {
    pub trace: TraceOptions,
    pub hessian: HessianMode,
    pub exec: Execution,
}

impl OverlapOptions {
    pub fn with_hessian(mut self, mode: HessianMode) -> Self {
        self.hessian = mode;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

/// One intersection point's summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapTerm {
    pub c: IntersectionPoint,
    /// `∫_{c→x₁} α − ∫_{c→x₂} α`
    pub action: f64,
    pub maslov: i32,
    pub hessian_det: f64,
    pub contribution: Complex64,
}

impl OverlapTerm {
    pub fn assemble(c: IntersectionPoint, action: f64, maslov: i32, hessian_det: f64, h: f64) -> Self {
        let phase = action / h + FRAC_PI_2 * maslov as f64;
        OverlapTerm {
            c,
            action,
            maslov,
            hessian_det,
            contribution: Complex64::from_polar(hessian_det.abs().sqrt(), phase),
        }
    }
}

/// `value = constant · (2πh)^power · Σ contributions`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefactorConvention {
    pub constant: f64,
    pub two_pi_h_power: f64,
}

impl PrefactorConvention {
    pub fn factor(&self, h: f64) -> f64 {
        self.constant * (TAU * h).powf(self.two_pi_h_power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalAmplitude {
    pub h: f64,
    pub b1: f64,
    pub b2: f64,
    pub terms: Vec<OverlapTerm>,
    pub value: Complex64,
    pub prefactor: PrefactorConvention,
    /// `x₁ = 𝓛₁ ∩ Λ` and `x₂ = 𝓛₂ ∩ Λ`
    pub reference_points: [PhasePoint; 2],
    pub warnings: Vec<Warning>,
}

impl SemiclassicalAmplitude {
    pub(crate) fn from_terms(
        h: f64,
        b1: f64,
        b2: f64,
        terms: Vec<OverlapTerm>,
        reference_points: [PhasePoint; 2],
        warnings: Vec<Warning>,
    ) -> Self {
        let prefactor = PrefactorConvention {
            constant: 1.0,
            two_pi_h_power: -0.5,
        };
        let sum: Complex64 = terms.iter().map(|t| t.contribution).sum();
        SemiclassicalAmplitude {
            h,
            b1,
            b2,
            value: prefactor.factor(h) * sum,
            terms,
            prefactor,
            reference_points,
            warnings,
        }
    }

    /// JSON dump of the per-term data.
    pub fn write_terms_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, self)
    }
}

/// Writes amplitude rows with columns `b1,b2,h,re,im,abs,n_terms`.
pub fn write_amplitude_table<W: Write>(rows: &[SemiclassicalAmplitude], mut w: W) -> std::io::Result<()> {
    writeln!(w, "b1,b2,h,re,im,abs,n_terms")?;
    for a in rows {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            a.b1,
            a.b2,
            a.h,
            a.value.re,
            a.value.im,
            a.value.norm(),
            a.terms.len()
        )?;
    }
    Ok(())
}

/// Both fibers with their reference points.
#[derive(Debug, Clone)]
pub(crate) struct FiberPair {
    pub f1: FiberCurve,
    pub f2: FiberCurve,
    pub x1: CurvePosition,
    pub x2: CurvePosition,
}

impl FiberPair {
    pub(crate) fn new(
        f1: FiberCurve,
        f2: FiberCurve,
        lambda: &ReferenceLagrangian,
    ) -> Result<Self, SemiclassicalError> {
        let x1 = f1.locate(reference_point(&f1, lambda)?)?;
        let x2 = f2.locate(reference_point(&f2, lambda)?)?;
        Ok(FiberPair { f1, f2, x1, x2 })
    }

    /// `(∫_{c→x₁} α, ∫_{c→x₂} α)` and the positions of `c` on each fiber.
    fn arcs(
        &self,
        c: PhasePoint,
        alpha: &PrequantumForm,
    ) -> Result<(f64, f64, CurvePosition), SemiclassicalError> {
        let p1 = self.f1.locate(c)?;
        let p2 = self.f2.locate(c)?;
        let s1 = action_between_positions(&self.f1, &p1, &self.x1, alpha);
        let s2 = action_between_positions(&self.f2, &p2, &self.x2, alpha);
        Ok((s1, s2, p2))
    }
}

fn unwrap_near(value: f64, reference: f64, period: Option<f64>) -> f64 {
    match period {
        Some(l) if l != 0.0 => value + ((reference - value) / l).round() * l,
        _ => value,
    }
}

/// Phase data of one term, without the Hessian.
pub(crate) struct TermCore {
    pub c: IntersectionPoint,
    pub arcs: (f64, f64),
    pub maslov: i32,
}

pub(crate) fn term_cores(
    pair: &FiberPair,
    alpha: &PrequantumForm,
    exec: Execution,
) -> Result<Vec<TermCore>, SemiclassicalError> {
    let h1 = &pair.f1.observable;
    let mut pts = intersections_along(&pair.f1, &pair.f2.observable, pair.f2.level)?;
    if pair.f2.closed {
        // a level set can have several closed components (pendulum wells);
        // only the traced one is the Lagrangian
        pts.retain(|ip| !matches!(pair.f2.locate(ip.c), Err(GeometryError::PointNotOnFiber { .. })));
    }
    exec.try_map(&pts, |ip| {
        let (s1, s2, p2) = pair.arcs(ip.c, alpha)?;
        let m = maslov_segment(&pair.f2, &p2, &pair.x2, h1)?;
        let mut c = *ip;
        c.branch_2 = Some(p2.index);
        Ok(TermCore {
            c,
            arcs: (s1, s2),
            maslov: m.index,
        })
    })
}

/// Relative tolerance of the finite-difference Hessian cross-check.
pub fn hessian_check_tolerance(fd_step: f64) -> f64 {
    (1e-5f64).max(10.0 * fd_step * fd_step)
}

/// Mixed second difference `∂²S/∂b₁∂b₂` at each term, by retracing both
/// fibers at `b ± fd_step` and continuing each intersection point by Newton.
fn fd_hessians(
    pair: &FiberPair,
    cores: &[TermCore],
    alpha: &PrequantumForm,
    lambda: &ReferenceLagrangian,
    opts: &OverlapOptions,
) -> Result<Vec<f64>, SemiclassicalError> {
    let eps = opts.trace.tol.fd_step;
    let shifts = [(0usize, eps), (0, -eps), (1, eps), (1, -eps)];
    let curves = opts.exec.try_map(&shifts, |&(which, d)| {
        let base = if which == 0 { &pair.f1 } else { &pair.f2 };
        Ok::<_, SemiclassicalError>(base.retrace_at(base.level + d)?)
    })?;
    let (h1, h2) = (&pair.f1.observable, &pair.f2.observable);
    let mut shifted = Vec::with_capacity(4);
    for (i1, i2) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        shifted.push(FiberPair::new(curves[i1].clone(), curves[i2].clone(), lambda)?);
    }
    cores
        .iter()
        .map(|core| {
            let mut s = [0.0; 4];
            for (k, fp) in shifted.iter().enumerate() {
                let (b1, b2) = (fp.f1.level, fp.f2.level);
                let c = newton_polish(h1, b1, h2, b2, core.c.c, &opts.trace.tol)
                    .ok_or(crate::geometry::GeometryError::NoSeed { level: b2 })?
                    .0;
                let (a1, a2, _) = fp.arcs(c, alpha)?;
                let a1 = unwrap_near(a1, core.arcs.0, fp.f1.loop_action());
                let a2 = unwrap_near(a2, core.arcs.1, fp.f2.loop_action());
                s[k] = a1 - a2;
            }
            Ok((s[0] - s[1] - s[2] + s[3]) / (4.0 * eps * eps))
        })
        .collect()
}

/// Traces both fibers and assembles the leading-order overlap
/// `(2πh)^{-1/2} Σ_c |det ∂²S/∂b₁∂b₂|^{1/2} exp(iS/h + iπμ/2)`.
pub fn overlap(
    sys1: &SystemLevel,
    sys2: &SystemLevel,
    lambda: &ReferenceLagrangian,
    alpha: &PrequantumForm,
    h: f64,
    opts: &OverlapOptions,
) -> Result<SemiclassicalAmplitude, SemiclassicalError> {
    if !(h > 0.0) {
        return Err(SemiclassicalError::InvalidInput(format!("h = {h}")));
    }
    let f1 = sys1.trace(&opts.trace)?;
    let f2 = sys2.trace(&opts.trace)?;
    let pair = FiberPair::new(f1, f2, lambda)?;
    overlap_on_fibers(&pair, lambda, alpha, h, opts)
}

pub(crate) fn overlap_on_fibers(
    pair: &FiberPair,
    lambda: &ReferenceLagrangian,
    alpha: &PrequantumForm,
    h: f64,
    opts: &OverlapOptions,
) -> Result<SemiclassicalAmplitude, SemiclassicalError> {
    let cores = term_cores(pair, alpha, opts.exec)?;
    let trans = opts.trace.tol.trans_tol;
    let mut warnings = Vec::new();
    for core in &cores {
        if core.c.bracket.abs() < 10.0 * trans {
            log::warn!("intersection {} is close to a caustic", core.c.c);
            warnings.push(Warning::CausticNearby {
                c: core.c.c,
                bracket: core.c.bracket,
            });
        }
    }
    let dets = match opts.hessian {
        HessianMode::Bracket => cores.iter().map(|c| 1.0 / c.c.bracket.abs()).collect(),
        HessianMode::FiniteDifference if cores.is_empty() => Vec::new(),
        HessianMode::FiniteDifference => {
            let fd = fd_hessians(pair, &cores, alpha, lambda, opts)?;
            let rel = hessian_check_tolerance(opts.trace.tol.fd_step);
            for (core, d) in cores.iter().zip(&fd) {
                let exact = 1.0 / core.c.bracket.abs();
                if (d.abs() - exact).abs() > rel * exact {
                    log::warn!("finite-difference Hessian {d} vs bracket identity {exact} at {}", core.c.c);
                    warnings.push(Warning::HessianMismatch {
                        c: core.c.c,
                        fd: *d,
                        bracket: core.c.bracket,
                    });
                }
            }
            fd
        }
    };
    let terms = cores
        .iter()
        .zip(dets)
        .map(|(core, d)| OverlapTerm::assemble(core.c, core.arcs.0 - core.arcs.1, core.maslov, d, h))
        .collect();
    Ok(SemiclassicalAmplitude::from_terms(
        h,
        pair.f1.level,
        pair.f2.level,
        terms,
        [pair.x1.point, pair.x2.point],
        warnings,
    ))
}
