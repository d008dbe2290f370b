//! One-dimensional stationary-phase composition of semiclassical kernels.

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::overlap::{OverlapTerm, SemiclassicalAmplitude};
use super::SemiclassicalError;
use crate::exec::Execution;
use crate::geometry::PhasePoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeOptions {
    /// Scan points across the interval.
    pub samples: usize,
    /// Step of the central difference whose sign is bisected.
    pub derivative_step: f64,
    /// Largest step of the five-point stencils at a stationary point.
    pub stencil_step: f64,
    /// Stationary points with `|∂²Φ| < hess_tol` are degenerate.
    pub hess_tol: f64,
    /// Adds the next order of the stationary-phase expansion.
    pub first_order: bool,
    pub exec: Execution,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        ComposeOptions {
            samples: 48,
            derivative_step: 1e-5,
            stencil_step: 0.05,
            hess_tol: 1e-6,
            first_order: false,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub b: f64,
    /// `S₂₀ + S₀₁` at `b`.
    pub phase: f64,
    pub second_derivative: f64,
    /// Sum of the two factor Maslov indices.
    pub maslov: i32,
    pub term_20: OverlapTerm,
    pub term_01: OverlapTerm,
    pub contribution: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composition {
    pub h: f64,
    pub value: Complex64,
    pub points: Vec<StationaryPoint>,
}

fn nearest_term(amp: &SemiclassicalAmplitude, hint: PhasePoint) -> Option<OverlapTerm> {
    amp.terms
        .iter()
        .min_by(|a, b| a.c.c.distance(hint).total_cmp(&b.c.c.distance(hint)))
        .copied()
}

/// Composes two kernels over the intermediate label `b ∈ interval`:
/// `∫ U₂₀(b) U₀₁(b) db` by the leading stationary-phase rule at every
/// critical point of `S₂₀ + S₀₁` (bisection on the sign of its derivative).
pub fn compose_kernels<F20, F01>(
    u20: &F20,
    u01: &F01,
    interval: (f64, f64),
    h: f64,
    opts: &ComposeOptions,
) -> Result<Composition, SemiclassicalError>
where
    F20: Fn(f64) -> Result<SemiclassicalAmplitude, SemiclassicalError> + Sync,
    F01: Fn(f64) -> Result<SemiclassicalAmplitude, SemiclassicalError> + Sync,
{
    let (lo, hi) = interval;
    if !(lo < hi) || !(h > 0.0) || opts.samples < 4 {
        return Err(SemiclassicalError::InvalidInput(format!(
            "composition over [{lo}, {hi}] at h = {h}"
        )));
    }
    let m = opts.samples;
    let grid: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let scans = opts.exec.try_map(&grid, |&b| Ok::<_, SemiclassicalError>((u20(b)?, u01(b)?)))?;
    let n20 = scans[0].0.terms.len();
    let n01 = scans[0].1.terms.len();
    if scans.iter().any(|(a, c)| a.terms.len() != n20 || c.terms.len() != n01) {
        return Err(SemiclassicalError::InvalidInput(
            "the number of kernel terms changes inside the interval".into(),
        ));
    }
    // continue every term across the scan by nearest intersection point
    let track = |pick: fn(&(SemiclassicalAmplitude, SemiclassicalAmplitude)) -> &SemiclassicalAmplitude,
                 n: usize|
     -> Vec<Vec<OverlapTerm>> {
        (0..n)
            .map(|i| {
                let mut hint = pick(&scans[0]).terms[i].c.c;
                scans
                    .iter()
                    .map(|s| {
                        let t = nearest_term(pick(s), hint).expect("non-empty");
                        hint = t.c.c;
                        t
                    })
                    .collect()
            })
            .collect()
    };
    let t20 = track(|s| &s.0, n20);
    let t01 = track(|s| &s.1, n01);
    let pref = scans[0].0.prefactor.factor(h) * scans[0].1.prefactor.factor(h);

    let mut brackets = Vec::new();
    let mut curvature_seen = false;
    for (i, a) in t20.iter().enumerate() {
        for (j, c) in t01.iter().enumerate() {
            let phi: Vec<f64> = a.iter().zip(c).map(|(x, y)| x.action + y.action).collect();
            let d: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
            let second: Vec<f64> = d.windows(2).map(|w| w[1] - w[0]).collect();
            let step = (hi - lo) / (m - 1) as f64;
            if second.iter().any(|s| s.abs() > opts.hess_tol * step * step) {
                curvature_seen = true;
            }
            for k in 1..d.len() {
                if d[k - 1] == 0.0 || d[k - 1].signum() != d[k].signum() {
                    brackets.push((i, j, k));
                }
            }
        }
    }
    if !curvature_seen && n20 > 0 && n01 > 0 {
        return Err(SemiclassicalError::DegenerateStationaryPoint {
            b: 0.5 * (lo + hi),
            second: 0.0,
        });
    }

    let points = opts.exec.try_map(&brackets, |&(i, j, k)| {
        let hint20 = t20[i][k].c.c;
        let hint01 = t01[j][k].c.c;
        let eval = |b: f64| -> Result<(OverlapTerm, OverlapTerm), SemiclassicalError> {
            let a = u20(b)?;
            let c = u01(b)?;
            let missing = || SemiclassicalError::InvalidInput(format!("kernel has no terms at b = {b}"));
            Ok((
                nearest_term(&a, hint20).ok_or_else(missing)?,
                nearest_term(&c, hint01).ok_or_else(missing)?,
            ))
        };
        let phase = |b: f64| -> Result<f64, SemiclassicalError> {
            let (a, c) = eval(b)?;
            Ok(a.action + c.action)
        };
        let e = opts.derivative_step;
        let slope = |b: f64| -> Result<f64, SemiclassicalError> { Ok((phase(b + e)? - phase(b - e)?) / (2.0 * e)) };
        let (mut a, mut c) = (grid[k - 1], grid[k + 1]);
        let (mut sa, sc) = (slope(a)?, slope(c)?);
        if sa.signum() == sc.signum() && sa != 0.0 && sc != 0.0 {
            return Ok(None);
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + c);
            let sm = slope(mid)?;
            if sm == 0.0 {
                a = mid;
                c = mid;
                break;
            }
            if sm.signum() == sa.signum() {
                a = mid;
                sa = sm;
            } else {
                c = mid;
            }
            if c - a < 1e-13 * (1.0 + mid.abs()) {
                break;
            }
        }
        let b = 0.5 * (a + c);
        let eps = opts.stencil_step.min((b - lo) / 2.5).min((hi - b) / 2.5);
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|t| b + t * eps);
        let mut phis = [0.0; 5];
        let mut amps = [0.0; 5];
        for (n, x) in xs.iter().enumerate() {
            let (ta, tc) = eval(*x)?;
            phis[n] = ta.action + tc.action;
            amps[n] = ta.contribution.norm() * tc.contribution.norm();
        }
        let stencil = |f: &[f64; 5], e: f64| (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * e * e);
        // Richardson step on the five-point second difference
        let mut half = [0.0; 5];
        for (n, t) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            half[n] = if n == 2 { phis[2] } else { phase(b + t * eps / 2.0)? };
        }
        let d2 = (64.0 * stencil(&half, eps / 2.0) - stencil(&phis, eps)) / 63.0;
        if d2.abs() < opts.hess_tol {
            return Err(SemiclassicalError::DegenerateStationaryPoint { b, second: d2 });
        }
        let (ta, tc) = eval(b)?;
        let gauss = (TAU * h / d2.abs()).sqrt() * Complex64::from_polar(1.0, FRAC_PI_4 * d2.signum());
        let mut contribution = pref * ta.contribution * tc.contribution * gauss;
        if opts.first_order {
            let d1a = (amps[3] - amps[1]) / (2.0 * eps);
            let d2a = (amps[3] - 2.0 * amps[2] + amps[1]) / (eps * eps);
            let d3 = (phis[4] - 2.0 * phis[3] + 2.0 * phis[1] - phis[0]) / (2.0 * eps.powi(3));
            let d4 = (phis[4] - 4.0 * phis[3] + 6.0 * phis[2] - 4.0 * phis[1] + phis[0]) / eps.powi(4);
            let a0 = amps[2];
            let corr = d2a / 2.0 - d1a * d3 / (2.0 * d2) - a0 * d4 / (8.0 * d2)
                + 5.0 * a0 * d3 * d3 / (24.0 * d2 * d2);
            contribution *= Complex64::new(1.0, 0.0) + Complex64::new(0.0, h / d2) * (corr / a0);
        }
        Ok(Some(StationaryPoint {
            b,
            phase: ta.action + tc.action,
            second_derivative: d2,
            maslov: ta.maslov + tc.maslov,
            term_20: ta,
            term_01: tc,
            contribution,
        }))
    })?;
    let mut points: Vec<StationaryPoint> = points.into_iter().flatten().collect();
    points.sort_by(|a, b| a.b.total_cmp(&b.b));
    points.dedup_by(|a, b| (a.b - b.b).abs() < 1e-9 && a.term_20.c.c.distance(b.term_20.c.c) < 1e-6);
    let value = points.iter().map(|p| p.contribution).sum();
    Ok(Composition { h, value, points })
}

/// Writes `composed/direct = exp(iπμ/4) · r`; returns `(μ mod 8, phase
/// residual in radians)`.
pub fn gluing_index(composed: Complex64, direct: Complex64) -> (i32, f64) {
    let arg = (composed / direct).arg();
    let mu = (arg / FRAC_PI_4).round();
    let residual = arg - mu * FRAC_PI_4;
    ((mu as i32).rem_euclid(8), residual)
}

/// Kashiwara index `−sgn(ω(v₁,v₂) ω(v₂,v₃) ω(v₃,v₁))` of three tangent lines.
pub fn kashiwara_index(v1: PhasePoint, v2: PhasePoint, v3: PhasePoint) -> i32 {
    let s = v1.wedge(v2) * v2.wedge(v3) * v3.wedge(v1);
    if s == 0.0 {
        0
    } else {
        -(s.signum() as i32)
    }
}
