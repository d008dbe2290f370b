use std::f64::consts::{FRAC_PI_2, TAU};

use serde::Serialize;

use super::overlap::{overlap, OverlapOptions, SemiclassicalAmplitude, SystemLevel};
use super::SemiclassicalError;
use crate::geometry::{PrequantumForm, ReferenceLagrangian};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionProbability {
    /// Probability density in `(b₁, b₂)`.
    pub value: f64,
    /// The overlap whose terms feed the double sum.
    pub amplitude: SemiclassicalAmplitude,
}

/// `(2πh)^{-1} Σ_{a,c} √(d_a d_c) cos((S_a − S_c)/h + π(μ_a − μ_c)/2)`
pub fn probability_from_terms(amp: &SemiclassicalAmplitude) -> f64 {
    let h = amp.h;
    let mut sum = 0.0;
    for a in &amp.terms {
        for c in &amp.terms {
            let rel = (a.action - c.action) / h + FRAC_PI_2 * (a.maslov - c.maslov) as f64;
            sum += (a.hessian_det.abs() * c.hessian_det.abs()).sqrt() * rel.cos();
        }
    }
    sum / (TAU * h)
}

/// Squared modulus of the overlap, written as a double sum over pairs of
/// intersection points whose phases enter only through relative actions and
/// relative Maslov indices. Gauge and reference choices drop out.
pub fn transition_probability(
    sys1: &SystemLevel,
    sys2: &SystemLevel,
    lambda: &ReferenceLagrangian,
    h: f64,
    opts: &OverlapOptions,
) -> Result<TransitionProbability, SemiclassicalError> {
    let amplitude = overlap(sys1, sys2, lambda, &PrequantumForm::canonical(), h, opts)?;
    Ok(TransitionProbability {
        value: probability_from_terms(&amplitude),
        amplitude,
    })
}
