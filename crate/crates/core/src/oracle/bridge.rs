use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::{Eigensystem, OracleError};
use crate::geometry::FiberCurve;
use crate::semiclassics::{BSLevel, SemiclassicalAmplitude};

/// What the bridge needs to know about one fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LevelData {
    /// Closed fiber with flow period `T = d(∮α)/db`.
    Closed { level: f64, period: f64 },
    /// Straight-line fiber of a linear observable (plane-wave normalization).
    Linear { level: f64 },
}

impl LevelData {
    pub fn from_curve(curve: &FiberCurve) -> Result<Self, OracleError> {
        match curve.period {
            Some(period) if curve.closed => Ok(LevelData::Closed {
                level: curve.level,
                period,
            }),
            _ if curve.observable.is_linear() => Ok(LevelData::Linear { level: curve.level }),
            _ => Err(OracleError::OpenFiber { level: curve.level }),
        }
    }
}

/// `Δb = 2πh/T` for closed fibers, `1` for plane waves.
pub fn level_spacing(data: &LevelData, h: f64) -> f64 {
    match data {
        LevelData::Closed { period, .. } => TAU * h / period.abs(),
        LevelData::Linear { .. } => 1.0,
    }
}

/// Converts an overlap of half-densities into an overlap of normalized
/// discrete states: `value · √(Δb₁ Δb₂)`.
pub fn half_density_bridge(
    amplitude: &SemiclassicalAmplitude,
    level1: &LevelData,
    level2: &LevelData,
) -> Complex64 {
    let h = amplitude.h;
    amplitude.value * (level_spacing(level1, h) * level_spacing(level2, h)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelMatch {
    pub n: u32,
    pub semiclassical: f64,
    pub oracle: f64,
    pub deviation: f64,
}

/// Pairs the `n`-th eigenvalue with the level labelled `n`.
pub fn match_levels(es: &Eigensystem, levels: &[BSLevel]) -> Result<Vec<LevelMatch>, OracleError> {
    let needed = levels.iter().map(|l| l.n as usize + 1).max().unwrap_or(0);
    if needed > es.eigenvalues.len() {
        return Err(OracleError::CountMismatch {
            semiclassical: needed,
            oracle: es.eigenvalues.len(),
        });
    }
    Ok(levels
        .iter()
        .map(|l| {
            let e = es.eigenvalues[l.n as usize];
            LevelMatch {
                n: l.n,
                semiclassical: l.b,
                oracle: e,
                deviation: (l.b - e).abs(),
            }
        })
        .collect())
}
