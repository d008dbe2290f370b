use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, PhasePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiclassicalError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("segment endpoint {at} is a tangency point (bracket {bracket:e})")]
    TangencyAtEndpoint { at: PhasePoint, bracket: f64 },

    #[error("loop action is not monotone on [{lo}, {hi}]")]
    NonMonotoneAction { lo: f64, hi: f64 },

    #[error("fiber at level {level} is not closed")]
    NoClosedFiber { level: f64 },

    #[error("degenerate stationary point at b = {b} (second derivative {second:e})")]
    DegenerateStationaryPoint { b: f64, second: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// An intersection is within ten times the transversality threshold of a
    /// caustic.
    CausticNearby { c: PhasePoint, bracket: f64 },
    /// Finite-difference Hessian disagrees with the bracket identity.
    HessianMismatch { c: PhasePoint, fd: f64, bracket: f64 },
    /// The bracket touches zero along a Maslov segment without changing sign.
    DoubleRoot { at: PhasePoint },
    /// A requested level range was cut because some fibers are not closed.
    LevelRangeClipped { lo: f64, hi: f64 },
}
