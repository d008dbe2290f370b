use thiserror::Error;

use super::PhasePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("gradient vanishes on level {level} near {at}: critical (singular) fiber")]
    SingularFiber { level: f64, at: PhasePoint },

    #[error("could not place a seed on level {level}")]
    NoSeed { level: f64 },

    #[error("point {at} is {distance:e} away from the fiber at level {level}")]
    PointNotOnFiber {
        at: PhasePoint,
        level: f64,
        distance: f64,
    },

    #[error("tangential intersection at {at} (bracket {bracket:e}): caustic")]
    TangentialIntersection { at: PhasePoint, bracket: f64 },

    #[error("fiber at level {level} does not meet the reference Lagrangian inside the domain")]
    NoReferencePoint { level: f64 },

    #[error("trace of level {level} exceeded the arclength budget")]
    TraceBudgetExceeded { level: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
