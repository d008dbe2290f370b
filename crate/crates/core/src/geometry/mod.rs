//! Symplectic geometry of the phase plane with `ω = dq ∧ dp`.

mod error;
mod fiber;
mod intersect;
mod lagrangian;
mod observable;
pub(crate) mod ode;

pub use error::GeometryError;
pub use fiber::{
    project_to_level, seed_on_level, trace_level_curve, CurvePosition, DomainBox, FiberCurve,
    FiberSample, PathNode, Tolerances, TraceOptions,
};
pub use intersect::{find_intersections, intersections_along, newton_polish, IntersectionPoint, SCAN_CELLS};
pub use lagrangian::{action_along_fiber, reference_point, PrequantumForm, ReferenceLagrangian};
pub(crate) use lagrangian::action_between_positions;
pub use observable::{poisson_bracket, Jet, Observable, Polynomial, PhasePoint};
