use serde::{Deserialize, Serialize};

use super::intersect::roots_along;
use super::{CurvePosition, FiberCurve, GeometryError, Observable, PhasePoint};

/// The graph `p = λ(q)` of a polynomial `λ`, used to anchor phases on each
/// fiber.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceLagrangian {
    /// Coefficients of `λ`, lowest degree first.
    pub lambda: Vec<f64>,
}

impl ReferenceLagrangian {
    /// `p = 0`
    pub fn zero() -> Self {
        Self::default()
    }

    /// `p = κ q`
    pub fn slope(kappa: f64) -> Self {
        ReferenceLagrangian {
            lambda: vec![0.0, kappa],
        }
    }

    pub fn polynomial(lambda: Vec<f64>) -> Self {
        ReferenceLagrangian { lambda }
    }

    pub fn lambda_at(&self, q: f64) -> f64 {
        self.lambda.iter().rev().fold(0.0, |acc, c| acc * q + c)
    }

    /// `p − λ(q)`, whose zero set is the graph.
    pub fn defining_function(&self) -> Observable {
        Observable::polynomial(
            std::iter::once((0, 1, 1.0))
                .chain(self.lambda.iter().enumerate().map(|(k, &c)| (k as u32, 0, -c))),
        )
    }
}

/// The reference point `x = 𝓛 ∩ Λ`: the transversal intersection with the
/// smallest `q` (then smallest `p`).
pub fn reference_point(
    curve: &FiberCurve,
    lambda: &ReferenceLagrangian,
) -> Result<PhasePoint, GeometryError> {
    let g = lambda.defining_function();
    let trans = curve.options.tol.trans_tol;
    roots_along(curve, &g, 0.0)
        .into_iter()
        .filter(|r| r.1.abs() > trans)
        .map(|r| r.0)
        .min_by(|a, b| a.q.total_cmp(&b.q).then(a.p.total_cmp(&b.p)))
        .ok_or(GeometryError::NoReferencePoint { level: curve.level })
}

/// The prequantization form `α = p dq + df`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrequantumForm {
    pub gauge: Option<Observable>,
}

impl PrequantumForm {
    /// `α = p dq`
    pub fn canonical() -> Self {
        Self::default()
    }

    pub fn with_gauge(f: Observable) -> Self {
        PrequantumForm { gauge: Some(f) }
    }

    /// `f(x)`, zero without a gauge.
    pub fn gauge_at(&self, x: PhasePoint) -> f64 {
        self.gauge.as_ref().map_or(0.0, |f| f.value(x))
    }

    /// `∫ df` between two points.
    pub fn exact_part(&self, from: PhasePoint, to: PhasePoint) -> f64 {
        self.gauge_at(to) - self.gauge_at(from)
    }
}

/// `∫ α` along the curve from `from` to `to` in the curve's orientation.
pub fn action_along_fiber(
    curve: &FiberCurve,
    from: PhasePoint,
    to: PhasePoint,
    alpha: &PrequantumForm,
) -> Result<f64, GeometryError> {
    let a = curve.locate(from)?;
    let b = curve.locate(to)?;
    Ok(action_between_positions(curve, &a, &b, alpha))
}

pub(crate) fn action_between_positions(
    curve: &FiberCurve,
    a: &CurvePosition,
    b: &CurvePosition,
    alpha: &PrequantumForm,
) -> f64 {
    curve.action_between(a, b) + alpha.exact_part(a.point, b.point)
}
