//! Intersections of two level sets.

use serde::{Deserialize, Serialize};

use super::{poisson_bracket, DomainBox, FiberCurve, GeometryError, Observable, PhasePoint, Tolerances};
use crate::exec::Execution;

/// A transversal intersection `c` of `{H₁ = b₁}` and `{H₂ = b₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionPoint {
    pub c: PhasePoint,
    /// `{H₁, H₂}(c)`
    pub bracket: f64,
    /// Sample index on the first traced fiber, when known.
    pub branch_1: Option<usize>,
    /// Sample index on the second traced fiber, when known.
    pub branch_2: Option<usize>,
}

/// Cells per side of the scan grid used by [`find_intersections`].
pub const SCAN_CELLS: usize = 400;

/// 2D Newton for `H₁ = b₁, H₂ = b₂`. Returns the root and the bracket there.
pub fn newton_polish(
    h1: &Observable,
    b1: f64,
    h2: &Observable,
    b2: f64,
    start: PhasePoint,
    tol: &Tolerances,
) -> Option<(PhasePoint, f64)> {
    let mut x = start;
    for _ in 0..100 {
        let j1 = h1.jet(x);
        let j2 = h2.jet(x);
        let (f1, f2) = (j1.value - b1, j2.value - b2);
        let det = j1.grad.wedge(j2.grad);
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dq = (f1 * j2.grad.p - f2 * j1.grad.p) / det;
        let dp = (j1.grad.q * f2 - j2.grad.q * f1) / det;
        x = PhasePoint::new(x.q - dq, x.p - dp);
        if !x.is_finite() {
            return None;
        }
        let step = dq.hypot(dp);
        if step < 1e-14 * (1.0 + x.norm()) {
            break;
        }
    }
    let ok = (h1.value(x) - b1).abs() <= tol.newton_tol && (h2.value(x) - b2).abs() <= tol.newton_tol;
    ok.then(|| (x, poisson_bracket(h1, h2, x)))
}

fn dedup(mut roots: Vec<(PhasePoint, f64)>, radius: f64) -> Vec<(PhasePoint, f64)> {
    roots.sort_by(|a, b| a.0.q.total_cmp(&b.0.q).then(a.0.p.total_cmp(&b.0.p)));
    let mut out: Vec<(PhasePoint, f64)> = Vec::new();
    for r in roots {
        if out.iter().all(|o| o.0.distance(r.0) > radius) {
            out.push(r);
        }
    }
    out
}

fn check_transversal(
    roots: Vec<(PhasePoint, f64)>,
    tol: &Tolerances,
) -> Result<Vec<(PhasePoint, f64)>, GeometryError> {
    if let Some(&(at, bracket)) = roots.iter().find(|r| r.1.abs() <= tol.trans_tol) {
        return Err(GeometryError::TangentialIntersection { at, bracket });
    }
    Ok(roots)
}

/// All intersections inside `domain`: a grid scan for cells where both
/// `H₁ − b₁` and `H₂ − b₂` change sign, followed by Newton polish and
/// de-duplication. Sorted by `q`, then `p`.
pub fn find_intersections(
    h1: &Observable,
    b1: f64,
    h2: &Observable,
    b2: f64,
    domain: &DomainBox,
    tol: &Tolerances,
    exec: Execution,
) -> Result<Vec<IntersectionPoint>, GeometryError> {
    if !domain.is_valid() {
        return Err(GeometryError::InvalidInput("degenerate domain box".into()));
    }
    let n = SCAN_CELLS;
    let dq = (domain.q_max - domain.q_min) / n as f64;
    let dp = (domain.p_max - domain.p_min) / n as f64;
    let node = |i: usize, j: usize| PhasePoint::new(domain.q_min + i as f64 * dq, domain.p_min + j as f64 * dp);
    let rows: Vec<Vec<(PhasePoint, f64)>> = exec.map_range(n, |j| {
        let vals = |jj: usize| -> Vec<(f64, f64)> {
            (0..=n)
                .map(|i| {
                    let x = node(i, jj);
                    (h1.value(x) - b1, h2.value(x) - b2)
                })
                .collect()
        };
        let lo = vals(j);
        let hi = vals(j + 1);
        let mut found = Vec::new();
        for i in 0..n {
            let corners = [lo[i], lo[i + 1], hi[i], hi[i + 1]];
            let changes = |sel: fn(&(f64, f64)) -> f64| {
                let mn = corners.iter().map(sel).fold(f64::INFINITY, f64::min);
                let mx = corners.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
                mn <= 0.0 && mx >= 0.0
            };
            if changes(|c| c.0) && changes(|c| c.1) {
                let center = PhasePoint::new(domain.q_min + (i as f64 + 0.5) * dq, domain.p_min + (j as f64 + 0.5) * dp);
                if let Some(r) = newton_polish(h1, b1, h2, b2, center, tol) {
                    if domain.contains(r.0) {
                        found.push(r);
                    }
                }
            }
        }
        found
    });
    let roots = dedup(rows.into_iter().flatten().collect(), tol.dedup_radius);
    Ok(check_transversal(roots, tol)?
        .into_iter()
        .map(|(c, bracket)| IntersectionPoint {
            c,
            bracket,
            branch_1: None,
            branch_2: None,
        })
        .collect())
}

/// Roots of `G = g_level` along a traced fiber, tangential ones included.
pub(crate) fn roots_along(
    curve: &FiberCurve,
    g: &Observable,
    g_level: f64,
) -> Vec<(PhasePoint, f64)> {
    let tol = &curve.options.tol;
    let h = &curve.observable;
    let vals: Vec<f64> = curve
        .samples
        .iter()
        .map(|s| g.value(s.point) - g_level)
        .collect();
    let mut starts = Vec::new();
    for k in 0..vals.len().saturating_sub(1) {
        let (a, b) = (vals[k], vals[k + 1]);
        if a == 0.0 || a.signum() != b.signum() {
            let t = if a == b { 0.5 } else { a / (a - b) };
            let pa = curve.samples[k].point;
            let pb = curve.samples[k + 1].point;
            starts.push(pa + t * (pb - pa));
        } else if k > 0 {
            // touching minimum of |G − level|: a possible tangency
            let prev = vals[k - 1];
            let step = curve.samples[k].point.distance(curve.samples[k + 1].point);
            let slope = g.gradient(curve.samples[k].point).norm();
            if a.abs() <= prev.abs() && a.abs() <= b.abs() && a.abs() < slope * step {
                starts.push(curve.samples[k].point);
            }
        }
    }
    let roots = starts
        .into_iter()
        .filter_map(|x| newton_polish(h, curve.level, g, g_level, x, tol))
        .filter(|r| curve.options.domain.contains(r.0))
        .collect();
    dedup(roots, tol.dedup_radius)
}

/// Intersections of a traced fiber with `{H₂ = b₂}`, found by scanning the
/// fiber samples for sign changes of `H₂ − b₂`.
pub fn intersections_along(
    curve: &FiberCurve,
    h2: &Observable,
    b2: f64,
) -> Result<Vec<IntersectionPoint>, GeometryError> {
    let roots = check_transversal(roots_along(curve, h2, b2), &curve.options.tol)?;
    roots
        .into_iter()
        .map(|(c, bracket)| {
            let pos = curve.locate(c)?;
            Ok(IntersectionPoint {
                c,
                bracket,
                branch_1: Some(pos.index),
                branch_2: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_and_line() {
        let tol = Tolerances::default();
        let pts = find_intersections(
            &Observable::harmonic_oscillator(),
            0.5,
            &Observable::position(),
            0.6,
            &DomainBox::default(),
            &tol,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].c.q - 0.6).abs() < 1e-12 && (pts[0].c.p + 0.8).abs() < 1e-12);
        assert!((pts[1].c.p - 0.8).abs() < 1e-12);
    }

    #[test]
    fn line_outside_disk() {
        let pts = find_intersections(
            &Observable::harmonic_oscillator(),
            0.5,
            &Observable::position(),
            2.0,
            &DomainBox::default(),
            &Tolerances::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn tangent_line_is_reported() {
        let r = find_intersections(
            &Observable::harmonic_oscillator(),
            0.5,
            &Observable::position(),
            1.0,
            &DomainBox::default(),
            &Tolerances::default(),
            Execution::Sequential,
        );
        assert!(matches!(r, Err(GeometryError::TangentialIntersection { .. })), "{r:?}");
    }
}
