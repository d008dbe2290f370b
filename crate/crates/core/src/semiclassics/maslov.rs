//! Signed counts of tangencies between a fiber path and a second fibration.

use serde::Serialize;

use super::SemiclassicalError;
use crate::geometry::{poisson_bracket, CurvePosition, FiberCurve, Observable, PathNode, PhasePoint};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaslovCount {
    pub index: i32,
    /// Located sign changes with their weights.
    pub crossings: Vec<(PhasePoint, i32)>,
    /// Zeros of the bracket without sign change (counted 0).
    pub double_roots: Vec<PhasePoint>,
}

/// Signed number of points on the oriented path of `curve` from `from` to `to`
/// where the fiber is tangent to a fiber of `h1`.
///
/// A zero of `B = {H₁, H₂}` crossed with `dB/ds` of sign `σ` (path parameter
/// `s`) is weighted `−σ · sign(X_{H₁} · X_{H₂})`, which makes each turning
/// point of a clockwise oscillator orbit count `+1` relative to the vertical
/// fibration and flips the total under path reversal.
pub fn maslov_segment(
    curve: &FiberCurve,
    from: &CurvePosition,
    to: &CurvePosition,
    h1: &Observable,
) -> Result<MaslovCount, SemiclassicalError> {
    let trans = curve.options.tol.trans_tol;
    for p in [from.point, to.point] {
        let b = poisson_bracket(h1, &curve.observable, p);
        if b.abs() <= trans {
            return Err(SemiclassicalError::TangencyAtEndpoint { at: p, bracket: b });
        }
    }
    let nodes = curve.path_nodes(from, to);
    Ok(count_on_nodes(curve, &nodes, h1))
}

/// Index of the full closed loop, started at the sample where the bracket is
/// largest in modulus.
pub fn maslov_loop(curve: &FiberCurve, h1: &Observable) -> Result<MaslovCount, SemiclassicalError> {
    if !curve.closed {
        return Err(SemiclassicalError::NoClosedFiber { level: curve.level });
    }
    let h2 = &curve.observable;
    let n = curve.samples.len() - 1;
    let k = (0..n)
        .max_by(|&a, &b| {
            let ba = poisson_bracket(h1, h2, curve.samples[a].point).abs();
            let bb = poisson_bracket(h1, h2, curve.samples[b].point).abs();
            ba.total_cmp(&bb)
        })
        .unwrap_or(0);
    let total = curve.length();
    let node = |i: usize, offset: f64| {
        let s = &curve.samples[i];
        PathNode::from_sample(s, offset)
    };
    let mut nodes: Vec<PathNode> = (k..=n).map(|i| node(i, 0.0)).collect();
    nodes.extend((1..=k).map(|i| node(i, total)));
    Ok(count_on_nodes(curve, &nodes, h1))
}

fn count_on_nodes(curve: &FiberCurve, nodes: &[PathNode], h1: &Observable) -> MaslovCount {
    let h2 = &curve.observable;
    let trans = curve.options.tol.trans_tol;
    let bracket = |x: PhasePoint| poisson_bracket(h1, h2, x);
    let vals: Vec<f64> = nodes.iter().map(|n| bracket(n.point())).collect();
    let mut out = MaslovCount {
        index: 0,
        crossings: Vec::new(),
        double_roots: Vec::new(),
    };
    for k in 0..nodes.len().saturating_sub(1) {
        let (a, b) = (vals[k], vals[k + 1]);
        let (na, nb) = (&nodes[k], &nodes[k + 1]);
        if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                let v = bracket(curve.point_between(na, nb, mid));
                if v.signum() == a.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let at = curve.point_between(na, nb, 0.5 * (lo + hi));
            let x1 = h1.jet(at).hamiltonian_field();
            let x2 = h2.jet(at).hamiltonian_field();
            let db = (b - a).signum();
            let w = -(db * x1.dot(x2).signum()) as i32;
            out.index += w;
            out.crossings.push((at, w));
        } else if k > 0 && a.abs() <= vals[k - 1].abs() && a.abs() <= b.abs() {
            // local minimum of |B| at a node without sign change
            let prev = &nodes[k - 1];
            let mut best = a.abs();
            let mut best_at = na.point();
            for t in 1..20 {
                let frac = t as f64 / 20.0;
                for (p, q) in [(prev, na), (na, nb)] {
                    let x = curve.point_between(p, q, frac);
                    let v = bracket(x).abs();
                    if v < best {
                        best = v;
                        best_at = x;
                    }
                }
            }
            if best <= trans {
                out.double_roots.push(best_at);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{trace_level_curve, TraceOptions};

    fn circle() -> FiberCurve {
        trace_level_curve(
            &Observable::harmonic_oscillator(),
            0.5,
            PhasePoint::new(0.0, 1.0),
            &TraceOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn oscillator_loop_counts_two() {
        let m = maslov_loop(&circle(), &Observable::position()).unwrap();
        assert_eq!(m.index, 2);
        assert_eq!(m.crossings.len(), 2);
    }

    #[test]
    fn upper_arc_has_no_tangency() {
        let c = circle();
        let a = c.locate(PhasePoint::new(-0.6, 0.8)).unwrap();
        let b = c.locate(PhasePoint::new(0.6, 0.8)).unwrap();
        let m = maslov_segment(&c, &a, &b, &Observable::position()).unwrap();
        assert_eq!(m.index, 0);
        let m = maslov_segment(&c, &b, &a, &Observable::position()).unwrap();
        assert_eq!(m.index, 2);
    }

    #[test]
    fn tangent_endpoint_is_rejected() {
        let c = circle();
        let a = c.locate(PhasePoint::new(1.0, 0.0)).unwrap();
        let b = c.locate(PhasePoint::new(0.6, -0.8)).unwrap();
        assert!(matches!(
            maslov_segment(&c, &a, &b, &Observable::position()),
            Err(SemiclassicalError::TangencyAtEndpoint { .. })
        ));
    }
}
