//! Bohr-Sommerfeld ladders `∮α = 2πh(n + μ/4)` on closed fibers.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::maslov::maslov_loop;
use super::{SemiclassicalError, Warning};
use crate::exec::Execution;
use crate::geometry::{seed_on_level, trace_level_curve, FiberCurve, GeometryError, Observable, PhasePoint, TraceOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSLevel {
    pub n: u32,
    pub b: f64,
    pub loop_action: f64,
    pub loop_maslov: i32,
    /// Flow period of the fiber at `b`.
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BsOptions {
    pub trace: TraceOptions,
    /// Point inside the wells whose fibers are quantized; seeds are found on
    /// rays from here.
    pub anchor: PhasePoint,
    /// Number of probe levels used to check monotonicity of the action.
    pub probes: usize,
    pub exec: Execution,
}

impl Default for BsOptions {
    fn default() -> Self {
        BsOptions {
            trace: TraceOptions::default(),
            anchor: PhasePoint::default(),
            probes: 17,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsLadder {
    pub levels: Vec<BSLevel>,
    pub warnings: Vec<Warning>,
}

/// Traces the closed fiber of `h` at `b` around the anchor.
pub fn closed_fiber(h: &Observable, b: f64, opts: &BsOptions) -> Result<FiberCurve, SemiclassicalError> {
    let seed = seed_on_level(h, b, opts.anchor, &opts.trace)?;
    let c = trace_level_curve(h, b, seed, &opts.trace)?;
    if !c.closed {
        return Err(SemiclassicalError::NoClosedFiber { level: b });
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy)]
enum Probe {
    Closed(f64),
    /// Critical point: the fiber has shrunk to a point.
    Collapsed,
    Open,
}

fn probe(h: &Observable, b: f64, opts: &BsOptions) -> Probe {
    match closed_fiber(h, b, opts) {
        Ok(c) => Probe::Closed(c.loop_action().unwrap_or(0.0)),
        Err(SemiclassicalError::Geometry(GeometryError::SingularFiber { at, .. })) => {
            // a fiber through a critical point of zero extent
            let g = h.gradient(at).norm();
            if g < 1e-6 && (h.value(at) - b).abs() < 1e-9 && is_extremum(h, at) {
                Probe::Collapsed
            } else {
                Probe::Open
            }
        }
        Err(SemiclassicalError::Geometry(GeometryError::NoSeed { .. })) => Probe::Collapsed,
        Err(_) => Probe::Open,
    }
}

fn is_extremum(h: &Observable, x: PhasePoint) -> bool {
    let m = h.hessian(x);
    m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0
}

/// Solves `s·∮α = 2πh(n + s·μ/4)` for every `n` whose level lies in
/// `[b_lo, b_hi]`, where `s` is the sign of the loop action and `μ` the loop
/// index relative to the vertical fibration.
pub fn bohr_sommerfeld_levels(
    h: &Observable,
    hbar: f64,
    b_range: (f64, f64),
    opts: &BsOptions,
) -> Result<BsLadder, SemiclassicalError> {
    let (lo, hi) = b_range;
    if !(hbar > 0.0) || !(lo < hi) || opts.probes < 3 {
        return Err(SemiclassicalError::InvalidInput(format!(
            "h = {hbar}, range [{lo}, {hi}]"
        )));
    }
    let m = opts.probes;
    let grid: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let probes = opts.exec.map(&grid, |&b| probe(h, b, opts));

    // longest run of usable probes
    let usable = |p: &Probe| !matches!(p, Probe::Open);
    let mut best = (0, 0);
    let mut start = None;
    for (i, p) in probes.iter().enumerate() {
        match (usable(p), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if m - s > best.1 - best.0 {
            best = (s, m);
        }
    }
    let mut warnings = Vec::new();
    if best.1 - best.0 < 2 {
        return Err(SemiclassicalError::NoClosedFiber { level: grid[m / 2] });
    }
    let (i0, i1) = (best.0, best.1 - 1);
    if i0 > 0 || i1 < m - 1 {
        log::warn!(
            "fibers of levels outside [{}, {}] are not closed; skipping",
            grid[i0],
            grid[i1]
        );
        warnings.push(Warning::LevelRangeClipped {
            lo: grid[i0],
            hi: grid[i1],
        });
    }
    let action = |p: &Probe| match p {
        Probe::Closed(a) => Some(*a),
        Probe::Collapsed => Some(0.0),
        Probe::Open => None,
    };
    let acts: Vec<f64> = probes[i0..=i1].iter().filter_map(action).collect();
    // collapsed probes may only sit at the ends
    if probes[i0 + 1..i1].iter().any(|p| matches!(p, Probe::Collapsed)) {
        return Err(SemiclassicalError::NonMonotoneAction {
            lo: grid[i0],
            hi: grid[i1],
        });
    }
    let sign = acts
        .iter()
        .copied()
        .find(|a| *a != 0.0)
        .map_or(1.0, f64::signum);
    let mags: Vec<f64> = acts.iter().map(|a| sign * a).collect();
    let increasing = mags[mags.len() - 1] > mags[0];
    let monotone = mags
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !monotone {
        return Err(SemiclassicalError::NonMonotoneAction {
            lo: grid[i0],
            hi: grid[i1],
        });
    }

    // loop index from a regular probe in the middle of the run
    let mid = (i0..=i1)
        .find(|&i| matches!(probes[i], Probe::Closed(a) if a != 0.0) && i >= (i0 + i1) / 2)
        .or_else(|| (i0..=i1).find(|&i| matches!(probes[i], Probe::Closed(_))))
        .ok_or(SemiclassicalError::NoClosedFiber { level: grid[i0] })?;
    let mid_curve = closed_fiber(h, grid[mid], opts)?;
    let mu = maslov_loop(&mid_curve, &Observable::position())?.index;

    let (a_lo, a_hi) = (mags[0].min(mags[mags.len() - 1]), mags[0].max(mags[mags.len() - 1]));
    let target = |n: u32| TAU * hbar * (n as f64 + sign * mu as f64 / 4.0);
    let mut ns = Vec::new();
    let mut n = 0u32;
    while target(n) <= a_hi {
        if target(n) >= a_lo {
            ns.push(n);
        }
        n += 1;
        if n > 1_000_000 {
            return Err(SemiclassicalError::InvalidInput("too many levels in range".into()));
        }
    }

    let (b_lo, b_hi) = (grid[i0], grid[i1]);
    let bs_tol = opts.trace.tol.bs_tol;
    let levels = opts.exec.try_map(&ns, |&n| {
        let goal = target(n);
        let f = |b: f64| -> Result<f64, SemiclassicalError> {
            let a = match probe(h, b, opts) {
                Probe::Closed(a) => a,
                Probe::Collapsed => 0.0,
                Probe::Open => return Err(SemiclassicalError::NoClosedFiber { level: b }),
            };
            Ok(sign * a - goal)
        };
        // bracket between neighbouring probes
        let k = mags
            .windows(2)
            .position(|w| (w[0] - goal) * (w[1] - goal) <= 0.0)
            .ok_or(SemiclassicalError::NonMonotoneAction { lo: b_lo, hi: b_hi })?;
        let (a, c) = (grid[i0 + k], grid[i0 + k + 1]);
        let b = illinois(&f, a, c, mags[k] - goal, mags[k + 1] - goal, bs_tol)?;
        let curve = closed_fiber(h, b, opts)?;
        Ok::<_, SemiclassicalError>(BSLevel {
            n,
            b,
            loop_action: curve.loop_action().unwrap_or(0.0),
            loop_maslov: mu,
            period: curve.period.unwrap_or(f64::NAN),
        })
    })?;
    Ok(BsLadder { levels, warnings })
}

/// Illinois false-position root finder on a sign-changing bracket.
fn illinois<F>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, ftol: f64) -> Result<f64, SemiclassicalError>
where
    F: Fn(f64) -> Result<f64, SemiclassicalError>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(SemiclassicalError::NonMonotoneAction { lo: a, hi: b });
    }
    let mut side = 0;
    let mut best = if fa.abs() < fb.abs() { a } else { b };
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        best = c;
        if fc.abs() <= 1e-2 * ftol || (b - a).abs() <= 1e-15 * (1.0 + c.abs()) {
            break;
        }
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best)
}
