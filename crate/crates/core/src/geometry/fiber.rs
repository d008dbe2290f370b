//! Level-curve tracing by arclength-normalized Hamiltonian flow.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ode::{dp5_step, error_ratio, step_factor, State};
use super::{GeometryError, Observable, PhasePoint};

/// Numerical tolerances shared by the geometry and semiclassics layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub curve_tol: f64,
    pub quad_tol: f64,
    pub newton_tol: f64,
    pub trans_tol: f64,
    pub dedup_radius: f64,
    pub hess_tol: f64,
    pub bs_tol: f64,
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            curve_tol: 1e-9,
            quad_tol: 1e-8,
            newton_tol: 1e-10,
            trans_tol: 1e-6,
            dedup_radius: 1e-6,
            hess_tol: 1e-6,
            bs_tol: 1e-9,
            fd_step: 1e-4,
        }
    }
}

/// Axis-aligned box bounding all traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for DomainBox {
    fn default() -> Self {
        DomainBox::square(8.0)
    }
}

impl DomainBox {
    pub fn square(half: f64) -> Self {
        DomainBox {
            q_min: -half,
            q_max: half,
            p_min: -half,
            p_max: half,
        }
    }

    pub fn contains(&self, x: PhasePoint) -> bool {
        x.q >= self.q_min && x.q <= self.q_max && x.p >= self.p_min && x.p <= self.p_max
    }

    /// Largest signed excursion outside the box (negative inside).
    fn excess(&self, x: PhasePoint) -> f64 {
        [
            self.q_min - x.q,
            x.q - self.q_max,
            self.p_min - x.p,
            x.p - self.p_max,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_valid(&self) -> bool {
        [self.q_min, self.q_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite())
            && self.q_min < self.q_max
            && self.p_min < self.p_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    pub domain: DomainBox,
    pub tol: Tolerances,
    /// Local error target of the integrator. Much tighter than `curve_tol` so
    /// that finite differences of actions across neighboring levels stay
    /// meaningful.
    pub ode_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_arclength: f64,
    /// Gradient norm below which the flow is declared singular.
    pub grad_floor: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            domain: DomainBox::default(),
            tol: Tolerances::default(),
            ode_tol: 1e-13,
            initial_step: 1e-3,
            max_step: 0.05,
            max_arclength: 1e4,
            grad_floor: 1e-6,
        }
    }
}

/// One sample of a traced fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSample {
    pub point: PhasePoint,
    pub arclength: f64,
    /// Cumulative `∫ p dq` from the first sample.
    pub action: f64,
    /// Cumulative Hamiltonian flow time from the first sample.
    pub time: f64,
}

impl FiberSample {
    fn state(&self) -> State {
        [self.point.q, self.point.p, self.action, self.time]
    }
}

/// A traced level set `{H = b}` oriented along the Hamiltonian flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCurve {
    pub observable: Observable,
    pub level: f64,
    pub samples: Vec<FiberSample>,
    pub closed: bool,
    /// Set when an open fiber was cut at the domain box.
    pub truncated: bool,
    /// Total flow time around the loop (closed fibers only).
    pub period: Option<f64>,
    /// `+1`: samples follow the Hamiltonian flow.
    pub orientation: i8,
    pub options: TraceOptions,
}

/// A located point on a fiber, with the cumulative data at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePosition {
    pub point: PhasePoint,
    pub arclength: f64,
    pub action: f64,
    pub time: f64,
    /// Index of the sample at or just before this position.
    pub index: usize,
}

impl CurvePosition {
    pub(crate) fn state(&self) -> State {
        [self.point.q, self.point.p, self.action, self.time]
    }
}

/// Newton projection of `seed` onto `{H = b}` along the gradient.
pub fn project_to_level(
    h: &Observable,
    b: f64,
    seed: PhasePoint,
    opts: &TraceOptions,
) -> Result<PhasePoint, GeometryError> {
    let mut x = seed;
    for _ in 0..60 {
        let j = h.jet(x);
        let r = j.value - b;
        let g2 = j.grad.dot(j.grad);
        if g2.sqrt() < opts.grad_floor {
            return Err(GeometryError::SingularFiber { level: b, at: x });
        }
        let step = (r / g2) * j.grad;
        x = x - step;
        if !x.is_finite() {
            break;
        }
        if step.norm() < 1e-15 * (1.0 + x.norm()) || r.abs() < 1e-15 * (1.0 + b.abs()) {
            let r = h.value(x) - b;
            if r.abs() <= opts.tol.newton_tol {
                return Ok(x);
            }
        }
    }
    if x.is_finite() && (h.value(x) - b).abs() <= opts.tol.newton_tol {
        Ok(x)
    } else {
        Err(GeometryError::NoSeed { level: b })
    }
}

/// Finds some point of `{H = b}` near `anchor` by scanning rays outwards from
/// it, falling back to a coarse scan of the domain rows.
pub fn seed_on_level(
    h: &Observable,
    b: f64,
    anchor: PhasePoint,
    opts: &TraceOptions,
) -> Result<PhasePoint, GeometryError> {
    let dom = &opts.domain;
    let f = |x: PhasePoint| h.value(x) - b;
    let mut best: Option<(f64, PhasePoint)> = None;
    let rays = 32;
    let reach = (dom.q_max - dom.q_min).hypot(dom.p_max - dom.p_min);
    let steps = 400;
    for k in 0..rays {
        let th = std::f64::consts::TAU * (k as f64 + 0.25) / rays as f64;
        let dir = PhasePoint::new(th.cos(), th.sin());
        let mut prev = anchor;
        let mut fp = f(prev);
        for i in 1..=steps {
            let x = anchor + (reach * i as f64 / steps as f64) * dir;
            if !dom.contains(x) {
                break;
            }
            let fx = f(x);
            if fp == 0.0 || fp.signum() != fx.signum() {
                let root = bisect_segment(&f, prev, x);
                let d = root.distance(anchor);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, root));
                }
                break;
            }
            prev = x;
            fp = fx;
        }
    }
    if let Some((_, x)) = best {
        return project_to_level(h, b, x, opts);
    }
    let rows = 200;
    for r in 0..=rows {
        let p = dom.p_min + (dom.p_max - dom.p_min) * r as f64 / rows as f64;
        let mut prev = PhasePoint::new(dom.q_min, p);
        for c in 1..=rows {
            let x = PhasePoint::new(dom.q_min + (dom.q_max - dom.q_min) * c as f64 / rows as f64, p);
            if f(prev).signum() != f(x).signum() {
                let root = bisect_segment(&f, prev, x);
                return project_to_level(h, b, root, opts);
            }
            prev = x;
        }
    }
    Err(GeometryError::NoSeed { level: b })
}

fn bisect_segment(f: &impl Fn(PhasePoint) -> f64, mut a: PhasePoint, mut c: PhasePoint) -> PhasePoint {
    let fa = f(a);
    for _ in 0..80 {
        let m = 0.5 * (a + c);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            c = m;
        }
    }
    0.5 * (a + c)
}

struct Flow<'a> {
    h: &'a Observable,
    level: f64,
    /// `+1` forward along the Hamiltonian flow, `-1` backward.
    dir: f64,
    grad_floor: f64,
}

impl Flow<'_> {
    fn rhs(&self, y: &State) -> Result<State, GeometryError> {
        let x = PhasePoint::new(y[0], y[1]);
        let g = self.h.gradient(x);
        let n = g.norm();
        if !(n >= self.grad_floor) {
            return Err(GeometryError::SingularFiber {
                level: self.level,
                at: x,
            });
        }
        let vq = self.dir * g.p / n;
        let vp = -self.dir * g.q / n;
        Ok([vq, vp, y[1] * vq, self.dir / n])
    }

    fn tangent(&self, x: PhasePoint) -> PhasePoint {
        let g = self.h.gradient(x);
        let n = g.norm();
        (self.dir / n) * PhasePoint::new(g.p, -g.q)
    }

    /// Adaptive sub-step of arclength `ds` starting from `y`.
    fn advance(&self, y: &State, ds: f64, tol: f64) -> Result<State, GeometryError> {
        let mut y = *y;
        let mut left = ds;
        let mut hs = ds.min(0.05);
        while left > 0.0 {
            let step = hs.min(left);
            let (yn, err) = dp5_step(&|s: &State| self.rhs(s), &y, step)?;
            let ratio = error_ratio(&y, &yn, &err, tol);
            if ratio <= 1.0 || step < 1e-12 {
                y = yn;
                left -= step;
            }
            hs = step * step_factor(ratio);
        }
        Ok(y)
    }

    /// Newton-polishes `(y[0], y[1])` back onto the level set.
    fn project(&self, y: &mut State) {
        let mut x = PhasePoint::new(y[0], y[1]);
        for _ in 0..3 {
            let j = self.h.jet(x);
            let g2 = j.grad.dot(j.grad);
            if g2 == 0.0 {
                return;
            }
            x = x - ((j.value - self.level) / g2) * j.grad;
        }
        y[0] = x.q;
        y[1] = x.p;
    }

    /// Solves for the arclength `ds` such that the point reached from `y`
    /// lies on the line through `target` normal to `normal`.
    fn land(
        &self,
        y: &State,
        target: PhasePoint,
        normal: PhasePoint,
        tol: f64,
    ) -> Result<(State, f64), GeometryError> {
        let x0 = PhasePoint::new(y[0], y[1]);
        let mut ds = (target - x0).dot(normal);
        let mut out = *y;
        for _ in 0..30 {
            out = if ds >= 0.0 {
                self.advance(y, ds, tol)?
            } else {
                let back = Flow {
                    dir: -self.dir,
                    ..*self
                };
                back.advance(y, -ds, tol)?
            };
            let x = PhasePoint::new(out[0], out[1]);
            let g = (x - target).dot(normal);
            let slope = self.tangent(x).dot(normal);
            if slope.abs() < 1e-3 {
                break;
            }
            let delta = g / slope;
            ds -= delta;
            if delta.abs() < 1e-15 {
                break;
            }
        }
        Ok((out, ds))
    }
}

enum LegEnd {
    Closed,
    Exited,
}

fn sample_of(y: &State, s: f64) -> FiberSample {
    FiberSample {
        point: PhasePoint::new(y[0], y[1]),
        arclength: s,
        action: y[2],
        time: y[3],
    }
}

fn integrate_leg(
    flow: &Flow,
    start: PhasePoint,
    opts: &TraceOptions,
    detect_closure: bool,
) -> Result<(Vec<FiberSample>, LegEnd), GeometryError> {
    let tol = opts.ode_tol;
    let t0 = flow.tangent(start);
    let mut y: State = [start.q, start.p, 0.0, 0.0];
    let mut s = 0.0;
    let mut hs = opts.initial_step;
    let mut out = vec![sample_of(&y, 0.0)];
    let mut left_start = false;
    loop {
        if s > opts.max_arclength {
            return Err(GeometryError::TraceBudgetExceeded { level: flow.level });
        }
        let step = hs.min(opts.max_step);
        let (mut yn, err) = dp5_step(&|st: &State| flow.rhs(st), &y, step)?;
        let ratio = error_ratio(&y, &yn, &err, tol);
        if ratio > 1.0 {
            hs = step * step_factor(ratio);
            if hs < 1e-13 {
                return Err(GeometryError::SingularFiber {
                    level: flow.level,
                    at: PhasePoint::new(y[0], y[1]),
                });
            }
            continue;
        }
        flow.project(&mut yn);
        let xn = PhasePoint::new(yn[0], yn[1]);
        let x = PhasePoint::new(y[0], y[1]);

        if !opts.domain.contains(xn) {
            // bisect on the sub-step length for the boundary crossing
            let (mut lo, mut hi) = (0.0, step);
            let mut ylo = y;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let ym = flow.advance(&y, mid, tol)?;
                if opts.domain.excess(PhasePoint::new(ym[0], ym[1])) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    ylo = ym;
                }
            }
            out.push(sample_of(&ylo, s + lo));
            return Ok((out, LegEnd::Exited));
        }

        if detect_closure {
            let tau_prev = (x - start).dot(t0);
            let tau_new = (xn - start).dot(t0);
            if !left_start && xn.distance(start) > 4.0 * step.max(opts.initial_step) {
                left_start = true;
            }
            if left_start && tau_prev < 0.0 && tau_new >= 0.0 && xn.distance(start) < 2.0 * step
            {
                let (yl, ds) = flow.land(&y, start, t0, tol)?;
                let xl = PhasePoint::new(yl[0], yl[1]);
                if xl.distance(start) <= opts.tol.curve_tol && ds > 0.0 {
                    let mut closing = sample_of(&yl, s + ds);
                    closing.point = start;
                    out.push(closing);
                    return Ok((out, LegEnd::Closed));
                }
            }
        }

        s += step;
        y = yn;
        out.push(sample_of(&y, s));
        hs = step * step_factor(ratio);
    }
}

/// Traces the connected component of `{H = b}` through (the projection of)
/// `seed`, oriented along the Hamiltonian flow.
pub fn trace_level_curve(
    h: &Observable,
    b: f64,
    seed: PhasePoint,
    opts: &TraceOptions,
) -> Result<FiberCurve, GeometryError> {
    if !opts.domain.is_valid() || !seed.is_finite() || !b.is_finite() {
        return Err(GeometryError::InvalidInput(format!(
            "trace of level {b} from seed {seed}"
        )));
    }
    let start = project_to_level(h, b, seed, opts)?;
    if !opts.domain.contains(start) {
        return Err(GeometryError::NoSeed { level: b });
    }
    let fwd = Flow {
        h,
        level: b,
        dir: 1.0,
        grad_floor: opts.grad_floor,
    };
    let (forward, end) = integrate_leg(&fwd, start, opts, true)?;
    let curve = match end {
        LegEnd::Closed => {
            let last = forward.last().copied().unwrap_or(forward[0]);
            FiberCurve {
                observable: h.clone(),
                level: b,
                period: Some(last.time),
                samples: forward,
                closed: true,
                truncated: false,
                orientation: 1,
                options: *opts,
            }
        }
        LegEnd::Exited => {
            let back = Flow { dir: -1.0, ..fwd };
            let (backward, _) = integrate_leg(&back, start, opts, false)?;
            let mut samples: Vec<FiberSample> = backward
                .iter()
                .rev()
                .map(|s| FiberSample {
                    arclength: -s.arclength,
                    ..*s
                })
                .collect();
            samples.extend(forward.into_iter().skip(1));
            let base = samples[0];
            for s in &mut samples {
                s.arclength -= base.arclength;
                s.action -= base.action;
                s.time -= base.time;
            }
            FiberCurve {
                observable: h.clone(),
                level: b,
                samples,
                closed: false,
                truncated: true,
                period: None,
                orientation: 1,
                options: *opts,
            }
        }
    };
    curve.check_regular()?;
    Ok(curve)
}

impl FiberCurve {
    /// Retraces the same component at a nearby level, seeded from this
    /// curve's first sample.
    pub fn retrace_at(&self, level: f64) -> Result<FiberCurve, GeometryError> {
        // open curves start on the domain boundary; seed from the interior
        let seed = if self.closed {
            self.samples[0].point
        } else {
            self.samples[self.samples.len() / 2].point
        };
        trace_level_curve(&self.observable, level, seed, &self.options)
    }

    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.arclength)
    }

    /// `∮ p dq` around a closed fiber.
    pub fn loop_action(&self) -> Option<f64> {
        self.closed
            .then(|| self.samples.last().map_or(0.0, |s| s.action))
    }

    fn flow(&self) -> Flow<'_> {
        Flow {
            h: &self.observable,
            level: self.level,
            dir: 1.0,
            grad_floor: self.options.grad_floor,
        }
    }

    /// Rejects traces that pass through (or numerically graze) a critical
    /// point of `H`, refining each local minimum of `|∇H|` along the curve.
    fn check_regular(&self) -> Result<(), GeometryError> {
        let g: Vec<f64> = self
            .samples
            .iter()
            .map(|s| self.observable.gradient(s.point).norm())
            .collect();
        let gmax = g.iter().copied().fold(0.0, f64::max);
        let n = g.len();
        for k in 1..n.saturating_sub(1) {
            if !(g[k] <= g[k - 1] && g[k] <= g[k + 1]) || g[k] > 0.1 * gmax {
                continue;
            }
            let y0 = self.samples[k - 1].state();
            let span = self.samples[k + 1].arclength - self.samples[k - 1].arclength;
            let flow = self.flow();
            let at = |t: f64| -> Result<f64, GeometryError> {
                let y = flow.advance(&y0, t, self.options.ode_tol)?;
                Ok(self.observable.gradient(PhasePoint::new(y[0], y[1])).norm())
            };
            let (mut a, mut c) = (0.0, span);
            let r = 0.5 * (3.0 - 5f64.sqrt());
            for _ in 0..60 {
                let m1 = a + r * (c - a);
                let m2 = c - r * (c - a);
                if at(m1)? < at(m2)? {
                    c = m2;
                } else {
                    a = m1;
                }
            }
            let gmin = at(0.5 * (a + c))?;
            if gmin < 1e-6 * gmax.max(1.0) {
                return Err(GeometryError::SingularFiber {
                    level: self.level,
                    at: self.samples[k].point,
                });
            }
        }
        Ok(())
    }

    /// Locates `x` on the curve.
    pub fn locate(&self, x: PhasePoint) -> Result<CurvePosition, GeometryError> {
        let (k, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.point.distance(x)))
            .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        let flow = self.flow();
        let last = self.samples.len() - 1;
        // closed curves: the closing sample duplicates sample 0
        let k = if self.closed && k == last { 0 } else { k };
        let tk = flow.tangent(self.samples[k].point);
        let ahead = (x - self.samples[k].point).dot(tk) >= 0.0;
        let base = match (ahead, k) {
            (true, k) if k < last => k,
            (true, _) => k,
            (false, 0) if self.closed => last - 1,
            (false, 0) => 0,
            (false, k) => k - 1,
        };
        let s0 = self.samples[base];
        let (y, ds) = flow.land(&s0.state(), x, tk, self.options.ode_tol)?;
        let landed = PhasePoint::new(y[0], y[1]);
        let distance = landed.distance(x);
        if distance > self.options.tol.curve_tol {
            return Err(GeometryError::PointNotOnFiber {
                at: x,
                level: self.level,
                distance,
            });
        }
        let mut pos = CurvePosition {
            point: x,
            arclength: s0.arclength + ds,
            action: y[2],
            time: y[3],
            index: base,
        };
        if ds < 0.0 && base > 0 {
            pos.index = base - 1;
        }
        if self.closed && pos.arclength >= self.length() {
            let loop_ = self.samples[last];
            pos.arclength -= loop_.arclength;
            pos.action -= loop_.action;
            pos.time -= loop_.time;
            pos.index = 0;
        }
        if pos.arclength < 0.0 && self.closed {
            let loop_ = self.samples[last];
            pos.arclength += loop_.arclength;
            pos.action += loop_.action;
            pos.time += loop_.time;
            pos.index = last - 1;
        }
        Ok(pos)
    }

    /// `∫ p dq` from `from` to `to` along the orientation (wrapping once
    /// around closed curves; signed on open curves).
    pub fn action_between(&self, from: &CurvePosition, to: &CurvePosition) -> f64 {
        let d = to.action - from.action;
        match self.loop_action() {
            Some(a) if to.arclength < from.arclength => d + a,
            _ => d,
        }
    }

    /// Points along the oriented path from `from` to `to`, endpoints included.
    /// Each node carries its integrator state so that callers can refine
    /// between consecutive nodes with [`FiberCurve::point_between`].
    pub fn path_nodes(&self, from: &CurvePosition, to: &CurvePosition) -> Vec<PathNode> {
        let mut nodes = vec![PathNode {
            state: from.state(),
            arclength: from.arclength,
        }];
        let push = |nodes: &mut Vec<PathNode>, s: &FiberSample, offset: f64| {
            nodes.push(PathNode {
                state: s.state(),
                arclength: s.arclength + offset,
            });
        };
        let forward = to.arclength >= from.arclength;
        if self.closed && !forward {
            let total = self.length();
            for s in &self.samples {
                if s.arclength > from.arclength {
                    push(&mut nodes, s, 0.0);
                }
            }
            for s in &self.samples[1..] {
                if s.arclength < to.arclength {
                    push(&mut nodes, s, total);
                }
            }
            nodes.push(PathNode {
                state: to.state(),
                arclength: to.arclength + total,
            });
        } else if forward {
            for s in &self.samples {
                if s.arclength > from.arclength && s.arclength < to.arclength {
                    push(&mut nodes, s, 0.0);
                }
            }
            nodes.push(PathNode {
                state: to.state(),
                arclength: to.arclength,
            });
        } else {
            for s in self.samples.iter().rev() {
                if s.arclength < from.arclength && s.arclength > to.arclength {
                    push(&mut nodes, s, 0.0);
                }
            }
            nodes.push(PathNode {
                state: to.state(),
                arclength: to.arclength,
            });
        }
        nodes.dedup_by(|b, a| (a.arclength - b.arclength).abs() < 1e-14);
        nodes
    }

    /// Point at fraction `t ∈ [0, 1]` of the way between two consecutive path
    /// nodes.
    pub fn point_between(&self, a: &PathNode, b: &PathNode, t: f64) -> PhasePoint {
        let (lo, hi, frac) = if a.arclength <= b.arclength {
            (a, b, t)
        } else {
            (b, a, 1.0 - t)
        };
        let ds = (hi.arclength - lo.arclength) * frac;
        match self.flow().advance(&lo.state, ds, self.options.ode_tol) {
            Ok(y) => PhasePoint::new(y[0], y[1]),
            Err(_) => {
                let pa = PhasePoint::new(lo.state[0], lo.state[1]);
                let pb = PhasePoint::new(hi.state[0], hi.state[1]);
                pa + frac * (pb - pa)
            }
        }
    }

    /// Writes the samples as CSV with columns `q,p,arclength,action,time`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "q,p,arclength,action,time")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                s.point.q, s.point.p, s.arclength, s.action, s.time
            )?;
        }
        Ok(())
    }
}

/// A node on an oriented fiber path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    pub(crate) state: State,
    /// Arclength coordinate, unwrapped along the path.
    pub arclength: f64,
}

impl PathNode {
    pub(crate) fn from_sample(s: &FiberSample, offset: f64) -> Self {
        PathNode {
            state: s.state(),
            arclength: s.arclength + offset,
        }
    }

    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.state[0], self.state[1])
    }
}
