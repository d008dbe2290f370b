//! Semiclassical-versus-oracle building blocks shared by the scenarios.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use semiclassical::geometry::{FiberCurve, GeometryError, Observable, PrequantumForm, ReferenceLagrangian};
use semiclassical::oracle::{build_weyl_operator, exact_overlap, level_spacing, Eigensystem, Grid, LevelData, OracleError};
use semiclassical::semiclassics::{
    bohr_sommerfeld_levels, closed_fiber, overlap, probability_from_terms, BsOptions, OverlapOptions,
    SemiclassicalAmplitude, SemiclassicalError, SystemLevel,
};
use semiclassical::star::StarError;
use semiclassical::Execution;

use crate::config::LevelSelector;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Semiclassical(#[from] SemiclassicalError),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error(transparent)]
    Star(#[from] StarError),

    #[error("no Bohr-Sommerfeld level {0}")]
    MissingLevel(String),

    #[error("{0}")]
    Unsupported(String),
}

impl From<GeometryError> for PipelineError {
    fn from(e: GeometryError) -> Self {
        PipelineError::Semiclassical(e.into())
    }
}

/// Shared numerical choices of one run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub lambda: ReferenceLagrangian,
    pub alpha: PrequantumForm,
    pub overlap: OverlapOptions,
    pub bs: BsOptions,
    pub grid: Grid,
    pub exec: Execution,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            lambda: ReferenceLagrangian::slope(1.0),
            alpha: PrequantumForm::canonical(),
            overlap: OverlapOptions::default(),
            bs: BsOptions::default(),
            grid: Grid::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedLevel {
    pub b: f64,
    /// Bohr–Sommerfeld index, when the level came from the ladder.
    pub n: Option<u32>,
    pub data: Option<LevelData>,
}

/// Turns a selector into a level value, tracing the fiber when needed.
pub fn resolve_level(
    obs: &Observable,
    sel: LevelSelector,
    h: f64,
    range: (f64, f64),
    setup: &Setup,
) -> Result<ResolvedLevel, PipelineError> {
    let ladder_pick = |pick: &dyn Fn(&[semiclassical::semiclassics::BSLevel]) -> Option<usize>| {
        let ladder = bohr_sommerfeld_levels(obs, h, range, &setup.bs)?;
        let i = pick(&ladder.levels).ok_or_else(|| PipelineError::MissingLevel(format!("{sel:?} in {range:?}")))?;
        let l = ladder.levels[i];
        Ok::<_, PipelineError>(ResolvedLevel {
            b: l.b,
            n: Some(l.n),
            data: Some(LevelData::Closed {
                level: l.b,
                period: l.period,
            }),
        })
    };
    match sel {
        LevelSelector::Value(b) => {
            let data = if obs.is_linear() {
                Some(LevelData::Linear { level: b })
            } else {
                closed_fiber(obs, b, &setup.bs)
                    .ok()
                    .and_then(|c| LevelData::from_curve(&c).ok())
            };
            Ok(ResolvedLevel { b, n: None, data })
        }
        LevelSelector::Index { n } => ladder_pick(&|ls| ls.iter().position(|l| l.n == n)),
        LevelSelector::Energy { energy } => ladder_pick(&|ls| {
            ls.iter()
                .enumerate()
                .min_by(|a, b| (a.1.b - energy).abs().total_cmp(&(b.1.b - energy).abs()))
                .map(|(i, _)| i)
        }),
    }
}

/// What the oracle knows about one side of an overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleState {
    /// `δ(q − b)`
    Position(f64),
    /// `exp(ibq/h)/√(2πh)`
    Momentum(f64),
    /// Grid eigenvector with this index.
    Eigen(usize),
}

pub fn oracle_state(obs: &Observable, level: &ResolvedLevel) -> Option<OracleState> {
    if *obs == Observable::position() {
        Some(OracleState::Position(level.b))
    } else if *obs == Observable::momentum() {
        Some(OracleState::Momentum(level.b))
    } else {
        level.n.map(|n| OracleState::Eigen(n as usize))
    }
}

/// Grid eigensystem of an observable, or `None` for position and momentum.
pub fn oracle_eigensystem(obs: &Observable, grid: &Grid, h: f64) -> Result<Option<Eigensystem>, PipelineError> {
    if obs.is_linear() {
        return Ok(None);
    }
    let op = build_weyl_operator(obs, grid, h)?;
    Ok(Some(Eigensystem::solve(&op)?))
}

fn momentum_projection(es: &Eigensystem, n: usize, p: f64, h: f64) -> f64 {
    let g = &es.grid;
    let col = es.eigenvectors.column(n);
    let s: Complex64 = g
        .coordinates()
        .zip(col.iter())
        .map(|(q, v)| v * Complex64::from_polar(1.0, -p * q / h))
        .sum();
    s.norm() * g.spacing() / (TAU * h).sqrt()
}

/// `|(ψ₂, ψ₁)|` for normalized oracle states; `None` for unsupported pairs.
pub fn oracle_modulus(
    a: OracleState,
    b: OracleState,
    ea: Option<&Eigensystem>,
    eb: Option<&Eigensystem>,
    h: f64,
) -> Option<f64> {
    use OracleState::*;
    match (a, b) {
        (Position(_), Momentum(_)) | (Momentum(_), Position(_)) => Some((TAU * h).powf(-0.5)),
        (Position(q), Eigen(n)) => eb.map(|e| e.state(n).evaluate(q).norm()),
        (Eigen(n), Position(q)) => ea.map(|e| e.state(n).evaluate(q).norm()),
        (Momentum(p), Eigen(n)) => eb.map(|e| momentum_projection(e, n, p, h)),
        (Eigen(n), Momentum(p)) => ea.map(|e| momentum_projection(e, n, p, h)),
        (Eigen(m), Eigen(n)) => {
            let (ea, eb) = (ea?, eb?);
            exact_overlap(&ea.state(m), &eb.state(n)).ok().map(|z| z.norm())
        }
        _ => None,
    }
}

/// `Δb₁ Δb₂` of the half-density bridge.
pub fn bridge_weight(l1: &LevelData, l2: &LevelData, h: f64) -> f64 {
    level_spacing(l1, h) * level_spacing(l2, h)
}

/// Center and half-width of a closed fiber's projection onto `q`.
pub fn q_extent(curve: &FiberCurve) -> (f64, f64) {
    let (lo, hi) = curve
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.point.q), hi.max(s.point.q)));
    (0.5 * (lo + hi), 0.5 * (hi - lo))
}

/// Relative phase of the two terms of a two-point overlap, ordered by `p`.
fn cross_phase(amp: &SemiclassicalAmplitude) -> Option<f64> {
    let mut t: Vec<_> = amp.terms.iter().collect();
    if t.len() != 2 {
        return None;
    }
    t.sort_by(|a, b| a.c.c.p.total_cmp(&b.c.c.p));
    Some((t[1].action - t[0].action) / amp.h + FRAC_PI_2 * (t[1].maslov - t[0].maslov) as f64)
}

/// Nearest position to `q0` where the interference term of a two-point
/// position overlap vanishes, i.e. the relative phase is an odd multiple of
/// `π/2`. There the probability equals the sum of the single-term weights.
pub fn interference_free_position(
    closed: &SystemLevel,
    q0: f64,
    h: f64,
    setup: &Setup,
) -> Result<f64, PipelineError> {
    let phase = |q: f64| -> Result<f64, PipelineError> {
        let amp = overlap(
            &SystemLevel::new(Observable::position(), q),
            closed,
            &setup.lambda,
            &setup.alpha,
            h,
            &setup.overlap,
        )?;
        cross_phase(&amp).ok_or_else(|| PipelineError::Unsupported(format!("{} overlap terms at q = {q}", amp.terms.len())))
    };
    let phi0 = phase(q0)?;
    let target = ((phi0 - FRAC_PI_2) / PI).round() * PI + FRAC_PI_2;
    let mut q = q0;
    let mut f = phi0 - target;
    let step = 1e-6;
    for _ in 0..40 {
        if f.abs() < 1e-12 {
            break;
        }
        let slope = (phase(q + step)? - phase(q - step)?) / (2.0 * step);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = q - f / slope;
        q = next;
        f = phase(q)? - target;
    }
    Ok(q)
}

/// Bridged semiclassical probability `P·Δb₁Δb₂` at `(q, b)` and the oracle
/// density `|ψ_n(q)|²`.
pub fn position_probability(
    closed: &SystemLevel,
    level: &LevelData,
    q: f64,
    es: &Eigensystem,
    n: usize,
    h: f64,
    setup: &Setup,
) -> Result<(f64, f64), PipelineError> {
    let amp = overlap(
        &SystemLevel::new(Observable::position(), q),
        closed,
        &setup.lambda,
        &setup.alpha,
        h,
        &setup.overlap,
    )?;
    let semi = probability_from_terms(&amp) * bridge_weight(&LevelData::Linear { level: q }, level, h);
    let exact = es.state(n).evaluate(q).norm_sqr();
    Ok((semi, exact))
}
