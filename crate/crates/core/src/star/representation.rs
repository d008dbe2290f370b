use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::moyal::moyal_product;
use super::poly::PolynomialObservable;
use super::series::FormalSeries;
use super::StarError;
use crate::geometry::{Observable, PrequantumForm, ReferenceLagrangian};
use crate::oracle::{weyl_monomial, Grid};
use crate::semiclassics::{
    compose_kernels, gluing_index, overlap, ComposeOptions, OverlapOptions, SemiclassicalAmplitude, SystemLevel,
};

/// Weyl-ordered grid operator of a polynomial with complex coefficients.
pub fn weyl_operator_of(f: &PolynomialObservable, grid: &Grid, h: f64) -> Result<DMatrix<Complex64>, StarError> {
    let n = grid.points;
    let mut op = DMatrix::<Complex64>::zeros(n, n);
    for (a, b, c) in f.to_complex_terms() {
        op += weyl_monomial(grid, h, a, b)? * c;
    }
    Ok(op)
}

/// `Σ hⁿ Op(fₙ)` at a numerical `h`.
pub fn series_operator(f: &FormalSeries, grid: &Grid, h: f64) -> Result<DMatrix<Complex64>, StarError> {
    let n = grid.points;
    let mut op = DMatrix::<Complex64>::zeros(n, n);
    for (k, fk) in f.coefficients().iter().enumerate() {
        if !fk.is_zero() {
            op += weyl_operator_of(fk, grid, h)? * Complex64::new(h.powi(k as i32), 0.0);
        }
    }
    Ok(op)
}

/// Multiplies every overlap term by `f(c)` and resums.
pub fn weight_amplitude(amp: &SemiclassicalAmplitude, f: &FormalSeries) -> SemiclassicalAmplitude {
    let mut out = amp.clone();
    for t in &mut out.terms {
        t.contribution *= f.evaluate(t.c.c, amp.h);
    }
    out.value = out.prefactor.factor(out.h) * out.terms.iter().map(|t| t.contribution).sum::<Complex64>();
    out
}

/// Leading-order matrix element `π(f)(b₂, b₁)`: the overlap with each
/// intersection term weighted by the symbol at that point.
pub fn semiclassical_matrix_element(
    f: &FormalSeries,
    sys1: &SystemLevel,
    sys2: &SystemLevel,
    lambda: &ReferenceLagrangian,
    alpha: &PrequantumForm,
    h: f64,
    opts: &OverlapOptions,
) -> Result<SemiclassicalAmplitude, StarError> {
    let amp = overlap(sys1, sys2, lambda, alpha, h, opts)?;
    Ok(weight_amplitude(&amp, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomomorphismOptions {
    /// Range of the intermediate position label.
    pub interval: (f64, f64),
    /// Truncation order of `f⋆g`.
    pub order: usize,
    /// Keep only the `h⁰` parts of the symbols.
    pub leading_order: bool,
    pub overlap: OverlapOptions,
    pub compose: ComposeOptions,
}

impl Default for HomomorphismOptions {
    fn default() -> Self {
        HomomorphismOptions {
            interval: (-3.0, 3.0),
            order: 4,
            leading_order: true,
            overlap: OverlapOptions::default(),
            compose: ComposeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomomorphismReport {
    pub h: f64,
    /// `π(f⋆g)(b₂, b₁)`
    pub left: Complex64,
    /// `∫ π(f)(b₂, b) π(g)(b, b₁) db` by stationary phase.
    pub right: Complex64,
    /// `right` with the gluing phase of each stationary point removed.
    pub normalized_right: Complex64,
    /// Gluing index of each stationary point, from the unit composition.
    pub gluing_indices: Vec<i32>,
    pub deviation: f64,
}

fn symbol(f: &FormalSeries, leading: bool) -> FormalSeries {
    if leading {
        f.with_order(0)
    } else {
        f.clone()
    }
}

/// Compares `π(f⋆g)` with the composition of `π(f)` and `π(g)` through the
/// position fibration. The gluing phase of each stationary point is read off
/// the same composition with `f = g = 1` and divided out.
#[allow(clippy::too_many_arguments)]
pub fn homomorphism_check(
    f: &FormalSeries,
    g: &FormalSeries,
    sys1: &SystemLevel,
    sys2: &SystemLevel,
    lambda: &ReferenceLagrangian,
    alpha: &PrequantumForm,
    h: f64,
    opts: &HomomorphismOptions,
) -> Result<HomomorphismReport, StarError> {
    let fg = symbol(&moyal_product(f, g, opts.order)?, opts.leading_order);
    let (f, g) = (symbol(f, opts.leading_order), symbol(g, opts.leading_order));
    let direct = overlap(sys1, sys2, lambda, alpha, h, &opts.overlap)?;
    let left = weight_amplitude(&direct, &fg);

    let position = |b: f64| SystemLevel::new(Observable::position(), b);
    let u01 = |b: f64| overlap(sys1, &position(b), lambda, alpha, h, &opts.overlap);
    let u20 = |b: f64| overlap(&position(b), sys2, lambda, alpha, h, &opts.overlap);
    let unit = compose_kernels(&u20, &u01, opts.interval, h, &opts.compose)?;
    let w01 = |b: f64| u01(b).map(|a| weight_amplitude(&a, &g));
    let w20 = |b: f64| u20(b).map(|a| weight_amplitude(&a, &f));
    let weighted = compose_kernels(&w20, &w01, opts.interval, h, &opts.compose)?;
    if unit.points.len() != weighted.points.len() {
        return Err(StarError::Mismatch(format!(
            "{} stationary points with unit symbols, {} with f and g",
            unit.points.len(),
            weighted.points.len()
        )));
    }

    let pref = direct.prefactor.factor(h);
    let mut gluing_indices = Vec::with_capacity(unit.points.len());
    let mut normalized = Complex64::new(0.0, 0.0);
    for (u, w) in unit.points.iter().zip(&weighted.points) {
        let c = u.term_20.c.c;
        let term = direct
            .terms
            .iter()
            .min_by(|a, b| a.c.c.distance(c).total_cmp(&b.c.c.distance(c)))
            .ok_or_else(|| StarError::Mismatch("direct kernel has no terms".into()))?;
        let (mu, _) = gluing_index(u.contribution, pref * term.contribution);
        gluing_indices.push(mu);
        normalized += w.contribution * Complex64::from_polar(1.0, -FRAC_PI_4 * mu as f64);
    }
    let deviation = (normalized - left.value).norm() / left.value.norm();
    Ok(HomomorphismReport {
        h,
        left: left.value,
        right: weighted.value,
        normalized_right: normalized,
        gluing_indices,
        deviation,
    })
}
