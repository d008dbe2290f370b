use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::Serialize;

use super::overlap::{overlap_on_fibers, FiberPair, OverlapOptions, SemiclassicalAmplitude, SystemLevel};
use super::{SemiclassicalError, Warning};
use crate::geometry::{PhasePoint, PrequantumForm, ReferenceLagrangian};

/// One chain `(c₁, …, c_k)` with `c_a ∈ 𝓛_a ∩ 𝓛_{a+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicTerm {
    pub chain: Vec<PhasePoint>,
    /// Sum of the factor actions; reference points and gauge cancel.
    pub action: f64,
    pub maslov: i32,
    pub hessian_product: f64,
    pub contribution: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicAmplitude {
    pub h: f64,
    pub terms: Vec<CyclicTerm>,
    /// `(2πh)^{-k/2} Σ contributions`
    pub value: Complex64,
    /// The overlaps `(ψ_{a+1}, ψ_a)` around the cycle.
    pub factors: Vec<SemiclassicalAmplitude>,
    pub warnings: Vec<Warning>,
}

/// Product of overlaps `(ψ₁, ψ_k) ⋯ (ψ₃, ψ₂)(ψ₂, ψ₁)` expanded over chains of
/// intersection points. With `chain = None` every chain is summed; otherwise
/// only the chain whose points match `chain` (within the dedup radius).
pub fn cyclic_amplitude(
    systems: &[SystemLevel],
    chain: Option<&[PhasePoint]>,
    lambda: &ReferenceLagrangian,
    alpha: &PrequantumForm,
    h: f64,
    opts: &OverlapOptions,
) -> Result<CyclicAmplitude, SemiclassicalError> {
    let k = systems.len();
    if !(2..=4).contains(&k) {
        return Err(SemiclassicalError::InvalidInput(format!(
            "cyclic amplitudes need 2 to 4 systems, got {k}"
        )));
    }
    if chain.is_some_and(|c| c.len() != k) {
        return Err(SemiclassicalError::InvalidInput("chain length differs from the number of systems".into()));
    }
    let fibers = opts.exec.try_map(systems, |s| s.trace(&opts.trace))?;
    let mut factors = Vec::with_capacity(k);
    for a in 0..k {
        let pair = FiberPair::new(fibers[a].clone(), fibers[(a + 1) % k].clone(), lambda)?;
        factors.push(overlap_on_fibers(&pair, lambda, alpha, h, opts)?);
    }
    let radius = opts.trace.tol.dedup_radius;
    let choices: Vec<Vec<usize>> = factors
        .iter()
        .enumerate()
        .map(|(a, f)| {
            (0..f.terms.len())
                .filter(|&i| chain.map_or(true, |c| f.terms[i].c.c.distance(c[a]) <= radius))
                .collect()
        })
        .collect();
    if let Some(c) = chain {
        if let Some(a) = choices.iter().position(|v| v.is_empty() && !factors[0].terms.is_empty()) {
            if !factors[a].terms.is_empty() {
                return Err(SemiclassicalError::InvalidInput(format!(
                    "chain point {} is not an intersection of fibers {} and {}",
                    c[a],
                    a + 1,
                    (a + 1) % k + 1
                )));
            }
        }
    }
    let mut terms = Vec::new();
    let mut idx = vec![0usize; k];
    if choices.iter().all(|v| !v.is_empty()) {
        loop {
            let picked: Vec<_> = (0..k).map(|a| &factors[a].terms[choices[a][idx[a]]]).collect();
            let action: f64 = picked.iter().map(|t| t.action).sum();
            let maslov: i32 = picked.iter().map(|t| t.maslov).sum();
            let hessian_product: f64 = picked.iter().map(|t| t.hessian_det).product();
            terms.push(CyclicTerm {
                chain: picked.iter().map(|t| t.c.c).collect(),
                action,
                maslov,
                hessian_product,
                contribution: Complex64::from_polar(
                    hessian_product.abs().sqrt(),
                    action / h + FRAC_PI_2 * maslov as f64,
                ),
            });
            // odometer over the choice lists
            let mut a = 0;
            while a < k {
                idx[a] += 1;
                if idx[a] < choices[a].len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
            if a == k {
                break;
            }
        }
    }
    let sum: Complex64 = terms.iter().map(|t| t.contribution).sum();
    let warnings = factors.iter().flat_map(|f| f.warnings.iter().cloned()).collect();
    Ok(CyclicAmplitude {
        h,
        value: (TAU * h).powf(-(k as f64) / 2.0) * sum,
        terms,
        factors,
        warnings,
    })
}

/// Signed (counter-clockwise positive) area of a polygon.
pub fn shoelace_area(vertices: &[PhasePoint]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].wedge(vertices[(i + 1) % n]))
        .sum::<f64>()
}
