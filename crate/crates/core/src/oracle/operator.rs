use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Grid, OracleError};
use crate::geometry::Observable;

/// A Weyl-quantized observable on a grid.
#[derive(Debug, Clone)]
pub struct GridQuantization {
    pub grid: Grid,
    pub h: f64,
    pub operator: DMatrix<Complex64>,
    pub observable: Option<Observable>,
}

impl GridQuantization {
    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.operator;
        let n = m.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// `Q^a`: the diagonal matrix of `q_j^a`.
pub fn position_power(grid: &Grid, a: u32) -> DMatrix<Complex64> {
    let d: Vec<Complex64> = grid
        .coordinates()
        .map(|q| Complex64::new(q.powi(a as i32), 0.0))
        .collect();
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
}

/// `P^b` by spectral differentiation: the circulant matrix
/// `(1/N) Σ_m (h k_m)^b exp(i k_m (q_j − q_l))`. For odd `b` the Nyquist mode
/// is dropped so that the result stays Hermitian.
pub fn momentum_power(grid: &Grid, h: f64, b: u32) -> DMatrix<Complex64> {
    let n = grid.points;
    if b == 0 {
        return DMatrix::identity(n, n);
    }
    let nyquist = -(n as i64) / 2;
    let symbol: Vec<(i64, f64)> = grid
        .wavenumbers()
        .filter(|(m, _)| b % 2 == 0 || *m != nyquist)
        .map(|(m, k)| (m, (h * k).powi(b as i32)))
        .collect();
    // first column of the circulant, indexed by d = j − l mod N; the phase
    // k_m·d·Δq = 2π·md/N is reduced mod N in integers to keep it exact
    let col: Vec<Complex64> = (0..n as i64)
        .map(|d| {
            symbol
                .iter()
                .map(|&(m, s)| {
                    let r = (m * d).rem_euclid(n as i64) as f64;
                    Complex64::from_polar(s, TAU * r / n as f64)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |j, l| col[(j + n - l) % n])
}

/// `Weyl(q^a p^b) = 2^{-a} Σ_k C(a,k) Q^k P^b Q^{a−k}`, exact for `b ≤ 2`.
pub fn weyl_monomial(grid: &Grid, h: f64, a: u32, b: u32) -> Result<DMatrix<Complex64>, OracleError> {
    weyl_monomial_with(grid, a, b, &momentum_power(grid, h, b))
}

fn weyl_monomial_with(
    grid: &Grid,
    a: u32,
    b: u32,
    pb: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>, OracleError> {
    if a > 0 && b > 2 {
        return Err(OracleError::UnsupportedOrdering {
            q_degree: a,
            p_degree: b,
        });
    }
    if a == 0 {
        return Ok(pb.clone());
    }
    if b == 0 {
        return Ok(position_power(grid, a));
    }
    let q: Vec<f64> = grid.coordinates().collect();
    let n = grid.points;
    let mut binom = 1.0;
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..=a {
        let w = binom / 2f64.powi(a as i32);
        for j in 0..n {
            let left = q[j].powi(k as i32);
            for l in 0..n {
                out[(j, l)] += pb[(j, l)] * (w * left * q[l].powi((a - k) as i32));
            }
        }
        binom = binom * (a - k) as f64 / (k + 1) as f64;
    }
    Ok(out)
}

/// Weyl quantization of a polynomial, pendulum, or sum observable.
pub fn build_weyl_operator(obs: &Observable, grid: &Grid, h: f64) -> Result<GridQuantization, OracleError> {
    if !(h > 0.0) {
        return Err(OracleError::InvalidGrid(format!("h = {h}")));
    }
    let n = grid.points;
    let mut op = DMatrix::<Complex64>::zeros(n, n);
    accumulate(obs, grid, h, &mut op)?;
    Ok(GridQuantization {
        grid: *grid,
        h,
        operator: op,
        observable: Some(obs.clone()),
    })
}

fn accumulate(obs: &Observable, grid: &Grid, h: f64, op: &mut DMatrix<Complex64>) -> Result<(), OracleError> {
    match obs {
        Observable::Polynomial(poly) => {
            let mut cache: Vec<(u32, DMatrix<Complex64>)> = Vec::new();
            for &(a, b, c) in poly.terms() {
                if a > 0 && b > 2 {
                    return Err(OracleError::UnsupportedOrdering {
                        q_degree: a,
                        p_degree: b,
                    });
                }
                if !cache.iter().any(|(bb, _)| *bb == b) {
                    cache.push((b, momentum_power(grid, h, b)));
                }
                let pb = &cache.iter().find(|(bb, _)| *bb == b).expect("cached").1;
                *op += weyl_monomial_with(grid, a, b, pb)? * Complex64::new(c, 0.0);
            }
        }
        Observable::Pendulum => {
            *op += momentum_power(grid, h, 2) * Complex64::new(0.5, 0.0);
            for (j, q) in grid.coordinates().enumerate() {
                op[(j, j)] -= Complex64::new(q.cos(), 0.0);
            }
        }
        Observable::Sum(parts) => {
            for p in parts {
                accumulate(p, grid, h, op)?;
            }
        }
    }
    Ok(())
}
