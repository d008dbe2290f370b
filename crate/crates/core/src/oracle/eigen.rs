use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{Grid, GridQuantization, OracleError};

/// A vector on a grid, normalized with weight `Δq`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub grid: Grid,
    pub h: f64,
    pub values: DVector<Complex64>,
}

impl GridState {
    pub fn norm(&self) -> f64 {
        (self.values.norm_squared() * self.grid.spacing()).sqrt()
    }

    /// Trigonometric interpolation at an arbitrary position.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.evaluate_many(&[x])[0]
    }

    /// Values at several positions (one forward transform, shared).
    pub fn evaluate_many(&self, xs: &[f64]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.points;
        let coeffs: Vec<(i64, f64, Complex64)> = g
            .wavenumbers()
            .map(|(m, k)| {
                let c = self
                    .values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, -k * j as f64 * g.spacing()))
                    .sum::<Complex64>()
                    / n as f64;
                (m, k, c)
            })
            .collect();
        xs.iter()
            .map(|&x| {
                let shift = x + g.half_width;
                coeffs
                    .iter()
                    .map(|&(m, k, c)| {
                        if m == -(n as i64) / 2 {
                            c * (k * shift).cos()
                        } else {
                            c * Complex64::from_polar(1.0, k * shift)
                        }
                    })
                    .sum()
            })
            .collect()
    }
}

/// `(ψ₂, ψ₁) = Σ_j ψ₂(q_j) · conj(ψ₁(q_j)) · Δq`, conjugate-linear in `ψ₁`.
pub fn exact_overlap(psi1: &GridState, psi2: &GridState) -> Result<Complex64, OracleError> {
    if psi1.grid != psi2.grid {
        return Err(OracleError::GridMismatch);
    }
    let s: Complex64 = psi2
        .values
        .iter()
        .zip(psi1.values.iter())
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(s * psi1.grid.spacing())
}

/// Ascending eigenvalues with `Δq`-orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub grid: Grid,
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl Eigensystem {
    /// Diagonalizes a Hermitian grid operator. A real symmetric solver is used
    /// when the imaginary part vanishes.
    pub fn solve(op: &GridQuantization) -> Result<Self, OracleError> {
        let m = &op.operator;
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let imag = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let n = m.nrows();
        let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = if imag <= 1e-14 * scale {
            let re = m.map(|z| z.re);
            let re = 0.5 * (&re + re.transpose());
            let e = SymmetricEigen::try_new(re, f64::EPSILON, 0).ok_or(OracleError::NoConvergence)?;
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| Complex64::new(x, 0.0)))
        } else {
            let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let e = SymmetricEigen::try_new(herm, f64::EPSILON, 0).ok_or(OracleError::NoConvergence)?;
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let w = op.grid.spacing().sqrt();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            let v = vecs.column(src);
            // deterministic phase: the first sizeable component is real positive
            let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = v.iter().find(|z| z.norm() > 1e-3 * vmax).copied().unwrap_or(Complex64::new(1.0, 0.0));
            let phase = pivot.conj() / pivot.norm();
            let norm = v.norm();
            for r in 0..n {
                out[(r, col)] = v[r] * phase / (norm * w);
            }
        }
        Ok(Eigensystem {
            grid: op.grid,
            h: op.h,
            eigenvalues: order.iter().map(|&i| vals[i]).collect(),
            eigenvectors: out,
        })
    }

    pub fn state(&self, n: usize) -> GridState {
        GridState {
            grid: self.grid,
            h: self.h,
            values: self.eigenvectors.column(n).into_owned(),
        }
    }

    /// Number of eigenvalues strictly below `cutoff`.
    pub fn retained(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().take_while(|&&e| e < cutoff).count()
    }

    /// Index of the eigenvalue closest to `e`.
    pub fn nearest(&self, e: f64) -> usize {
        self.eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs()))
            .map_or(0, |(i, _)| i)
    }

    /// `(v_m, A v_n)` with the weight `Δq`.
    pub fn matrix_element(&self, op: &DMatrix<Complex64>, m: usize, n: usize) -> Complex64 {
        let av = op * self.eigenvectors.column(n);
        self.eigenvectors.column(m).dotc(&av) * self.grid.spacing()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Observable;
    use crate::oracle::build_weyl_operator;

    #[test]
    fn oscillator_spectrum_and_orthonormality() {
        let g = Grid::new(8.0, 256).unwrap();
        let h = 0.1;
        let op = build_weyl_operator(&Observable::harmonic_oscillator(), &g, h).unwrap();
        let es = Eigensystem::solve(&op).unwrap();
        for n in 0..20 {
            assert!((es.eigenvalues[n] - h * (n as f64 + 0.5)).abs() < 1e-10);
        }
        let a = es.state(3);
        let b = es.state(4);
        assert!((exact_overlap(&a, &a).unwrap().re - 1.0).abs() < 1e-12);
        assert!(exact_overlap(&a, &b).unwrap().norm() < 1e-10);
    }

    #[test]
    fn interpolation_reproduces_grid_values() {
        let g = Grid::new(8.0, 128).unwrap();
        let op = build_weyl_operator(&Observable::harmonic_oscillator(), &g, 0.2).unwrap();
        let es = Eigensystem::solve(&op).unwrap();
        let s = es.state(2);
        for j in [10, 64, 90] {
            assert!((s.evaluate(g.coordinate(j)) - s.values[j]).norm() < 1e-10);
        }
        let xs = [0.123, -0.77];
        let many = s.evaluate_many(&xs);
        assert!((many[1] - s.evaluate(xs[1])).norm() < 1e-12);
    }
}
