use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::OracleError;

/// Periodic grid `q_j = −L + jΔq`, `j = 0..N`, `Δq = 2L/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            half_width: 10.0,
            points: 1024,
        }
    }
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self, OracleError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(OracleError::InvalidGrid(format!("half width {half_width}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(OracleError::InvalidGrid(format!("{points} points (need a power of two)")));
        }
        Ok(Grid { half_width, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|j| self.coordinate(j))
    }

    /// Wavenumbers `k_m = πm/L` for `m = −N/2 .. N/2 − 1`.
    pub fn wavenumbers(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.points as i64;
        (-n / 2..n / 2).map(move |m| (m, PI * m as f64 / self.half_width))
    }
}
