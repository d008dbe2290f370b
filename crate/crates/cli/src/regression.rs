use serde::Serialize;
use thiserror::Error;

/// Errors at or below this are treated as exact convergence.
pub const EXACT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("all errors are below {EXACT_FLOOR:e} (largest {max_error:e}); the values are exact")]
    DegenerateFit { max_error: f64 },

    #[error("point (h = {h}, error = {error}) is not positive")]
    NonPositive { h: f64, error: f64 },

    #[error("all points share h = {0}")]
    SingleAbscissa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log error`.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `log error = slope · log h + intercept`.
pub fn regress_error_slope(points: &[(f64, f64)]) -> Result<SlopeFit, RegressionError> {
    if points.len() < 3 {
        return Err(RegressionError::TooFewPoints(points.len()));
    }
    let max_error = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if max_error < EXACT_FLOOR {
        return Err(RegressionError::DegenerateFit { max_error });
    }
    if let Some(&(h, error)) = points.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0)) {
        return Err(RegressionError::NonPositive { h, error });
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(h, e)| (h.ln(), e.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(RegressionError::SingleAbscissa(points[0].0));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        points: points.len(),
    })
}
