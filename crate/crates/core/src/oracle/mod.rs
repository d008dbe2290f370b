//! Exact finite-dimensional quantization on a periodic position grid.

mod bridge;
mod eigen;
mod export;
mod grid;
mod operator;

use thiserror::Error;

pub use bridge::{half_density_bridge, level_spacing, match_levels, LevelData, LevelMatch};
pub use eigen::{exact_overlap, Eigensystem, GridState};
pub use export::{write_eigensystem, GridSidecar};
pub use grid::Grid;
pub use operator::{build_weyl_operator, momentum_power, position_power, weyl_monomial, GridQuantization};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("states live on different grids")]
    GridMismatch,

    #[error("no Weyl ordering implemented for q^{q_degree} p^{p_degree}")]
    UnsupportedOrdering { q_degree: u32, p_degree: u32 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fiber at level {level} is open: continuum normalization")]
    OpenFiber { level: f64 },

    #[error("{semiclassical} semiclassical levels but only {oracle} retained eigenvalues")]
    CountMismatch { semiclassical: usize, oracle: usize },

    #[error("eigen-decomposition did not converge")]
    NoConvergence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
