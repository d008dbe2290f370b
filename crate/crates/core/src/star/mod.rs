//! Moyal star product on polynomial observables with exact rational
//! coefficients, its Weyl operator correspondence, and semiclassical matrix
//! elements.

mod moyal;
mod poly;
mod representation;
mod series;
mod syntax;

use thiserror::Error;

use crate::oracle::OracleError;
use crate::semiclassics::SemiclassicalError;

pub use moyal::{associativity_defect, bidifferential, moyal_product, star_commutator, MAX_ORDER};
pub use poly::{rational_from_f64, Coefficient, PolynomialObservable};
pub use representation::{
    homomorphism_check, semiclassical_matrix_element, series_operator, weight_amplitude, weyl_operator_of,
    HomomorphismOptions, HomomorphismReport,
};
pub use series::FormalSeries;
pub use syntax::parse_series;

#[derive(Debug, Error)]
pub enum StarError {
    #[error("truncation order {order} exceeds the supported maximum {max}")]
    OrderOverflow { order: usize, max: usize },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("coefficient of q^{q_degree} p^{p_degree} is not real")]
    NonRealCoefficient { q_degree: u32, p_degree: u32 },

    #[error("observable is not a polynomial")]
    NotPolynomial,

    #[error("non-finite coefficient {0}")]
    NonFinite(f64),

    #[error("{0}")]
    Mismatch(String),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error(transparent)]
    Semiclassical(#[from] SemiclassicalError),
}
