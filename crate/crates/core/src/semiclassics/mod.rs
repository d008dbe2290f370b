//! Leading-order semiclassical formulas built on traced fibers.

mod bohr_sommerfeld;
mod cyclic;
mod error;
mod gluing;
mod maslov;
mod overlap;
mod probability;

pub use bohr_sommerfeld::{bohr_sommerfeld_levels, closed_fiber, BSLevel, BsLadder, BsOptions};
pub use error::{SemiclassicalError, Warning};
pub use maslov::{maslov_loop, maslov_segment, MaslovCount};
pub use overlap::{
    hessian_check_tolerance, overlap, write_amplitude_table, HessianMode, OverlapOptions,
    OverlapTerm, PrefactorConvention, SemiclassicalAmplitude, SystemLevel,
};
pub use cyclic::{cyclic_amplitude, shoelace_area, CyclicAmplitude, CyclicTerm};
pub use probability::{probability_from_terms, transition_probability, TransitionProbability};
pub use gluing::{compose_kernels, gluing_index, kashiwara_index, ComposeOptions, Composition, StationaryPoint};
