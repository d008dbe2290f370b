//! Semiclassical overlaps of eigenstates of integrable systems on the phase
//! plane, checked against exact grid quantization, plus the Moyal star
//! product on polynomial observables.

pub mod exec;
pub mod geometry;
pub mod oracle;
pub mod semiclassics;
pub mod star;

pub use exec::Execution;
