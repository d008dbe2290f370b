use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Eigensystem, OracleError};

/// Grid parameters stored next to a binary eigenvector dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub half_width: f64,
    pub points: usize,
    pub spacing: f64,
    pub h: f64,
    pub states: usize,
    /// Layout of the binary file.
    pub layout: String,
}

/// Writes `<stem>_eigenvalues.csv`, `<stem>_eigenvectors.bin` and
/// `<stem>_grid.json` for the first `states` eigenpairs.
///
/// The binary file is little-endian `f64`, row-major over
/// `(state, grid point, [re, im])`.
pub fn write_eigensystem(es: &Eigensystem, dir: &Path, stem: &str, states: usize) -> Result<GridSidecar, OracleError> {
    let states = states.min(es.eigenvalues.len());
    let mut csv = BufWriter::new(File::create(dir.join(format!("{stem}_eigenvalues.csv")))?);
    writeln!(csv, "n,eigenvalue")?;
    for (n, e) in es.eigenvalues.iter().take(states).enumerate() {
        writeln!(csv, "{n},{e:.17e}")?;
    }
    csv.flush()?;
    let mut bin = BufWriter::new(File::create(dir.join(format!("{stem}_eigenvectors.bin")))?);
    for n in 0..states {
        for z in es.eigenvectors.column(n).iter() {
            bin.write_all(&z.re.to_le_bytes())?;
            bin.write_all(&z.im.to_le_bytes())?;
        }
    }
    bin.flush()?;
    let side = GridSidecar {
        half_width: es.grid.half_width,
        points: es.grid.points,
        spacing: es.grid.spacing(),
        h: es.h,
        states,
        layout: "f64 little-endian, row-major (state, point, re/im)".into(),
    };
    serde_json::to_writer_pretty(File::create(dir.join(format!("{stem}_grid.json")))?, &side)?;
    Ok(side)
}
