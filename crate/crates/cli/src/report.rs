use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use semiclassical::geometry::FiberCurve;
use semiclassical::semiclassics::Warning;

use crate::regression::SlopeFit;

/// First line of every `cases.csv`.
pub const CSV_VERSION_LINE: &str = "# semiclass cases v1";
pub const CSV_COLUMNS: [&str; 9] = [
    "case",
    "label",
    "h",
    "quantity",
    "semiclassical",
    "oracle",
    "abs_error",
    "rel_error",
    "passed",
];
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRecord {
    pub case: usize,
    pub label: String,
    pub h: Option<f64>,
    pub quantity: String,
    pub semiclassical: f64,
    pub oracle: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    /// Outcome of a per-case check, if the case carries one.
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl CaseRecord {
    pub fn new(case: usize, label: impl Into<String>, h: Option<f64>, quantity: impl Into<String>, value: f64) -> Self {
        CaseRecord {
            case,
            label: label.into(),
            h,
            quantity: quantity.into(),
            semiclassical: value,
            oracle: None,
            abs_error: None,
            rel_error: None,
            passed: None,
            details: Map::new(),
        }
    }

    pub fn with_oracle(mut self, oracle: f64) -> Self {
        let abs = (self.semiclassical - oracle).abs();
        self.oracle = Some(oracle);
        self.abs_error = Some(abs);
        self.rel_error = Some(if oracle != 0.0 { abs / oracle.abs() } else { abs });
        self
    }

    pub fn with_check(mut self, passed: bool) -> Self {
        self.passed = Some(passed);
        self
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Self {
        self.details
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Regression {
    Fitted(SlopeFit),
    /// Every error was at machine precision.
    Exact { max_error: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: u32,
    pub scenario: String,
    pub name: Option<String>,
    pub seed: u64,
    pub cases: Vec<CaseRecord>,
    pub checks: Vec<Check>,
    pub regression: Option<Regression>,
    pub warnings: Vec<Warning>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = w;
        writeln!(out, "{CSV_VERSION_LINE}")?;
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(CSV_COLUMNS)?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for c in &self.cases {
            wr.write_record([
                c.case.to_string(),
                c.label.clone(),
                opt(c.h),
                c.quantity.clone(),
                format!("{:e}", c.semiclassical),
                opt(c.oracle),
                opt(c.abs_error),
                opt(c.rel_error),
                c.passed.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// A traced fiber kept for an optional CSV dump.
#[derive(Debug, Clone)]
pub struct FiberDump {
    pub stem: String,
    pub curve: FiberCurve,
}

/// Writes `report.json`, `cases.csv` and the fiber dumps into `dir`.
pub fn write_outputs(report: &Report, fibers: &[FiberDump], dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json = dir.join("report.json");
    let mut f = fs::File::create(&json)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f)?;
    written.push(json);
    let csv_path = dir.join("cases.csv");
    report
        .write_csv(fs::File::create(&csv_path)?)
        .map_err(std::io::Error::other)?;
    written.push(csv_path);
    for d in fibers {
        let path = dir.join(format!("fiber_{}.csv", d.stem));
        d.curve.write_csv(fs::File::create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_versioned_header() {
        let report = Report {
            version: REPORT_VERSION,
            scenario: "spectrum".into(),
            name: None,
            seed: 0,
            cases: vec![CaseRecord::new(0, "ho", Some(0.1), "level", 0.05).with_oracle(0.05)],
            checks: vec![],
            regression: None,
            warnings: vec![],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_VERSION_LINE));
        assert_eq!(lines.next(), Some(CSV_COLUMNS.join(",").as_str()));
        assert!(lines.next().unwrap().starts_with("0,ho,1e-1,level,5e-2,5e-2,0e0,0e0,"));
    }
}
