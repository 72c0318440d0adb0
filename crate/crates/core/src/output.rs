//! CSV datasets and the JSON manifest of a run directory.
//!
//! Reals are written as `{:.16e}`, lines end in LF, and a manifest listing
//! every file is written last.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scan::{ConvergenceReport, PeakSet, QTrace, SweptVariable};
use crate::units::FIELD_AXIS_UNIT;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    /// Written verbatim; must not contain commas or newlines.
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

/// Fixed columns, one row per record.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(columns: &[&str]) -> Self {
        Dataset {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::EmptyDataset(format!("no rows for columns {}", self.columns.join(","))));
        }
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Int(v) => write!(out, "{v}"),
                    Cell::Real(v) => write!(out, "{v:.16e}"),
                    Cell::Text(v) => {
                        debug_assert!(!v.contains([',', '\n']));
                        write!(out, "{v}")
                    }
                }
                .expect("writing to a String");
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// `E0, E0_u, Q` (or `theta, Q` / `lambda, Q`) of a sweep.
pub fn trace_dataset(trace: &QTrace) -> Dataset {
    let mut d = match trace.variable {
        SweptVariable::E0 => Dataset::new(&["E0", "E0_u", "Q"]),
        SweptVariable::Theta => Dataset::new(&["theta", "Q"]),
        SweptVariable::Lambda => Dataset::new(&["lambda", "Q"]),
    };
    for (&x, &q) in trace.grid.iter().zip(&trace.q) {
        match trace.variable {
            SweptVariable::E0 => d.push(vec![x.into(), (x / FIELD_AXIS_UNIT).into(), q.into()]),
            _ => d.push(vec![x.into(), q.into()]),
        }
    }
    d
}

/// Detected lines; `position_u` is in comb-axis units for `E0` sweeps.
pub fn peaks_dataset(peaks: &PeakSet, variable: SweptVariable) -> Dataset {
    let unit = if variable == SweptVariable::E0 { FIELD_AXIS_UNIT } else { 1.0 };
    let mut d = Dataset::new(&["order", "position", "position_u", "height", "prominence", "width"]);
    for p in &peaks.peaks {
        d.push(vec![
            p.order.into(),
            p.position.into(),
            (p.position / unit).into(),
            p.height.into(),
            p.prominence.into(),
            p.width.into(),
        ]);
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    pub label: String,
    #[serde(flatten)]
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub files: Vec<String>,
    pub wall_time_s: f64,
    pub seed: Option<u64>,
    pub convergence: Vec<ConvergenceEntry>,
    pub notes: Vec<String>,
}

/// Output directory of one command.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
    started: Instant,
    pub convergence: Vec<ConvergenceEntry>,
    pub notes: Vec<String>,
}

impl RunDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(RunDir {
            root,
            files: Vec::new(),
            started: Instant::now(),
            convergence: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, data: &Dataset) -> Result<()> {
        let text = data.to_csv()?;
        self.write(name, &text)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn converged(&mut self, label: impl Into<String>, report: ConvergenceReport) {
        self.convergence.push(ConvergenceEntry {
            label: label.into(),
            report,
        });
    }

    /// Write `manifest.json` and return its path.
    pub fn finish(self, command: &str, config: serde_json::Value, seed: Option<u64>) -> Result<PathBuf> {
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            files: self.files,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            seed,
            convergence: self.convergence,
            notes: self.notes,
        };
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
