//! Position of one resonance against the magnetic field direction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::peaks::detect;
use super::{linspace, Evaluator, ScanSettings, SweepDiagnostics};
use crate::error::{Error, Result};
use crate::params::NaturalParams;
use crate::spectral::{peak_spacing, resonance_position};

/// Half-width of the re-scan window as a fraction of the comb spacing.
pub const THETA_WINDOW: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCurve {
    pub order: usize,
    pub theta: Vec<f64>,
    /// Refined peak position at each angle.
    pub measured: Vec<f64>,
    /// |Q| at the refined position.
    pub heights: Vec<f64>,
    /// Documented closed-form position.
    pub predicted: Vec<f64>,
    /// Grid step inside each window.
    pub window_step: f64,
    pub diagnostics: SweepDiagnostics,
}

impl ThetaCurve {
    /// A curve from externally measured positions.
    pub fn from_measurements(order: usize, theta: Vec<f64>, measured: Vec<f64>) -> Self {
        let n = theta.len();
        ThetaCurve {
            order,
            theta,
            measured,
            heights: vec![f64::NAN; n],
            predicted: vec![f64::NAN; n],
            window_step: f64::NAN,
            diagnostics: SweepDiagnostics::default(),
        }
    }

    pub fn max_deviation(&self) -> f64 {
        self.measured
            .iter()
            .zip(&self.predicted)
            .map(|(m, p)| (m - p).abs())
            .fold(0.0, f64::max)
    }
}

/// For every angle, scan `points` amplitudes across `±THETA_WINDOW` spacings
/// around the predicted `k`-th resonance and keep the tallest peak.
pub fn sweep_theta(k: usize, thetas: &[f64], base: &NaturalParams, settings: &ScanSettings, points: usize) -> Result<ThetaCurve> {
    if thetas.is_empty() {
        return Err(Error::EmptyDataset("no field angles to scan".into()));
    }
    if thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::config("scan.theta", "angles must be finite"));
    }
    if points < 5 {
        return Err(Error::config("scan.window_points", format!("need at least 5 points per window, got {points}")));
    }
    let half = THETA_WINDOW * peak_spacing(base)?;
    let mut predicted = Vec::with_capacity(thetas.len());
    let mut windows = Vec::with_capacity(thetas.len());
    let mut params = Vec::with_capacity(thetas.len() * points);
    for &theta in thetas {
        let mut p = base.clone();
        p.field_angle = theta;
        let centre = resonance_position(k, &p)?;
        let grid = linspace(centre - half, centre + half, points);
        params.extend(grid.iter().map(|&e| p.with_peak_amplitude(e)));
        predicted.push(centre);
        windows.push(grid);
    }
    let eval = Evaluator::new(&settings.engine, &params)?;
    let results: Vec<Result<(f64, SweepDiagnostics)>> = params.par_iter().map(|p| eval.q(p, settings)).collect();

    let mut diagnostics = SweepDiagnostics::default();
    let mut q = Vec::with_capacity(results.len());
    for r in results {
        let (v, d) = r?;
        diagnostics = super::merge(diagnostics, d);
        q.push(v);
    }
    let mut measured = Vec::with_capacity(thetas.len());
    let mut heights = Vec::with_capacity(thetas.len());
    for (j, grid) in windows.iter().enumerate() {
        let set = detect(grid, &q[j * points..(j + 1) * points], None)?;
        let peak = set.tallest().expect("detect returns at least one peak");
        measured.push(peak.position);
        heights.push(peak.height);
    }
    Ok(ThetaCurve {
        order: k,
        theta: thetas.to_vec(),
        measured,
        heights,
        predicted,
        window_step: 2.0 * half / (points - 1) as f64,
        diagnostics,
    })
}
