//! Parameter sweeps, peak detection and the inverse problem.

mod estimate;
mod peaks;
mod theta;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{NumericEngine, NumericOptions};
use crate::error::{Error, Result};
use crate::params::{NaturalParams, PulseShape};
use crate::spectral::{AnalyticEngine, SpectralOptions};

pub use estimate::{alpha_from_spacing, estimate_parameters, EstimateReport, FieldKnowledge, KnownQuantities};
pub use peaks::{detect, detect_peaks, Peak, PeakSet, DEFAULT_PROMINENCE_FRACTION, LOBE_FACTOR};
pub use theta::{sweep_theta, ThetaCurve, THETA_WINDOW};

/// Quantity varied along a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptVariable {
    /// Peak amplitude of the electric pulse.
    E0,
    /// Magnetic field direction.
    Theta,
    /// Anharmonicity.
    Lambda,
}

impl SweptVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweptVariable::E0 => "E0",
            SweptVariable::Theta => "theta",
            SweptVariable::Lambda => "lambda",
        }
    }

    fn apply(self, base: &NaturalParams, v: f64) -> NaturalParams {
        let mut p = base.clone();
        match self {
            SweptVariable::E0 => p.peak_amplitude = v,
            SweptVariable::Theta => p.field_angle = v,
            SweptVariable::Lambda => p.lambda = v,
        }
        p
    }
}

/// Which solver produces Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Engine {
    /// Perturbative spectral sum for an instantaneous kick.
    Analytic(SpectralOptions),
    /// Direct propagation with the configured pulse.
    Numeric(NumericOptions),
}

impl Engine {
    pub fn analytic() -> Self {
        Engine::Analytic(SpectralOptions::default())
    }

    pub fn numeric() -> Self {
        Engine::Numeric(NumericOptions::default())
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Engine::Numeric(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Averaging window `T`.
    pub span: f64,
    /// Normalised `(c+, c-)`.
    pub initial: [Complex64; 2],
    pub engine: Engine,
}

impl ScanSettings {
    pub fn new(span: f64, engine: Engine) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ScanSettings {
            span,
            initial: [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            engine,
        }
    }

    pub fn with_initial(mut self, c_plus: Complex64, c_minus: Complex64) -> Self {
        let n = (c_plus.norm_sqr() + c_minus.norm_sqr()).sqrt();
        self.initial = [c_plus / n, c_minus / n];
        self
    }
}

/// A point where the engine failed; its Q is stored as NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub index: usize,
    pub value: f64,
    pub message: String,
    pub exit_code: i32,
}

/// Solver diagnostics accumulated over a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    pub max_basis: usize,
    pub min_basis: usize,
    /// Pulse and ramp steps of the numeric engine (0 for the analytic one).
    pub dt: f64,
    pub ramp_dt: f64,
    pub max_boundary: f64,
}

/// Q against one swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTrace {
    pub variable: SweptVariable,
    pub grid: Vec<f64>,
    pub q: Vec<f64>,
    pub gaps: Vec<Gap>,
    pub protocol: NaturalParams,
    pub settings: ScanSettings,
    pub diagnostics: SweepDiagnostics,
}

impl QTrace {
    /// A trace from precomputed values (no gaps), checking the invariants.
    pub fn from_values(variable: SweptVariable, grid: Vec<f64>, q: Vec<f64>, protocol: NaturalParams, settings: ScanSettings) -> Result<Self> {
        check_grid(&grid)?;
        if q.len() != grid.len() {
            return Err(Error::config("scan.grid", format!("{} values for {} grid points", q.len(), grid.len())));
        }
        if let Some(v) = q.iter().find(|v| v.abs() > 1.0 + 1e-9) {
            return Err(Error::Numerical(format!("|Q| = {} exceeds 1", v.abs())));
        }
        Ok(QTrace {
            variable,
            grid,
            q,
            gaps: Vec::new(),
            protocol,
            settings,
            diagnostics: SweepDiagnostics::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Uniform grid of `count` points on `[start, stop]`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyDataset("scan grid has no points".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("scan.grid", "grid values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("scan.grid", "grid must be strictly increasing"));
    }
    Ok(())
}

/// Shared per-sweep solver state.
pub(crate) enum Evaluator {
    Analytic(AnalyticEngine),
    Numeric(NumericEngine),
}

impl Evaluator {
    pub(crate) fn new(engine: &Engine, points: &[NaturalParams]) -> Result<Self> {
        match engine {
            Engine::Analytic(opts) => {
                if let Some(p) = points.iter().find(|p| p.lambda != 0.0) {
                    return Err(Error::config(
                        "protocol.anharmonic_lambda",
                        format!("the analytic engine has no quartic term (lambda = {}); use the numeric engine", p.lambda),
                    ));
                }
                let alpha = points.first().map_or(0.0, |p| p.alpha);
                if points.iter().any(|p| p.alpha != alpha) {
                    return Err(Error::config("material", "one analytic sweep needs a single spin-orbit strength"));
                }
                let reach = points.iter().map(|p| p.kick().abs()).fold(0.0, f64::max);
                Ok(Evaluator::Analytic(AnalyticEngine::for_kick(alpha, reach, *opts)))
            }
            Engine::Numeric(opts) => Ok(Evaluator::Numeric(NumericEngine::new(*opts))),
        }
    }

    /// Q at one protocol, with basis size, steps and boundary occupation.
    pub(crate) fn q(&self, params: &NaturalParams, settings: &ScanSettings) -> Result<(f64, SweepDiagnostics)> {
        match self {
            Evaluator::Analytic(engine) => {
                let mut p = params.clone();
                p.shape = PulseShape::Delta;
                let q = engine.q(&p, settings.initial, settings.span)?;
                let diag = SweepDiagnostics {
                    max_basis: engine.n_max(),
                    min_basis: engine.n_max(),
                    ..Default::default()
                };
                Ok((q, diag))
            }
            Evaluator::Numeric(engine) => {
                let run = engine.q(params, settings.initial, settings.span)?;
                let diag = SweepDiagnostics {
                    max_basis: run.n_max,
                    min_basis: run.n_max,
                    dt: run.dt,
                    ramp_dt: run.ramp_dt,
                    max_boundary: run.max_boundary,
                };
                Ok((run.q, diag))
            }
        }
    }
}

fn merge(a: SweepDiagnostics, b: SweepDiagnostics) -> SweepDiagnostics {
    if a.max_basis == 0 {
        return b;
    }
    SweepDiagnostics {
        max_basis: a.max_basis.max(b.max_basis),
        min_basis: a.min_basis.min(b.min_basis),
        dt: a.dt.max(b.dt),
        ramp_dt: a.ramp_dt.max(b.ramp_dt),
        max_boundary: a.max_boundary.max(b.max_boundary),
    }
}

/// Q over `grid` with `variable` replaced in `base`. Points run in parallel
/// on the current rayon pool and are assembled in grid order; failures
/// become gaps.
pub fn sweep(variable: SweptVariable, grid: &[f64], base: &NaturalParams, settings: &ScanSettings) -> Result<QTrace> {
    check_grid(grid)?;
    if !(settings.span > 0.0) {
        return Err(Error::config("run.average_span", "averaging span must be positive"));
    }
    let points: Vec<NaturalParams> = grid.iter().map(|&v| variable.apply(base, v)).collect();
    let eval = Evaluator::new(&settings.engine, &points)?;
    let results: Vec<Result<(f64, SweepDiagnostics)>> = points.par_iter().map(|p| eval.q(p, settings)).collect();

    let mut q = Vec::with_capacity(grid.len());
    let mut gaps = Vec::new();
    let mut diagnostics = SweepDiagnostics::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((v, d)) => {
                q.push(v);
                diagnostics = merge(diagnostics, d);
            }
            Err(e) => {
                log::error!("{} = {}: {e}", variable.name(), grid[i]);
                q.push(f64::NAN);
                gaps.push(Gap {
                    index: i,
                    value: grid[i],
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                });
            }
        }
    }
    let mut protocol = base.clone();
    if !settings.engine.is_numeric() {
        protocol.shape = PulseShape::Delta;
    }
    Ok(QTrace {
        variable,
        grid: grid.to_vec(),
        q,
        gaps,
        protocol,
        settings: *settings,
        diagnostics,
    })
}

/// Q against the peak amplitude.
pub fn sweep_e0(grid: &[f64], base: &NaturalParams, settings: &ScanSettings) -> Result<QTrace> {
    sweep(SweptVariable::E0, grid, base, settings)
}

/// Largest change of Q at selected trace points when the basis is doubled
/// and, for the numeric engine, when both time steps are halved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<f64>,
    pub basis_delta: f64,
    pub step_delta: Option<f64>,
}

pub fn convergence_check(trace: &QTrace, indices: &[usize]) -> Result<ConvergenceReport> {
    let settings = trace.settings;
    let points: Vec<NaturalParams> = indices
        .iter()
        .map(|&i| trace.variable.apply(&trace.protocol, trace.grid[i]))
        .collect();
    let finite: Vec<usize> = (0..indices.len()).filter(|&j| trace.q[indices[j]].is_finite()).collect();
    let mut basis_delta: f64 = 0.0;
    let mut step_delta = None;
    match settings.engine {
        Engine::Analytic(opts) => {
            let reach = points.iter().map(|p| p.kick().abs()).fold(0.0, f64::max);
            let alpha = trace.protocol.alpha;
            let n = AnalyticEngine::for_kick(alpha, reach, opts).n_max();
            let big = AnalyticEngine::new(alpha, 2 * n, opts);
            for &j in &finite {
                let mut p = points[j].clone();
                p.shape = PulseShape::Delta;
                let q = big.q(&p, settings.initial, settings.span)?;
                basis_delta = basis_delta.max((q - trace.q[indices[j]]).abs());
            }
        }
        Engine::Numeric(opts) => {
            let base = NumericEngine::new(opts);
            let mut sd: f64 = 0.0;
            for &j in &finite {
                let p = &points[j];
                let n = base.basis_for(p);
                let big = NumericEngine::new(NumericOptions {
                    basis_size: 2 * n,
                    ..opts
                });
                let q = big.q(p, settings.initial, settings.span)?.q;
                basis_delta = basis_delta.max((q - trace.q[indices[j]]).abs());
                let fine = NumericEngine::new(NumericOptions {
                    dt: Some(0.5 * base.time_step(n, p)),
                    ramp_dt: Some(0.5 * base.ramp_step(n)),
                    ..opts
                });
                let q = fine.q(p, settings.initial, settings.span)?.q;
                sd = sd.max((q - trace.q[indices[j]]).abs());
            }
            step_delta = Some(sd);
        }
    }
    Ok(ConvergenceReport {
        points: indices.iter().map(|&i| trace.grid[i]).collect(),
        basis_delta,
        step_delta,
    })
}
