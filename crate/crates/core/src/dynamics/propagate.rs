//! Time stepping with Chebyshev-applied exponentials.

use serde::{Deserialize, Serialize};

use super::fields::FieldSamples;
use super::hamiltonian::{Drive, Gauge, HamiltonianModel};
use super::state::{spin_polarization, StateVector, BOUNDARY_LIMIT, BOUNDARY_WINDOW};
use crate::error::{Error, Result};
use crate::linalg::{chebyshev_expm_apply, Csr};
use crate::params::PulseShape;

/// Exponential integrator used inside time-dependent segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// `exp(-i H(t + dt/2) dt)`, second order.
    Midpoint,
    /// Two-exponential commutator-free Magnus scheme, fourth order.
    #[default]
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub gauge: Gauge,
    /// Step while the electric pulse is on.
    pub dt: f64,
    /// Step in segments where only the magnetic ramp changes.
    pub ramp_dt: f64,
    /// Sampling interval inside constant segments, which are propagated exactly.
    pub sample_interval: f64,
    pub integrator: Integrator,
    pub snapshots: bool,
}

impl EvolveOptions {
    pub fn new(dt: f64) -> Self {
        EvolveOptions {
            gauge: Gauge::Length,
            dt,
            ramp_dt: dt,
            sample_interval: 0.05,
            integrator: Integrator::Magnus4,
            snapshots: false,
        }
    }
}

/// Largest admissible step: `min(sigma_t / 20, 0.02 (N/64)^{-1/2})`.
pub fn max_time_step(n_max: usize, pulse_width: f64) -> f64 {
    (pulse_width / 20.0).min(stiffness_step(n_max))
}

/// Step bound from the top of the truncated spectrum alone, `0.02 (N/64)^{-1/2}`.
pub fn stiffness_step(n_max: usize) -> f64 {
    0.02 * (n_max as f64 / 64.0).powf(-0.5)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub gauge: Gauge,
    pub times: Vec<f64>,
    pub sigma_z: Vec<f64>,
    pub snapshots: Vec<StateVector>,
    pub final_state: StateVector,
    /// Largest boundary occupation seen at any sample.
    pub max_boundary: f64,
}

struct Stepper<'a> {
    model: &'a HamiltonianModel,
    fields: &'a FieldSamples,
    gauge: Gauge,
    work: Csr,
}

impl Stepper<'_> {
    fn drive(&self, t: f64) -> Result<Drive> {
        if self.gauge == Gauge::Length && self.fields.shape == PulseShape::Delta {
            Ok(self
                .model
                .length_drive(0.0, self.fields.gauge(t), self.fields.zeeman_at(t)))
        } else {
            self.model.drive(t, self.gauge, self.fields)
        }
    }

    fn apply(&mut self, d: &Drive, h: f64, v: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        self.model.fill(d, &mut self.work);
        let bounds = self.work.gershgorin();
        chebyshev_expm_apply(&self.work, bounds, h, v)
    }

    fn step(&mut self, integrator: Integrator, t: f64, h: f64, v: &[num_complex::Complex64]) -> Result<Vec<num_complex::Complex64>> {
        match integrator {
            Integrator::Midpoint => {
                let d = self.drive(t + 0.5 * h)?;
                Ok(self.apply(&d, h, v))
            }
            Integrator::Magnus4 => {
                let r = 3f64.sqrt() / 6.0;
                let a1 = 0.25 - r;
                let a2 = 0.25 + r;
                let d1 = self.drive(t + (0.5 - r) * h)?;
                let d2 = self.drive(t + (0.5 + r) * h)?;
                let first = d1.scaled(a2).plus(d2.scaled(a1));
                let second = d1.scaled(a1).plus(d2.scaled(a2));
                let mid = self.apply(&first, h, v);
                Ok(self.apply(&second, h, &mid))
            }
        }
    }
}

struct Recorder {
    traj_times: Vec<f64>,
    sigma_z: Vec<f64>,
    snapshots: Vec<StateVector>,
    keep: bool,
    max_boundary: f64,
}

impl Recorder {
    fn record(&mut self, state: &StateVector) -> Result<()> {
        let tail = state.boundary_occupation(BOUNDARY_WINDOW);
        self.max_boundary = self.max_boundary.max(tail);
        if tail > BOUNDARY_LIMIT {
            return Err(Error::TruncationBreach {
                n_max: state.n_max(),
                window: BOUNDARY_WINDOW,
                tail_mass: tail,
            });
        }
        self.traj_times.push(state.time);
        self.sigma_z.push(spin_polarization(state));
        if self.keep {
            self.snapshots.push(state.clone());
        }
        Ok(())
    }
}

/// Propagate `state` to `t_end`, sampling `<sigma_z>`.
///
/// Segments are split at the pulse window and the switch time. Segments
/// with a constant Hamiltonian are propagated exactly in sampling-sized
/// steps; the pulse uses `opts.dt` and a bare magnetic ramp `opts.ramp_dt`. A delta pulse in the length gauge is
/// applied as the kick `exp(-i A0 x)` on arrival at the switch time.
pub fn evolve(
    model: &HamiltonianModel,
    fields: &FieldSamples,
    mut state: StateVector,
    t_end: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let guard = max_time_step(model.ops.n_max, fields.pulse_width);
    if !(opts.dt > 0.0) || opts.dt > guard * (1.0 + 1e-9) {
        return Err(Error::config(
            "run.dt",
            format!("time step {} outside (0, {guard:.6e}] for N = {}", opts.dt, model.ops.n_max),
        ));
    }
    let stiff = stiffness_step(model.ops.n_max);
    if !(opts.ramp_dt > 0.0) || opts.ramp_dt > stiff * (1.0 + 1e-9) {
        return Err(Error::config(
            "run.ramp_dt",
            format!("ramp step {} outside (0, {stiff:.6e}] for N = {}", opts.ramp_dt, model.ops.n_max),
        ));
    }
    if !(opts.sample_interval > 0.0) {
        return Err(Error::config("run.sample_interval", "must be positive"));
    }
    if state.amps.len() != model.dim() {
        return Err(Error::InsufficientBasis {
            needed: model.dim(),
            got: state.amps.len(),
        });
    }
    let start = state.time;
    if t_end < start {
        return Err(Error::Numerical(format!("cannot evolve backwards from {start} to {t_end}")));
    }
    let t0 = fields.switch_time;
    let (lo, hi) = fields.pulse_window();
    let mut marks = vec![start, t_end];
    for t in [lo, hi, t0] {
        if t > start && t < t_end {
            marks.push(t);
        }
    }
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let kick = fields.shape == PulseShape::Delta && opts.gauge == Gauge::Length;
    let mut stepper = Stepper {
        model,
        fields,
        gauge: opts.gauge,
        work: model.empty(),
    };
    let mut rec = Recorder {
        traj_times: Vec::new(),
        sigma_z: Vec::new(),
        snapshots: Vec::new(),
        keep: opts.snapshots,
        max_boundary: 0.0,
    };
    rec.record(&state)?;
    for w in marks.windows(2) {
        let (s, e) = (w[0], w[1]);
        let mid = 0.5 * (s + e);
        let pulsing = fields.shape == PulseShape::Gaussian && lo < mid && mid < hi;
        let ramping = fields.ramped() && mid > t0;
        if pulsing || ramping {
            let step = if pulsing { opts.dt } else { opts.ramp_dt };
            let n = ((e - s) / step).ceil().max(1.0) as usize;
            let h = (e - s) / n as f64;
            for i in 0..n {
                let t = s + i as f64 * h;
                state.amps = stepper.step(opts.integrator, t, h, &state.amps)?;
                state.time = if i + 1 == n { e } else { t + h };
                rec.record(&state)?;
            }
        } else {
            let d = stepper.drive(mid)?;
            model.fill(&d, &mut stepper.work);
            let bounds = stepper.work.gershgorin();
            let n = ((e - s) / opts.sample_interval).ceil().max(1.0) as usize;
            let h = (e - s) / n as f64;
            for i in 0..n {
                state.amps = chebyshev_expm_apply(&stepper.work, bounds, h, &state.amps);
                state.time = if i + 1 == n { e } else { s + (i + 1) as f64 * h };
                rec.record(&state)?;
            }
        }
        if kick && (e - t0).abs() < 1e-12 {
            state.boost(-fields.kick());
            state.check_boundary(BOUNDARY_LIMIT)?;
        }
    }
    Ok(Trajectory {
        gauge: opts.gauge,
        times: rec.traj_times,
        sigma_z: rec.sigma_z,
        snapshots: rec.snapshots,
        final_state: state,
        max_boundary: rec.max_boundary,
    })
}

/// Integral of the piecewise-linear interpolant of `(times, values)` over `[a, b]`.
pub fn trapezoid(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    let lerp = |i: usize, t: f64| {
        let (t0, t1) = (times[i], times[i + 1]);
        if t1 == t0 {
            values[i]
        } else {
            values[i] + (values[i + 1] - values[i]) * (t - t0) / (t1 - t0)
        }
    };
    let mut acc = 0.0;
    for i in 0..times.len().saturating_sub(1) {
        let lo = times[i].max(a);
        let hi = times[i + 1].min(b);
        if hi > lo {
            acc += 0.5 * (hi - lo) * (lerp(i, lo) + lerp(i, hi));
        }
    }
    acc
}

/// `(1/T) ∫_start^{start+T} <sigma_z> dt` by the trapezoid rule.
pub fn long_time_average(traj: &Trajectory, start: f64, span: f64) -> Result<f64> {
    let end = start + span;
    let first = traj.times.first().copied().unwrap_or(f64::INFINITY);
    let last = traj.times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if last < end - 1e-9 || first > start + 1e-9 {
        return Err(Error::SpanTooShort {
            needed: end,
            available: last,
        });
    }
    Ok(trapezoid(&traj.times, &traj.sigma_z, start, end) / span)
}
