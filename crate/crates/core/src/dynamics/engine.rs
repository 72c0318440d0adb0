//! Q(E0) from direct propagation.
//!
//! Without a magnetic field `Sigma_x` is conserved and the post-pulse
//! Hamiltonian splits into `G_s + s alpha A0` with `G_- = conj(G_+)`, so the
//! remainder of the averaging window is done in closed form from one
//! cached eigendecomposition of `G_+`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fields::{field_profiles, FieldSamples};
use super::hamiltonian::{Gauge, HamiltonianModel};
use super::propagate::{evolve, long_time_average, max_time_step, stiffness_step, trapezoid, EvolveOptions, Integrator, Trajectory};
use super::state::{prepare_initial_state, StateVector};
use crate::basis::{build_operators, OperatorSet};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::params::{NaturalParams, PulseShape, MIN_BASIS};
use crate::spectral::{required_basis, time_average_phase};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    /// Basis floor; the automatic size is used when larger.
    pub basis_size: usize,
    pub auto_basis: bool,
    /// Time step during the pulse; defaults to the stability guard.
    pub dt: Option<f64>,
    /// Time step along a bare magnetic ramp; defaults to the stiffness guard.
    pub ramp_dt: Option<f64>,
    pub gauge: Gauge,
    pub integrator: Integrator,
    pub sample_interval: f64,
    /// Use the closed-form tail when no magnetic field is present.
    pub closed_form_tail: bool,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            basis_size: 128,
            auto_basis: true,
            dt: None,
            ramp_dt: None,
            gauge: Gauge::Length,
            integrator: Integrator::Magnus4,
            sample_interval: 0.02,
            closed_form_tail: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericRun {
    pub q: f64,
    pub n_max: usize,
    pub dt: f64,
    pub ramp_dt: f64,
    pub max_boundary: f64,
    pub closed_tail: bool,
}

/// Eigendecomposition of `G_+ = h + beta x^4 + alpha p`.
#[derive(Debug)]
pub struct TailSpectrum {
    lambdas: Vec<f64>,
    v: CMat,
    /// `V^dagger conj(V)`.
    m: CMat,
}

impl TailSpectrum {
    pub fn new(ops: &OperatorSet, alpha: f64, beta: f64) -> Self {
        let n = ops.n_max;
        let mut g = ops.p.to_dense() * Complex64::new(alpha, 0.0);
        if beta != 0.0 {
            g += ops.x4.to_dense() * Complex64::new(beta, 0.0);
        }
        for i in 0..n {
            g[(i, i)] += Complex64::new(i as f64 + 0.5, 0.0);
        }
        let eig = g.symmetric_eigen();
        let v = eig.eigenvectors;
        let m = v.adjoint() * v.map(|c| c.conj());
        TailSpectrum {
            lambdas: eig.eigenvalues.iter().copied().collect(),
            v,
            m,
        }
    }

    fn project(&self, state: &StateVector, phi: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let [plus, minus] = state.frame_components(phi);
        let n = self.lambdas.len();
        let mut u = vec![ZERO; n];
        let mut w = vec![ZERO; n];
        for j in 0..n {
            let col = self.v.column(j);
            for i in 0..n {
                u[j] += col[i].conj() * plus[i];
                w[j] += col[i] * minus[i];
            }
        }
        (u, w)
    }

    fn sum(&self, state: &StateVector, phi: f64, shift: f64, f: impl Fn(f64) -> Complex64) -> f64 {
        let (u, w) = self.project(state, phi);
        let n = u.len();
        let keep_u: Vec<usize> = (0..n).filter(|&j| u[j].norm() > 1e-14).collect();
        let keep_w: Vec<usize> = (0..n).filter(|&k| w[k].norm() > 1e-14).collect();
        let mut acc = ZERO;
        for &j in &keep_u {
            let uj = u[j].conj();
            for &k in &keep_w {
                let omega = self.lambdas[j] - self.lambdas[k] + 2.0 * shift;
                acc += uj * self.m[(j, k)] * w[k] * f(omega);
            }
        }
        2.0 * acc.re
    }

    /// `<sigma_z>` a time `s` after `state`, with `Sigma_x` splitting `2 shift`.
    pub fn sigma_z(&self, state: &StateVector, phi: f64, shift: f64, s: f64) -> f64 {
        self.sum(state, phi, shift, |om| Complex64::from_polar(1.0, om * s))
    }

    /// `∫_0^S <sigma_z> ds` from `state`.
    pub fn integral(&self, state: &StateVector, phi: f64, shift: f64, span: f64) -> f64 {
        if span <= 0.0 {
            return 0.0;
        }
        self.sum(state, phi, shift, |om| span * time_average_phase(-om, span))
    }
}

type TailKey = (usize, u64, u64);

/// Thread-safe numeric Q evaluator with operator and spectrum caches.
#[derive(Debug, Default)]
pub struct NumericEngine {
    pub options: NumericOptions,
    ops: Mutex<HashMap<(usize, u64), Arc<OperatorSet>>>,
    tails: Mutex<HashMap<TailKey, Arc<TailSpectrum>>>,
}

impl NumericEngine {
    pub fn new(options: NumericOptions) -> Self {
        NumericEngine {
            options,
            ..Default::default()
        }
    }

    /// Basis size used for `params`.
    pub fn basis_for(&self, params: &NaturalParams) -> usize {
        let floor = self.options.basis_size.max(MIN_BASIS);
        if !self.options.auto_basis {
            return floor;
        }
        // In the velocity gauge the packet centre reaches twice the kick.
        let reach = match self.options.gauge {
            Gauge::Length => params.kick().abs(),
            Gauge::Velocity => 2.0 * params.kick().abs(),
        };
        // Rounded up so neighbouring scan points share cached spectra.
        floor.max(required_basis(reach).next_multiple_of(16))
    }

    pub fn time_step(&self, n_max: usize, params: &NaturalParams) -> f64 {
        let guard = max_time_step(n_max, params.pulse_width);
        self.options.dt.map_or(guard, |dt| dt.min(guard))
    }

    pub fn ramp_step(&self, n_max: usize) -> f64 {
        let guard = stiffness_step(n_max);
        self.options.ramp_dt.map_or(guard, |dt| dt.min(guard))
    }

    fn operators(&self, n: usize, phi: f64) -> Result<Arc<OperatorSet>> {
        let key = (n, phi.to_bits());
        if let Some(o) = self.ops.lock().expect("cache poisoned").get(&key) {
            return Ok(o.clone());
        }
        let o = Arc::new(build_operators(n, 1.0, phi)?);
        self.ops.lock().expect("cache poisoned").insert(key, o.clone());
        Ok(o)
    }

    fn tail(&self, ops: &OperatorSet, alpha: f64, beta: f64) -> Arc<TailSpectrum> {
        let key = (ops.n_max, alpha.to_bits(), beta.to_bits());
        if let Some(t) = self.tails.lock().expect("cache poisoned").get(&key) {
            return t.clone();
        }
        // Computed outside the lock; a duplicate under contention is harmless.
        let t = Arc::new(TailSpectrum::new(ops, alpha, beta));
        self.tails.lock().expect("cache poisoned").insert(key, t.clone());
        t
    }

    fn setup(&self, params: &NaturalParams, initial: [Complex64; 2]) -> Result<(HamiltonianModel, FieldSamples, StateVector, EvolveOptions)> {
        let n = self.basis_for(params);
        let ops = self.operators(n, params.phi)?;
        let state = prepare_initial_state(initial, &ops, params.alpha)?;
        let model = HamiltonianModel::new((*ops).clone(), params);
        let fields = field_profiles(params);
        let opts = EvolveOptions {
            gauge: self.options.gauge,
            dt: self.time_step(n, params),
            ramp_dt: self.ramp_step(n),
            sample_interval: self.options.sample_interval,
            integrator: self.options.integrator,
            snapshots: false,
        };
        Ok((model, fields, state, opts))
    }

    fn commuting(&self, params: &NaturalParams) -> bool {
        self.options.closed_form_tail && self.options.gauge == Gauge::Length && params.zeeman == 0.0
    }

    /// Full trajectory from `t = 0` to `t_end`.
    pub fn trajectory(&self, params: &NaturalParams, initial: [Complex64; 2], t_end: f64) -> Result<Trajectory> {
        let (model, fields, state, opts) = self.setup(params, initial)?;
        evolve(&model, &fields, state, t_end, &opts)
    }

    /// `<sigma_z>` sampled on `times` (ascending, all past the pulse when the
    /// closed-form tail applies), plus the run metadata.
    pub fn sample(&self, params: &NaturalParams, initial: [Complex64; 2], times: &[f64]) -> Result<(Vec<f64>, NumericRun)> {
        let (model, fields, state, opts) = self.setup(params, initial)?;
        let t_last = times.last().copied().unwrap_or(0.0);
        let t1 = post_pulse_time(&fields);
        if self.commuting(params) && times.first().is_some_and(|&t| t >= t1) {
            let traj = evolve(&model, &fields, state, t1, &opts)?;
            let tail = self.tail(&model.ops, params.alpha, params.beta());
            let shift = params.alpha * params.kick();
            let vals = times
                .iter()
                .map(|&t| tail.sigma_z(&traj.final_state, params.phi, shift, t - t1))
                .collect();
            let run = NumericRun {
                q: f64::NAN,
                n_max: model.ops.n_max,
                dt: opts.dt,
                ramp_dt: opts.ramp_dt,
                max_boundary: traj.max_boundary,
                closed_tail: true,
            };
            return Ok((vals, run));
        }
        let traj = evolve(&model, &fields, state, t_last, &opts)?;
        let vals = times
            .iter()
            .map(|&t| {
                let i = traj.times.partition_point(|&s| s < t).min(traj.times.len() - 1);
                if i == 0 || traj.times[i] == t {
                    traj.sigma_z[i]
                } else {
                    let (a, b) = (traj.times[i - 1], traj.times[i]);
                    traj.sigma_z[i - 1] + (traj.sigma_z[i] - traj.sigma_z[i - 1]) * (t - a) / (b - a)
                }
            })
            .collect();
        let run = NumericRun {
            q: f64::NAN,
            n_max: model.ops.n_max,
            dt: opts.dt,
            ramp_dt: opts.ramp_dt,
            max_boundary: traj.max_boundary,
            closed_tail: false,
        };
        Ok((vals, run))
    }

    /// Long-time average over `[t0, t0 + span]`.
    pub fn q(&self, params: &NaturalParams, initial: [Complex64; 2], span: f64) -> Result<NumericRun> {
        if !(span > 0.0) {
            return Err(Error::config("run.T", "averaging span must be positive"));
        }
        let (model, fields, state, opts) = self.setup(params, initial)?;
        let t0 = fields.switch_time;
        let end = t0 + span;
        let t1 = post_pulse_time(&fields);
        if self.commuting(params) && t1 <= end {
            let traj = evolve(&model, &fields, state, t1, &opts)?;
            let head = trapezoid(&traj.times, &traj.sigma_z, t0, t1);
            let tail = self.tail(&model.ops, params.alpha, params.beta());
            let shift = params.alpha * params.kick();
            let rest = tail.integral(&traj.final_state, params.phi, shift, end - t1);
            return Ok(NumericRun {
                q: (head + rest) / span,
                n_max: model.ops.n_max,
                dt: opts.dt,
                ramp_dt: opts.ramp_dt,
                max_boundary: traj.max_boundary,
                closed_tail: true,
            });
        }
        let traj = evolve(&model, &fields, state, end, &opts)?;
        Ok(NumericRun {
            q: long_time_average(&traj, t0, span)?,
            n_max: model.ops.n_max,
            dt: opts.dt,
            ramp_dt: opts.ramp_dt,
            max_boundary: traj.max_boundary,
            closed_tail: false,
        })
    }
}

/// First time after which the electric field is negligible.
fn post_pulse_time(fields: &FieldSamples) -> f64 {
    match fields.shape {
        PulseShape::Gaussian => fields.pulse_window().1,
        PulseShape::Delta => fields.switch_time,
    }
}
