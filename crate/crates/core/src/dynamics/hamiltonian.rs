//! Driven Hamiltonian on the interleaved oscillator ⊗ spin basis.
//!
//! Length gauge: `h + beta x^4 + alpha p Sigma_x + E(t) x + alpha A(t) Sigma_x + Z(t)`.
//! Velocity gauge: `h + beta x^4 + alpha p Sigma_x - A(t) p + Z(t)`.
//! `Z(t) = delta_Z b(t) [cos(theta - phi) Sigma_x + sin(theta - phi) Sigma_y]`.
//! The two are related by `psi_L = exp(-i A(t) x) psi_V` up to a global phase.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fields::FieldSamples;
use crate::basis::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{kron_spin, union_pattern, CMat, Csr};
use crate::params::{NaturalParams, PulseShape};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    #[default]
    Length,
    Velocity,
}

/// Scalar weights of the time-dependent terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drive {
    /// Weight of the static part; 1 for a plain Hamiltonian.
    pub unit: f64,
    pub x: f64,
    pub p: f64,
    pub sigma_x: f64,
    pub zeeman: f64,
}

impl Drive {
    pub fn scaled(self, w: f64) -> Drive {
        Drive {
            unit: w * self.unit,
            x: w * self.x,
            p: w * self.p,
            sigma_x: w * self.sigma_x,
            zeeman: w * self.zeeman,
        }
    }

    pub fn plus(self, o: Drive) -> Drive {
        Drive {
            unit: self.unit + o.unit,
            x: self.x + o.x,
            p: self.p + o.p,
            sigma_x: self.sigma_x + o.sigma_x,
            zeeman: self.zeeman + o.zeeman,
        }
    }
}

/// Sparse term matrices sharing one pattern.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    pub ops: OperatorSet,
    pub alpha: f64,
    pub beta: f64,
    pattern: Csr,
    stat: Vec<Complex64>,
    x: Vec<Complex64>,
    p: Vec<Complex64>,
    sigma_x: Vec<Complex64>,
    zeeman: Vec<Complex64>,
}

impl HamiltonianModel {
    pub fn new(ops: OperatorSet, params: &NaturalParams) -> Self {
        let id2 = [[ONE, ZERO], [ZERO, ONE]];
        let n = ops.n_max;
        let eye = Csr::from_triplets(n, (0..n).map(|i| (i, i, ONE)));
        let beta = params.beta();
        let mut orbital = ops.harmonic();
        if beta != 0.0 {
            let trip = (0..n).flat_map(|r| {
                let h = &orbital;
                let x4 = &ops.x4;
                (h.row_ptr[r]..h.row_ptr[r + 1])
                    .map(move |i| (r, h.cols[i], h.vals[i]))
                    .chain((x4.row_ptr[r]..x4.row_ptr[r + 1]).map(move |i| (r, x4.cols[i], beta * x4.vals[i])))
            });
            orbital = Csr::from_triplets(n, trip.collect::<Vec<_>>());
        }
        let alpha = params.alpha;
        let dtheta = params.field_angle - params.phi;
        let zspin = {
            let (c, s) = (dtheta.cos(), dtheta.sin());
            let mut m = [[ZERO; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] = c * ops.sigma_x[i][j] + s * ops.sigma_y[i][j];
                }
            }
            m
        };
        let h_orb = kron_spin(&orbital, &id2);
        let soc = kron_spin(&ops.p, &ops.sigma_x);
        let x = kron_spin(&ops.x, &id2);
        let p = kron_spin(&ops.p, &id2);
        let sx = kron_spin(&eye, &ops.sigma_x);
        let z = kron_spin(&eye, &zspin);
        let pattern = union_pattern(&[&h_orb, &soc, &x, &p, &sx, &z]);
        let soc_vals = soc.values_on(&pattern);
        let stat = h_orb
            .values_on(&pattern)
            .iter()
            .zip(&soc_vals)
            .map(|(a, b)| a + alpha * b)
            .collect();
        HamiltonianModel {
            alpha,
            beta,
            stat,
            x: x.values_on(&pattern),
            p: p.values_on(&pattern),
            sigma_x: sx.values_on(&pattern),
            zeeman: z.values_on(&pattern),
            pattern,
            ops,
        }
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    /// Term weights at time `t`.
    pub fn drive(&self, t: f64, gauge: Gauge, fields: &FieldSamples) -> Result<Drive> {
        let zeeman = fields.zeeman_at(t);
        match gauge {
            Gauge::Length => {
                if fields.shape == PulseShape::Delta {
                    return Err(Error::GaugeMismatch(
                        "a delta pulse has no length-gauge field profile; apply it as a kick".into(),
                    ));
                }
                Ok(self.length_drive(fields.electric(t), fields.gauge(t), zeeman))
            }
            Gauge::Velocity => Ok(Drive {
                unit: 1.0,
                x: 0.0,
                p: -fields.gauge(t),
                sigma_x: 0.0,
                zeeman,
            }),
        }
    }

    /// Length-gauge weights for explicit field values.
    pub fn length_drive(&self, electric: f64, gauge: f64, zeeman: f64) -> Drive {
        Drive {
            unit: 1.0,
            x: electric,
            p: 0.0,
            sigma_x: self.alpha * gauge,
            zeeman,
        }
    }

    /// Write the weighted sum of terms into `out`, which must share the
    /// model pattern (see [`HamiltonianModel::empty`]).
    pub fn fill(&self, d: &Drive, out: &mut Csr) {
        for (i, v) in out.vals.iter_mut().enumerate() {
            let mut acc = d.unit * self.stat[i];
            if d.x != 0.0 {
                acc += d.x * self.x[i];
            }
            if d.p != 0.0 {
                acc += d.p * self.p[i];
            }
            if d.sigma_x != 0.0 {
                acc += d.sigma_x * self.sigma_x[i];
            }
            if d.zeeman != 0.0 {
                acc += d.zeeman * self.zeeman[i];
            }
            *v = acc;
        }
    }

    pub fn empty(&self) -> Csr {
        self.pattern.clone()
    }

    pub fn matrix(&self, d: &Drive) -> Csr {
        let mut m = self.empty();
        self.fill(d, &mut m);
        m
    }
}

/// Dense Hamiltonian at time `t`.
pub fn assemble_hamiltonian(
    t: f64,
    gauge: Gauge,
    ops: &OperatorSet,
    fields: &FieldSamples,
    params: &NaturalParams,
) -> Result<CMat> {
    if (ops.phi - params.phi).abs() > 1e-15 {
        return Err(Error::GaugeMismatch(format!(
            "operators rotated by {} but parameters have phi = {}",
            ops.phi, params.phi
        )));
    }
    let model = HamiltonianModel::new(ops.clone(), params);
    let d = model.drive(t, gauge, fields)?;
    Ok(model.matrix(&d).to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_operators;
    use crate::dynamics::fields::field_profiles;

    fn setup(lambda: f64) -> (OperatorSet, NaturalParams) {
        let mut p = NaturalParams::reference();
        p.peak_amplitude = 60.0;
        p.zeeman = 0.06;
        p.field_angle = 1.1;
        p.lambda = lambda;
        (build_operators(24, 1.0, p.phi).unwrap(), p)
    }

    #[test]
    fn hermitian_in_both_gauges() {
        let (ops, p) = setup(1e-3);
        let f = field_profiles(&p);
        for gauge in [Gauge::Length, Gauge::Velocity] {
            for &t in &[0.0, 0.49, 0.5, 3.0] {
                let h = assemble_hamiltonian(t, gauge, &ops, &f, &p).unwrap();
                let d = (&h - h.adjoint()).camax();
                assert!(d < 1e-12, "{gauge:?} t = {t}: {d}");
            }
        }
    }

    #[test]
    fn fields_off_gives_static_hamiltonian() {
        let (ops, p) = setup(0.0);
        let f = field_profiles(&p);
        let h = assemble_hamiltonian(0.0, Gauge::Length, &ops, &f, &p).unwrap();
        let pm = ops.p_dense();
        let n = ops.n_max;
        let mut want = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                for s in 0..2 {
                    for r in 0..2 {
                        let mut v = p.alpha * pm[(i, j)] * ops.sigma_x[s][r];
                        if i == j && s == r {
                            v += Complex64::new(i as f64 + 0.5, 0.0);
                        }
                        want[(2 * i + s, 2 * j + r)] = v;
                    }
                }
            }
        }
        // The pulse tail at t = 0 is exp(-100) E0.
        assert!((h - want).camax() < 1e-12);
    }

    #[test]
    fn zeeman_term_matches_lab_frame() {
        let (ops, mut p) = setup(0.0);
        p.peak_amplitude = 0.0;
        let f = field_profiles(&p);
        let t = 10.0;
        let h = assemble_hamiltonian(t, Gauge::Length, &ops, &f, &p).unwrap();
        let h0 = assemble_hamiltonian(0.0, Gauge::Length, &ops, &f, &p).unwrap();
        let dz = &h - &h0;
        let b = f.zeeman_at(t);
        let th = p.field_angle;
        // delta_Z (cos(theta) sigma_x + sin(theta) sigma_y)
        let up_down = b * Complex64::new(th.cos(), -th.sin());
        assert!((dz[(0, 1)] - up_down).norm() < 1e-14);
        assert!((dz[(1, 0)] - up_down.conj()).norm() < 1e-14);
        assert!(dz[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn delta_pulse_has_no_length_gauge_matrix() {
        let (ops, mut p) = setup(0.0);
        p.shape = PulseShape::Delta;
        let f = field_profiles(&p);
        let r = assemble_hamiltonian(1.0, Gauge::Length, &ops, &f, &p);
        assert!(matches!(r, Err(Error::GaugeMismatch(_))));
        assert!(assemble_hamiltonian(1.0, Gauge::Velocity, &ops, &f, &p).is_ok());
    }
}
