//! Closed-form physics after an instantaneous kick: quench spectrum,
//! avoided crossings, first-order Zeeman corrections, and the analytic
//! long-time average of the spin polarisation.
//!
//! After the kick the Hamiltonian splits by the eigenvalue `s = ±1` of the
//! rotated spin operator `Sigma_x`. In each sector the orbital eigenstates
//! are `psi_n^s = exp(-i (s alpha - A0) x) phi_n` with energies
//! `n + s alpha A0 - alpha^2/2 - A0^2/2`. The Zeeman term couples the two
//! sectors through `Sigma_y`.

mod analytic;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{boost_overlap, Spin};
use crate::error::{Error, Result};
use crate::params::NaturalParams;

pub use analytic::{
    first_order_corrections, time_average_phase, AnalyticEngine, MEntry, Expansion, PairTerm, PerturbedState, SigmaZCoefficients,
    SpectralOptions, StateLabel,
};

/// Default half-width of the quasi-degenerate window, in units of the trap quantum.
pub const DEGENERACY_THRESHOLD: f64 = 0.1;

/// Quench energy `epsilon_{n,s}` in natural units.
pub fn quench_energy(n: usize, spin: Spin, a0: f64, alpha: f64) -> f64 {
    n as f64 + spin.sign() * alpha * a0 - 0.5 * alpha * alpha - 0.5 * a0 * a0
}

/// Spectrum of the kicked dot without the Zeeman term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchSpectrum {
    pub a0: f64,
    pub alpha: f64,
    pub n_max: usize,
}

impl QuenchSpectrum {
    pub fn new(a0: f64, alpha: f64, n_max: usize) -> Self {
        QuenchSpectrum { a0, alpha, n_max }
    }

    pub fn energy(&self, n: usize, spin: Spin) -> f64 {
        quench_energy(n, spin, self.a0, self.alpha)
    }

    pub fn splitting(&self) -> f64 {
        2.0 * self.alpha * self.a0
    }

    pub fn classify(&self, n: usize, k: usize, threshold: f64) -> Branch {
        classify_degeneracy(n, k, self.a0, self.alpha, threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// No pair of opposite-spin levels is close.
    Nondegenerate,
    /// Levels `(n, +)` and `(n + k, -)` are (quasi-)degenerate.
    Degenerate,
}

/// DC iff `|epsilon_{n,+} - epsilon_{n+k,-}| < threshold` (strict).
pub fn classify_degeneracy(n: usize, k: usize, a0: f64, alpha: f64, threshold: f64) -> Branch {
    let gap = quench_energy(n, Spin::Plus, a0, alpha) - quench_energy(n + k, Spin::Minus, a0, alpha);
    if gap.abs() < threshold {
        Branch::Degenerate
    } else {
        Branch::Nondegenerate
    }
}

/// Energy of an isolated level including the longitudinal Zeeman shift
/// (the constant `-alpha^2/2 - A0^2/2` is dropped).
pub fn nc_energy(n: usize, spin: Spin, params: &NaturalParams) -> f64 {
    n as f64 + spin.sign() * (params.alpha * params.kick() + params.zeeman_parallel())
}

/// Exact solution of the two-level block `{(n,+), (n+k,-)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcSolution {
    pub n: usize,
    pub k: usize,
    /// Detuning of the block diagonal, `epsilon_{n,+} - epsilon_{n+k,-} + 2 delta_Z cos(theta - phi)`.
    pub f: f64,
    /// Upper and lower eigenvalues `[E_{n,+}, E_{n,-}]`.
    pub energies: [f64; 2],
    /// Weight of `|psi_n^+>|+>` in the upper and lower eigenvectors.
    pub a: [Complex64; 2],
    /// Weight of `|psi_{n+k}^->|->` in the upper and lower eigenvectors.
    pub b: [Complex64; 2],
    /// `<psi_{n+k}^- | psi_n^+>`.
    pub eta: Complex64,
}

impl DcSolution {
    pub fn gap(&self) -> f64 {
        self.energies[0] - self.energies[1]
    }
}

/// Eigenpairs of the Hermitian 2x2 `[[d1, w], [conj(w), d2]]`, upper first.
/// With `w = 0` the eigenvectors are the unit vectors, the one with the
/// larger diagonal (ties: the first) taken as upper.
pub(crate) fn solve_two_level(d1: f64, d2: f64, w: Complex64) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mean = 0.5 * (d1 + d2);
    let half = 0.5 * (d1 - d2);
    if w == zero {
        return if d1 >= d2 {
            ([d1, d2], [[one, zero], [zero, one]])
        } else {
            ([d2, d1], [[zero, one], [one, zero]])
        };
    }
    let r = half.hypot(w.norm());
    // Upper eigenvector, built from whichever row is better conditioned.
    let (mut a, mut b) = if half >= 0.0 {
        (Complex64::new(half + r, 0.0), w.conj())
    } else {
        (w, Complex64::new(r - half, 0.0))
    };
    let nrm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    a /= nrm;
    b /= nrm;
    ([mean + r, mean - r], [[a, b], [-b.conj(), a.conj()]])
}

/// Diagonalise the avoided-crossing block of levels `(n,+)` and `(n+k,-)`.
pub fn dc_solve(n: usize, k: usize, params: &NaturalParams) -> DcSolution {
    let a0 = params.kick();
    let eta = boost_overlap(n + k, n, -2.0 * params.alpha);
    dc_solve_with_eta(n, k, a0, params, eta)
}

pub(crate) fn dc_solve_with_eta(n: usize, k: usize, a0: f64, params: &NaturalParams, eta: Complex64) -> DcSolution {
    let zc = params.zeeman_parallel();
    let zs = params.zeeman_perpendicular();
    let d1 = quench_energy(n, Spin::Plus, a0, params.alpha) + zc;
    let d2 = quench_energy(n + k, Spin::Minus, a0, params.alpha) - zc;
    // <(n,+)| H_Z |(n+k,-)> = zs <+|Sigma_y|-> <psi_n^+|psi_{n+k}^-> = i zs conj(eta)
    let w = Complex64::new(0.0, zs) * eta.conj();
    let (energies, vecs) = solve_two_level(d1, d2, w);
    DcSolution {
        n,
        k,
        f: d1 - d2,
        energies,
        a: [vecs[0][0], vecs[1][0]],
        b: [vecs[0][1], vecs[1][1]],
        eta,
    }
}

fn comb_denominator(params: &NaturalParams) -> Result<f64> {
    if params.alpha <= 0.0 {
        return Err(Error::DegenerateSoc);
    }
    Ok(2.0 * PI.sqrt() * params.pulse_width * params.alpha)
}

/// Resonance-comb spacing `1 / (2 sqrt(pi) sigma_t alpha)` in natural field units.
pub fn peak_spacing(params: &NaturalParams) -> Result<f64> {
    Ok(1.0 / comb_denominator(params)?)
}

/// Documented position of the k-th resonance,
/// `(k - delta_Z cos(theta - phi)) / (2 sqrt(pi) sigma_t alpha)`.
pub fn resonance_position(k: usize, params: &NaturalParams) -> Result<f64> {
    let v = (k as f64 - params.zeeman_parallel()) / comb_denominator(params)?;
    if v <= 0.0 {
        return Err(Error::NonPositiveResonance { k, value: v });
    }
    Ok(v)
}

/// Peak amplitude at which the levels `(n,+)` and `(n+k,-)` actually cross
/// once the longitudinal Zeeman shift of both levels is included:
/// `(k - 2 delta_Z cos(theta - phi)) / (2 sqrt(pi) sigma_t alpha)`.
pub fn crossing_amplitude(k: usize, params: &NaturalParams) -> Result<f64> {
    let v = (k as f64 - 2.0 * params.zeeman_parallel()) / comb_denominator(params)?;
    if v <= 0.0 {
        return Err(Error::NonPositiveResonance { k, value: v });
    }
    Ok(v)
}

/// Smallest basis that holds the kicked ground state to ~1e-20 in probability.
pub fn required_basis(a0: f64) -> usize {
    let mean = 0.5 * a0 * a0;
    (mean + 10.0 * mean.sqrt() + 40.0).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::FIELD_AXIS_UNIT;

    fn at_kick(a0: f64) -> NaturalParams {
        let p = NaturalParams::reference();
        let e0 = p.amplitude_for_kick(a0);
        p.with_peak_amplitude(e0)
    }

    #[test]
    fn zero_field_levels_degenerate() {
        for n in 0..5 {
            assert_eq!(
                quench_energy(n, Spin::Plus, 0.0, 0.08),
                quench_energy(n, Spin::Minus, 0.0, 0.08)
            );
            assert!((quench_energy(n, Spin::Plus, 0.0, 0.08) - (n as f64 - 0.0032)).abs() < 1e-15);
        }
    }

    #[test]
    fn first_crossing_at_reference_kick() {
        let d = quench_energy(0, Spin::Plus, 6.25, 0.08) - quench_energy(1, Spin::Minus, 6.25, 0.08);
        assert!(d.abs() < 1e-12);
        let s = QuenchSpectrum::new(3.0, 0.08, 10);
        for n in 0..5 {
            assert!((s.energy(n, Spin::Plus) - s.energy(n, Spin::Minus) - s.splitting()).abs() < 1e-12);
        }
    }

    #[test]
    fn classification() {
        for k in 1..4 {
            assert_eq!(classify_degeneracy(0, k, 0.0, 0.08, 0.1), Branch::Nondegenerate);
        }
        assert_eq!(classify_degeneracy(0, 1, 6.25, 0.08, 0.1), Branch::Degenerate);
        // Gap of exactly 0.25 against a threshold of 0.25: strict inequality.
        assert_eq!(classify_degeneracy(0, 1, 7.8125, 0.08, 0.25), Branch::Nondegenerate);
    }

    #[test]
    fn dc_without_zeeman_is_unmixed() {
        let p = at_kick(6.0);
        let s = dc_solve(2, 1, &p);
        for i in 0..2 {
            assert!(s.a[i].norm() == 0.0 || s.a[i].norm() == 1.0);
            assert!(s.b[i].norm() == 0.0 || s.b[i].norm() == 1.0);
        }
        let e1 = quench_energy(2, Spin::Plus, p.kick(), p.alpha);
        let e2 = quench_energy(3, Spin::Minus, p.kick(), p.alpha);
        assert!((s.energies[0] - e1.max(e2)).abs() < 1e-13);
        assert!((s.energies[1] - e1.min(e2)).abs() < 1e-13);
    }

    #[test]
    fn dc_gap_at_crossing() {
        let mut p = at_kick(6.25);
        p.zeeman = 0.06;
        p.field_angle = p.phi + PI / 2.0;
        let s = dc_solve(0, 1, &p);
        let want = 2.0 * 0.06 * boost_overlap(1, 0, 0.16).norm();
        assert!((s.gap() - want).abs() < 1e-12);
        assert!((s.gap() - 0.013_490).abs() < 1e-6);
    }

    #[test]
    fn dc_vectors_orthonormal_and_trace() {
        let mut p = at_kick(6.1);
        p.zeeman = 0.05;
        p.field_angle = 1.1;
        let s = dc_solve(3, 1, &p);
        for i in 0..2 {
            assert!((s.a[i].norm_sqr() + s.b[i].norm_sqr() - 1.0).abs() < 1e-12);
        }
        let ov = s.a[0].conj() * s.a[1] + s.b[0].conj() * s.b[1];
        assert!(ov.norm() < 1e-12);
        let tr = quench_energy(3, Spin::Plus, p.kick(), p.alpha) + quench_energy(4, Spin::Minus, p.kick(), p.alpha);
        assert!((s.energies[0] + s.energies[1] - tr).abs() < 1e-12);
    }

    #[test]
    fn nc_energy_shifts() {
        let mut p = at_kick(2.0);
        let base = nc_energy(1, Spin::Plus, &p);
        p.zeeman = 0.06;
        p.field_angle = p.phi + PI / 2.0;
        assert!((nc_energy(1, Spin::Plus, &p) - base).abs() < 1e-15);
        p.field_angle = p.phi;
        assert!((nc_energy(1, Spin::Plus, &p) - base - 0.06).abs() < 1e-15);
        assert!((nc_energy(1, Spin::Minus, &p) - nc_energy(1, Spin::Minus, &at_kick(2.0)) + 0.06).abs() < 1e-15);
    }

    #[test]
    fn comb_in_axis_units() {
        let p = NaturalParams::reference();
        let d = peak_spacing(&p).unwrap();
        assert!((d - 70.5237).abs() < 1e-4);
        assert!((d / FIELD_AXIS_UNIT - 250.0).abs() < 1e-9);
        for k in 1..=3 {
            let e = resonance_position(k, &p).unwrap();
            assert!((e / FIELD_AXIS_UNIT - 250.0 * k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn zeeman_shifted_first_resonance() {
        let mut p = NaturalParams::reference();
        p.zeeman = 0.06;
        p.field_angle = p.phi;
        let e = resonance_position(1, &p).unwrap() / FIELD_AXIS_UNIT;
        assert!((e - 235.0).abs() < 1e-9);
        let c = crossing_amplitude(1, &p).unwrap() / FIELD_AXIS_UNIT;
        assert!((c - 220.0).abs() < 1e-9);
    }

    #[test]
    fn resonance_errors() {
        let mut p = NaturalParams::reference();
        p.zeeman = 1.5;
        p.field_angle = p.phi;
        assert!(matches!(resonance_position(1, &p), Err(Error::NonPositiveResonance { .. })));
        p.alpha = 0.0;
        assert!(matches!(peak_spacing(&p), Err(Error::DegenerateSoc)));
    }

    #[test]
    fn theta_dependence_closed_form() {
        let mut p = NaturalParams::reference();
        p.zeeman = 0.06;
        let denom = 2.0 * PI.sqrt() * p.pulse_width * p.alpha;
        for i in 0..12 {
            let th = i as f64 * 0.5;
            p.field_angle = th;
            let a = resonance_position(1, &p).unwrap();
            p.field_angle = th + PI;
            let b = resonance_position(1, &p).unwrap();
            let want = -2.0 * 0.06 * (th - p.phi).cos() / denom;
            assert!((a - b - want).abs() < 1e-10);
        }
    }
}
