//! State vectors on the interleaved basis and their spin observables.

use num_complex::Complex64;

use crate::basis::{boost_overlap, OperatorSet, Spin};
use crate::error::{Error, Result};
use crate::linalg::norm;

/// Levels counted as the top of the basis for truncation checks.
pub const BOUNDARY_WINDOW: usize = 8;

/// Boundary mass tolerated during evolution.
pub const BOUNDARY_LIMIT: f64 = 1e-8;

/// Boundary mass tolerated in the prepared initial state.
pub const INITIAL_BOUNDARY_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    /// Amplitude of `|phi_n>|s>` at `2n + s`, `s = 0` up, `1` down.
    pub amps: Vec<Complex64>,
    pub time: f64,
}

impl StateVector {
    pub fn n_max(&self) -> usize {
        self.amps.len() / 2
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// Occupation of the top `window` oscillator levels.
    pub fn boundary_occupation(&self, window: usize) -> f64 {
        let n = self.n_max();
        self.amps[2 * n.saturating_sub(window)..].iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_boundary(&self, limit: f64) -> Result<()> {
        let tail = self.boundary_occupation(BOUNDARY_WINDOW);
        if tail > limit {
            Err(Error::TruncationBreach {
                n_max: self.n_max(),
                window: BOUNDARY_WINDOW,
                tail_mass: tail,
            })
        } else {
            Ok(())
        }
    }

    /// `<Sigma_x>` for the frame angle `phi`.
    pub fn sigma_x_expectation(&self, phi: f64) -> f64 {
        let ph = Complex64::from_polar(1.0, -phi);
        2.0 * self
            .amps
            .chunks_exact(2)
            .map(|c| (c[0].conj() * ph * c[1]).re)
            .sum::<f64>()
    }

    /// Orbital components along `|+>` and `|->` of the rotated frame.
    pub fn frame_components(&self, phi: f64) -> [Vec<Complex64>; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let ph = Complex64::from_polar(r, -phi);
        let plus = self.amps.chunks_exact(2).map(|c| r * c[0] + ph * c[1]).collect();
        let minus = self.amps.chunks_exact(2).map(|c| r * c[0] - ph * c[1]).collect();
        [plus, minus]
    }

    /// Apply `exp(i q x)` to the orbital part, using exact oscillator
    /// matrix elements on the truncated basis.
    pub fn boost(&mut self, q: f64) {
        let n = self.n_max();
        let mut table = vec![Complex64::new(0.0, 0.0); n * n];
        for c in 0..n {
            for r in c..n {
                let v = boost_overlap(r, c, q);
                table[r * n + c] = v;
                table[c * n + r] = v;
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * n];
        for r in 0..n {
            let row = &table[r * n..(r + 1) * n];
            for s in 0..2 {
                out[2 * r + s] = row.iter().enumerate().map(|(c, v)| v * self.amps[2 * c + s]).sum();
            }
        }
        self.amps = out;
    }
}

/// `<sigma_z>` of a normalised state.
pub fn spin_polarization(state: &StateVector) -> f64 {
    state
        .amps
        .chunks_exact(2)
        .map(|c| c[0].norm_sqr() - c[1].norm_sqr())
        .sum()
}

/// `exp(-i alpha Sigma_x x) (c+ |phi_0>|+> + c- |phi_0>|->)` at `t = 0`.
pub fn prepare_initial_state(initial: [Complex64; 2], ops: &OperatorSet, alpha: f64) -> Result<StateVector> {
    let n = ops.n_max;
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * n];
    for s in Spin::BOTH {
        let spinor = s.spinor(ops.phi);
        let c = initial[s.index()];
        for k in 0..n {
            let b = c * boost_overlap(k, 0, -s.sign() * alpha * ops.length);
            amps[2 * k] += b * spinor[0];
            amps[2 * k + 1] += b * spinor[1];
        }
    }
    let state = StateVector { amps, time: 0.0 };
    state.check_boundary(INITIAL_BOUNDARY_LIMIT)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_operators;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn no_soc_gives_product_state() {
        let ops = build_operators(20, 1.0, 0.4).unwrap();
        let init = [c(0.6), Complex64::new(0.0, 0.8)];
        let s = prepare_initial_state(init, &ops, 0.0).unwrap();
        let plus = Spin::Plus.spinor(0.4);
        let minus = Spin::Minus.spinor(0.4);
        for k in 0..2 {
            let want = init[0] * plus[k] + init[1] * minus[k];
            assert!((s.amps[k] - want).norm() < 1e-15);
        }
        assert!(s.amps[2..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn initial_sigma_x_is_population_difference() {
        let ops = build_operators(32, 1.0, 0.3).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for init in [[c(r), c(r)], [c(0.6), c(0.8)], [c(1.0), c(0.0)]] {
            let s = prepare_initial_state(init, &ops, 0.08).unwrap();
            let want = init[0].norm_sqr() - init[1].norm_sqr();
            assert!((s.sigma_x_expectation(0.3) - want).abs() < 1e-14);
            assert!((s.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn orbital_occupation_is_poisson() {
        let ops = build_operators(32, 1.0, 0.3).unwrap();
        let s = prepare_initial_state([c(1.0), c(0.0)], &ops, 0.08).unwrap();
        let [plus, _] = s.frame_components(0.3);
        let mean: f64 = plus.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum();
        assert!((mean - 0.0032).abs() < 1e-12, "{mean}");
    }

    #[test]
    fn polarisation_limits() {
        let mut amps = vec![c(0.0); 40];
        amps[0] = c(1.0);
        let s = StateVector { amps, time: 0.0 };
        assert_eq!(spin_polarization(&s), 1.0);
        let ops = build_operators(20, 1.0, std::f64::consts::FRAC_PI_2).unwrap();
        let e = prepare_initial_state([c(1.0), c(0.0)], &ops, 0.0).unwrap();
        assert!(spin_polarization(&e).abs() < 1e-15);
    }

    #[test]
    fn boost_then_unboost() {
        let ops = build_operators(80, 1.0, 0.3).unwrap();
        let mut s = prepare_initial_state([c(0.6), c(0.8)], &ops, 0.08).unwrap();
        let orig = s.clone();
        s.boost(-2.0);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        s.boost(2.0);
        let d = s.amps.iter().zip(&orig.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }
}
