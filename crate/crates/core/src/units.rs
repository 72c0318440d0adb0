//! Physical constants and the oscillator unit system.
//!
//! The solver works in units where hbar = m = omega = e = 1. A [`UnitScale`]
//! carries the SI value of each base unit so results can be converted back
//! on output.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Free electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_0783e-24;
/// One electronvolt in joules.
pub const EV: f64 = ELEMENTARY_CHARGE;

/// Field unit of the resonance-comb axis, `hbar*omega / (2 e sqrt(pi hbar/(m omega)))`,
/// expressed in natural units. Peaks of the comb sit at integer multiples of
/// `250` of these units for the reference parameters.
pub const FIELD_AXIS_UNIT: f64 = 0.282_094_791_773_878_14;

/// SI values of the natural base units of one dot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub charge: f64,
}

impl UnitScale {
    /// Dimensionless scale: every conversion factor is 1.
    pub fn natural() -> Self {
        UnitScale {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
            charge: 1.0,
        }
    }

    /// SI scale for an electron of effective mass `mass` (kg) in a trap of
    /// angular frequency `omega` (rad/s).
    pub fn si(mass: f64, omega: f64) -> Self {
        UnitScale {
            hbar: HBAR,
            mass,
            omega,
            charge: ELEMENTARY_CHARGE,
        }
    }

    pub fn is_natural(&self) -> bool {
        *self == Self::natural()
    }

    /// Oscillator length `sqrt(hbar/(m omega))`.
    pub fn length(&self) -> f64 {
        (self.hbar / (self.mass * self.omega)).sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.hbar * self.omega
    }

    pub fn time(&self) -> f64 {
        1.0 / self.omega
    }

    pub fn velocity(&self) -> f64 {
        self.length() * self.omega
    }

    pub fn electric_field(&self) -> f64 {
        self.energy() / (self.charge * self.length())
    }

    /// Unit of the vector potential (field times time).
    pub fn gauge_potential(&self) -> f64 {
        self.electric_field() * self.time()
    }

    /// The comb-axis field unit in this system's field units.
    pub fn field_axis_unit(&self) -> f64 {
        FIELD_AXIS_UNIT * self.electric_field()
    }
}

/// Angular frequency (rad/s) whose quantum `hbar*omega` equals `energy_ev`.
pub fn omega_from_energy_ev(energy_ev: f64) -> f64 {
    energy_ev * EV / HBAR
}

/// Convert a spin-orbit strength quoted as `hbar*alpha` in eV·cm to a velocity in m/s.
pub fn soc_velocity_from_ev_cm(hbar_alpha: f64) -> f64 {
    hbar_alpha * EV * 1e-2 / HBAR
}

/// Inverse of [`soc_velocity_from_ev_cm`].
pub fn soc_ev_cm_from_velocity(alpha: f64) -> f64 {
    alpha * HBAR / (EV * 1e-2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_unit_is_inverse_two_root_pi() {
        let u = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        assert!((FIELD_AXIS_UNIT - u).abs() < 1e-16);
        assert!((FIELD_AXIS_UNIT - 0.282095).abs() < 1e-6);
    }

    #[test]
    fn natural_scale_is_identity() {
        let s = UnitScale::natural();
        assert_eq!(s.length(), 1.0);
        assert_eq!(s.electric_field(), 1.0);
        assert_eq!(s.field_axis_unit(), FIELD_AXIS_UNIT);
    }

    #[test]
    fn gaas_time_unit() {
        let omega = omega_from_energy_ev(9.1e-6);
        let s = UnitScale::si(0.067 * ELECTRON_MASS, omega);
        let sigma_t = 0.05 * s.time();
        assert!((sigma_t * 1e12 - 3.617).abs() < 0.01, "{}", sigma_t * 1e12);
    }
}
