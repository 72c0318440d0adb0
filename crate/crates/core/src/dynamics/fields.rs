//! Time profiles of the electric pulse, its gauge potential and the
//! magnetic-field switch-on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::params::{NaturalParams, PulseShape};

/// Pulse tails beyond this many widths are treated as zero.
pub const PULSE_HALF_WINDOW: f64 = 6.0;

/// Decay constant of the magnetic ramp; `B(t0 + tau) = 0.9 B0`.
pub const RAMP_RATE: f64 = 2.3;

/// Field profiles bound to one protocol, natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSamples {
    pub peak_amplitude: f64,
    pub pulse_width: f64,
    pub switch_time: f64,
    pub shape: PulseShape,
    /// Zeeman energy `delta_Z` at full field.
    pub zeeman: f64,
    pub ramp_time: f64,
}

pub fn field_profiles(params: &NaturalParams) -> FieldSamples {
    FieldSamples {
        peak_amplitude: params.peak_amplitude,
        pulse_width: params.pulse_width,
        switch_time: params.switch_time,
        shape: params.shape,
        zeeman: params.zeeman,
        ramp_time: params.ramp_time,
    }
}

impl FieldSamples {
    /// `A0 = sqrt(pi) sigma_t E0`.
    pub fn kick(&self) -> f64 {
        PI.sqrt() * self.pulse_width * self.peak_amplitude
    }

    /// Electric field. The delta pulse has no pointwise value and reports
    /// zero; its effect enters through [`FieldSamples::gauge`].
    pub fn electric(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Gaussian => {
                let u = (t - self.switch_time) / self.pulse_width;
                self.peak_amplitude * (-u * u).exp()
            }
            PulseShape::Delta => 0.0,
        }
    }

    /// Gauge potential, the running integral of the field from `t = 0`.
    pub fn gauge(&self, t: f64) -> f64 {
        let a0 = self.kick();
        match self.shape {
            PulseShape::Gaussian => {
                let s = self.pulse_width;
                0.5 * a0 * (libm::erf((t - self.switch_time) / s) + libm::erf(self.switch_time / s))
            }
            PulseShape::Delta => {
                if t >= self.switch_time {
                    a0
                } else {
                    0.0
                }
            }
        }
    }

    /// Magnetic field as a fraction of `B0`.
    pub fn magnetic_fraction(&self, t: f64) -> f64 {
        let s = t - self.switch_time;
        if s < 0.0 {
            0.0
        } else if self.ramp_time == 0.0 {
            1.0
        } else {
            -(-RAMP_RATE * s / self.ramp_time).exp_m1()
        }
    }

    /// Instantaneous Zeeman energy `delta_Z B(t) / B0`.
    pub fn zeeman_at(&self, t: f64) -> f64 {
        self.zeeman * self.magnetic_fraction(t)
    }

    /// Interval outside of which the electric field is negligible.
    pub fn pulse_window(&self) -> (f64, f64) {
        match self.shape {
            PulseShape::Gaussian => {
                let h = PULSE_HALF_WINDOW * self.pulse_width;
                ((self.switch_time - h).max(0.0), self.switch_time + h)
            }
            PulseShape::Delta => (self.switch_time, self.switch_time),
        }
    }

    /// Whether `B(t)` keeps changing after the switch.
    pub fn ramped(&self) -> bool {
        self.ramp_time > 0.0 && self.zeeman != 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> FieldSamples {
        let mut p = NaturalParams::reference();
        p.peak_amplitude = 100.0;
        p.zeeman = 0.06;
        p.ramp_time = 4.3;
        field_profiles(&p)
    }

    #[test]
    fn gauge_is_running_integral() {
        let f = gaussian();
        let h = 1e-5;
        for &t in &[0.3, 0.45, 0.5, 0.52, 0.6] {
            let d = (f.gauge(t + h) - f.gauge(t - h)) / (2.0 * h);
            let e = f.electric(t);
            assert!((d - e).abs() <= 1e-6 * e.abs().max(1.0), "t = {t}: {d} vs {e}");
        }
        assert!(f.gauge(0.0).abs() < 1e-14);
    }

    #[test]
    fn gauge_saturates_at_kick() {
        let f = gaussian();
        assert!((f.gauge(50.0) - f.kick()).abs() < 1e-12 * f.kick());
        let half = 0.5 * f.kick() * libm::erf(f.switch_time / f.pulse_width);
        assert!((f.gauge(f.switch_time) - half).abs() < 1e-12);
        assert!((f.gauge(f.switch_time) - 0.5 * f.kick()).abs() < 1e-10 * f.kick());
    }

    #[test]
    fn ramp_reaches_ninety_percent() {
        let f = gaussian();
        let r = f.magnetic_fraction(f.switch_time + f.ramp_time);
        assert!((r - (1.0 - (-2.3f64).exp())).abs() < 1e-15);
        assert!((r - 0.8997).abs() < 1e-4);
        let mut last = 0.0;
        for i in 0..200 {
            let b = f.magnetic_fraction(i as f64 * 0.1);
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn step_without_ramp() {
        let mut f = gaussian();
        f.ramp_time = 0.0;
        assert_eq!(f.magnetic_fraction(f.switch_time - 1e-9), 0.0);
        assert_eq!(f.magnetic_fraction(f.switch_time), 1.0);
    }
}
