//! Material and drive parameters, their natural-unit form, and run validation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{UnitScale, BOHR_MAGNETON};

/// Soft limit on the Zeeman splitting, in units of the trap quantum.
pub const ZEEMAN_WARN_LIMIT: f64 = 0.2;
/// Smallest accepted basis size.
pub const MIN_BASIS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// hbar = m = omega = e = 1.
    Natural,
    /// SI: kg, rad/s, m/s, m.
    Si,
}

/// Constants of one quantum dot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub units: UnitSystem,
    pub effective_mass: f64,
    pub trap_freq: f64,
    /// Rashba strength as a velocity (hbar*alpha_R / hbar).
    pub rashba: f64,
    /// Dresselhaus strength as a velocity.
    pub dresselhaus: f64,
    pub lande: f64,
    /// Quantum-well width, only used for Dresselhaus estimates from gamma.
    pub well_width: Option<f64>,
}

impl MaterialParams {
    /// A dot already expressed in natural units.
    pub fn natural(rashba: f64, dresselhaus: f64, lande: f64) -> Self {
        MaterialParams {
            units: UnitSystem::Natural,
            effective_mass: 1.0,
            trap_freq: 1.0,
            rashba,
            dresselhaus,
            lande,
            well_width: None,
        }
    }

    pub fn scale(&self) -> UnitScale {
        match self.units {
            UnitSystem::Natural => UnitScale::natural(),
            UnitSystem::Si => UnitScale::si(self.effective_mass, self.trap_freq),
        }
    }

    pub fn soc(&self) -> DerivedSoc {
        derive_soc_frame(self.rashba, self.dresselhaus)
    }
}

/// Total spin-orbit strength and mixing angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSoc {
    pub alpha: f64,
    pub phi: f64,
}

impl DerivedSoc {
    pub fn rashba(&self) -> f64 {
        self.alpha * self.phi.sin()
    }

    pub fn dresselhaus(&self) -> f64 {
        self.alpha * self.phi.cos()
    }

    /// Fails with [`Error::DegenerateSoc`] when the coupling vanishes.
    pub fn require_positive(self) -> Result<Self> {
        if self.alpha > 0.0 {
            Ok(self)
        } else {
            Err(Error::DegenerateSoc)
        }
    }
}

/// Combine Rashba and Dresselhaus strengths into `(alpha, phi)` with
/// `alpha_R = alpha sin(phi)` and `alpha_D = alpha cos(phi)`.
pub fn derive_soc_frame(alpha_r: f64, alpha_d: f64) -> DerivedSoc {
    let alpha = alpha_r.hypot(alpha_d);
    let mut phi = alpha_r.atan2(alpha_d);
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    DerivedSoc { alpha, phi }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// `E(t) = E0 exp(-(t - t0)^2 / sigma_t^2)`.
    Gaussian,
    /// Instantaneous kick with the same time integral `sqrt(pi) sigma_t E0`.
    Delta,
}

/// How the static magnetic field is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeemanSpec {
    /// Field strength in tesla (SI dots only).
    Tesla(f64),
    /// Zeeman energy `g mu_B B / 2` directly, in the dot's energy unit.
    Splitting(f64),
}

/// External drive: electric pulse, magnetic field and anharmonicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProtocol {
    pub peak_amplitude: f64,
    pub pulse_width: f64,
    /// Pulse centre; defaults to ten pulse widths.
    pub switch_time: Option<f64>,
    pub shape: PulseShape,
    pub zeeman: ZeemanSpec,
    pub field_angle: f64,
    /// Magnetic ramp time; 0 switches the field on as a step.
    pub ramp_time: f64,
    pub anharmonic_lambda: f64,
}

impl FieldProtocol {
    pub fn switch_time_or_default(&self) -> f64 {
        self.switch_time.unwrap_or(10.0 * self.pulse_width)
    }
}

/// Everything the solvers need, in natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams {
    pub scale: UnitScale,
    pub alpha: f64,
    pub phi: f64,
    pub lande: f64,
    pub well_width: Option<f64>,
    /// Zeeman energy `delta_Z`.
    pub zeeman: f64,
    /// Field strength when it was given in tesla.
    pub field_tesla: Option<f64>,
    pub peak_amplitude: f64,
    pub pulse_width: f64,
    pub switch_time: f64,
    pub shape: PulseShape,
    pub field_angle: f64,
    pub ramp_time: f64,
    pub lambda: f64,
}

impl NaturalParams {
    /// The reference dot used throughout the figures: alpha = 0.08, phi = 0.3,
    /// sigma_t = 0.05, t0 = 0.5, no magnetic field.
    pub fn reference() -> Self {
        NaturalParams {
            scale: UnitScale::natural(),
            alpha: 0.08,
            phi: 0.3,
            lande: -0.44,
            well_width: None,
            zeeman: 0.0,
            field_tesla: None,
            peak_amplitude: 0.0,
            pulse_width: 0.05,
            switch_time: 0.5,
            shape: PulseShape::Gaussian,
            field_angle: 0.0,
            ramp_time: 0.0,
            lambda: 0.0,
        }
    }

    pub fn alpha_r(&self) -> f64 {
        self.alpha * self.phi.sin()
    }

    pub fn alpha_d(&self) -> f64 {
        self.alpha * self.phi.cos()
    }

    /// Time integral of the pulse, `A0 = sqrt(pi) sigma_t E0`.
    pub fn kick(&self) -> f64 {
        PI.sqrt() * self.pulse_width * self.peak_amplitude
    }

    /// Peak field giving a kick `a0`.
    pub fn amplitude_for_kick(&self, a0: f64) -> f64 {
        a0 / (PI.sqrt() * self.pulse_width)
    }

    /// Quartic coefficient `beta = lambda / 2`.
    pub fn beta(&self) -> f64 {
        0.5 * self.lambda
    }

    /// `delta_Z cos(theta - phi)`.
    pub fn zeeman_parallel(&self) -> f64 {
        self.zeeman * (self.field_angle - self.phi).cos()
    }

    /// `delta_Z sin(theta - phi)`.
    pub fn zeeman_perpendicular(&self) -> f64 {
        self.zeeman * (self.field_angle - self.phi).sin()
    }

    pub fn with_peak_amplitude(&self, e0: f64) -> Self {
        NaturalParams {
            peak_amplitude: e0,
            ..self.clone()
        }
    }

    pub fn soc(&self) -> DerivedSoc {
        DerivedSoc {
            alpha: self.alpha,
            phi: self.phi,
        }
    }

    /// Convert back to the unit system the parameters were ingested in.
    pub fn to_si(&self) -> (MaterialParams, FieldProtocol) {
        let s = self.scale;
        let units = if s.is_natural() {
            UnitSystem::Natural
        } else {
            UnitSystem::Si
        };
        let material = MaterialParams {
            units,
            effective_mass: s.mass,
            trap_freq: s.omega,
            rashba: self.alpha_r() * s.velocity(),
            dresselhaus: self.alpha_d() * s.velocity(),
            lande: self.lande,
            well_width: self.well_width.map(|w| w * s.length()),
        };
        let zeeman = match self.field_tesla {
            Some(_) if self.lande != 0.0 && units == UnitSystem::Si => ZeemanSpec::Tesla(
                2.0 * self.zeeman * s.energy() / (self.lande * BOHR_MAGNETON),
            ),
            Some(b) => ZeemanSpec::Tesla(b),
            None => ZeemanSpec::Splitting(self.zeeman * s.energy()),
        };
        let protocol = FieldProtocol {
            peak_amplitude: self.peak_amplitude * s.electric_field(),
            pulse_width: self.pulse_width * s.time(),
            switch_time: Some(self.switch_time * s.time()),
            shape: self.shape,
            zeeman,
            field_angle: self.field_angle,
            ramp_time: self.ramp_time * s.time(),
            anharmonic_lambda: self.lambda,
        };
        (material, protocol)
    }
}

/// Express a dot and its drive in natural units.
pub fn to_natural_units(material: &MaterialParams, protocol: &FieldProtocol) -> NaturalParams {
    let s = material.scale();
    let soc = material.soc();
    let (zeeman, field_tesla) = match protocol.zeeman {
        ZeemanSpec::Tesla(b) => (0.5 * material.lande * BOHR_MAGNETON * b / s.energy(), Some(b)),
        ZeemanSpec::Splitting(e) => (e / s.energy(), None),
    };
    NaturalParams {
        scale: s,
        alpha: soc.alpha / s.velocity(),
        phi: soc.phi,
        lande: material.lande,
        well_width: material.well_width.map(|w| w / s.length()),
        zeeman,
        field_tesla,
        peak_amplitude: protocol.peak_amplitude / s.electric_field(),
        pulse_width: protocol.pulse_width / s.time(),
        switch_time: protocol.switch_time_or_default() / s.time(),
        shape: protocol.shape,
        field_angle: protocol.field_angle,
        ramp_time: protocol.ramp_time / s.time(),
        lambda: protocol.anharmonic_lambda,
    }
}

/// A complete simulation request in the dot's own units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub material: MaterialParams,
    pub protocol: FieldProtocol,
    pub basis_size: usize,
    pub time_step: f64,
    pub average_span: f64,
    pub initial: [Complex64; 2],
}

/// Output of [`validate_config`].
#[derive(Debug, Clone)]
pub struct ValidatedRun {
    pub config: RunConfig,
    pub natural: NaturalParams,
    /// Solver settings in natural units.
    pub run: RunSettings,
    pub warnings: Vec<String>,
}

/// Solver settings in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub basis_size: usize,
    pub time_step: f64,
    pub average_span: f64,
    pub initial: [Complex64; 2],
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be finite, got {v}")))
    }
}

/// Enforce the invariants of a run and normalise the initial spinor.
pub fn validate_config(mut cfg: RunConfig) -> Result<ValidatedRun> {
    let m = &cfg.material;
    positive("material.effective_mass", m.effective_mass)?;
    positive("material.trap_freq", m.trap_freq)?;
    finite("material.rashba", m.rashba)?;
    finite("material.dresselhaus", m.dresselhaus)?;
    finite("material.lande", m.lande)?;
    if let Some(w) = m.well_width {
        positive("material.well_width", w)?;
    }
    let p = &cfg.protocol;
    finite("protocol.peak_amplitude", p.peak_amplitude)?;
    positive("protocol.pulse_width", p.pulse_width)?;
    if let Some(t0) = p.switch_time {
        positive("protocol.switch_time", t0)?;
    }
    finite("protocol.field_angle", p.field_angle)?;
    if !(p.ramp_time.is_finite() && p.ramp_time >= 0.0) {
        return Err(Error::config(
            "protocol.ramp_time",
            format!("must be non-negative, got {}", p.ramp_time),
        ));
    }
    if !(p.anharmonic_lambda.is_finite() && p.anharmonic_lambda >= 0.0) {
        return Err(Error::config(
            "protocol.anharmonic_lambda",
            format!("must be non-negative, got {}", p.anharmonic_lambda),
        ));
    }
    match p.zeeman {
        ZeemanSpec::Tesla(b) => {
            finite("protocol.field_strength", b)?;
            if m.units == UnitSystem::Natural {
                return Err(Error::config(
                    "protocol.field_strength",
                    "a field in tesla needs an SI material; give the Zeeman energy instead",
                ));
            }
        }
        ZeemanSpec::Splitting(e) => finite("protocol.zeeman", e)?,
    }
    if cfg.basis_size < MIN_BASIS {
        return Err(Error::config(
            "run.basis_size",
            format!("must be at least {MIN_BASIS}, got {}", cfg.basis_size),
        ));
    }
    positive("run.time_step", cfg.time_step)?;
    positive("run.average_span", cfg.average_span)?;

    let [cp, cm] = cfg.initial;
    let norm = (cp.norm_sqr() + cm.norm_sqr()).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::config("run.initial", "initial spinor must be nonzero"));
    }
    cfg.initial = [cp / norm, cm / norm];

    let natural = to_natural_units(&cfg.material, &cfg.protocol);
    let mut warnings = Vec::new();
    if natural.zeeman.abs() > ZEEMAN_WARN_LIMIT {
        warnings.push(format!(
            "Zeeman energy {:.3} exceeds {ZEEMAN_WARN_LIMIT} of the trap quantum; first-order results degrade",
            natural.zeeman
        ));
    }
    if natural.alpha == 0.0 {
        warnings.push("spin-orbit coupling is zero; no resonance comb will form".into());
    }
    let s = natural.scale;
    let run = RunSettings {
        basis_size: cfg.basis_size,
        time_step: cfg.time_step / s.time(),
        average_span: cfg.average_span / s.time(),
        initial: cfg.initial,
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ValidatedRun {
        config: cfg,
        natural,
        run,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{omega_from_energy_ev, soc_ev_cm_from_velocity, soc_velocity_from_ev_cm, ELECTRON_MASS};

    fn natural_run() -> RunConfig {
        RunConfig {
            material: MaterialParams::natural(0.08 * 0.3f64.sin(), 0.08 * 0.3f64.cos(), -0.44),
            protocol: FieldProtocol {
                peak_amplitude: 10.0,
                pulse_width: 0.05,
                switch_time: None,
                shape: PulseShape::Gaussian,
                zeeman: ZeemanSpec::Splitting(0.06),
                field_angle: 0.0,
                ramp_time: 4.3,
                anharmonic_lambda: 0.0,
            },
            basis_size: 128,
            time_step: 0.0025,
            average_span: 10.0 * PI,
            initial: [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    #[test]
    fn pure_dresselhaus_and_rashba() {
        let d = derive_soc_frame(0.0, 0.3);
        assert_eq!(d.alpha, 0.3);
        assert_eq!(d.phi, 0.0);
        let r = derive_soc_frame(0.3, 0.0);
        assert_eq!(r.alpha, 0.3);
        assert!((r.phi - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaas_total_strength() {
        let d = derive_soc_frame(0.68e-11, -1.7e-11);
        assert!((d.alpha - 1.83e-11).abs() / 1.83e-11 < 0.005, "{}", d.alpha);
        assert!(d.phi > PI / 2.0 && d.phi < PI);
        assert!((d.rashba() - 0.68e-11).abs() < 1e-23);
        assert!((d.dresselhaus() + 1.7e-11).abs() < 1e-23);
    }

    #[test]
    fn phi_in_half_open_interval() {
        let d = derive_soc_frame(-0.0, -1.0);
        assert!((d.phi - PI).abs() < 1e-15);
        assert!(d.phi > -PI && d.phi <= PI);
    }

    #[test]
    fn zero_soc_rejected_when_required() {
        assert!(matches!(
            derive_soc_frame(0.0, 0.0).require_positive(),
            Err(Error::DegenerateSoc)
        ));
    }

    #[test]
    fn natural_input_maps_to_itself() {
        let cfg = natural_run();
        let n = to_natural_units(&cfg.material, &cfg.protocol);
        assert!((n.alpha - 0.08).abs() < 1e-15);
        assert!((n.phi - 0.3).abs() < 1e-15);
        assert_eq!(n.peak_amplitude, 10.0);
        assert_eq!(n.pulse_width, 0.05);
        assert_eq!(n.switch_time, 0.5);
        assert_eq!(n.zeeman, 0.06);
    }

    #[test]
    fn gaas_pulse_width_in_ps() {
        let m = MaterialParams {
            units: UnitSystem::Si,
            effective_mass: 0.067 * ELECTRON_MASS,
            trap_freq: omega_from_energy_ev(9.1e-6),
            rashba: soc_velocity_from_ev_cm(0.68e-11),
            dresselhaus: soc_velocity_from_ev_cm(-1.7e-11),
            lande: -0.44,
            well_width: None,
        };
        let s = m.scale();
        let sigma_t = 0.05 * s.time();
        assert!((sigma_t - 3.617e-12).abs() < 0.01e-12);
        let hbar_alpha = soc_ev_cm_from_velocity(m.soc().alpha);
        assert!((hbar_alpha - 1.831e-11).abs() < 0.001e-11);
    }

    #[test]
    fn normalises_spinor() {
        let mut cfg = natural_run();
        cfg.initial = [Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        let v = validate_config(cfg).unwrap();
        assert_eq!(v.config.initial[0], Complex64::new(1.0, 0.0));
        assert_eq!(v.config.initial[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn small_basis_rejected() {
        let mut cfg = natural_run();
        cfg.basis_size = 8;
        match validate_config(cfg) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "run.basis_size"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_zeeman_passes_silently() {
        let v = validate_config(natural_run()).unwrap();
        assert!(v.warnings.is_empty(), "{:?}", v.warnings);
    }

    #[test]
    fn strong_zeeman_warns() {
        let mut cfg = natural_run();
        cfg.protocol.zeeman = ZeemanSpec::Splitting(0.3);
        let v = validate_config(cfg).unwrap();
        assert_eq!(v.warnings.len(), 1);
    }
}
