//! Spin-orbit data of common dot materials and the comb spacing they imply.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::params::derive_soc_frame;
use crate::units::{soc_velocity_from_ev_cm, EV};

/// Literature values for one semiconductor, in eV·cm unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Material {
    pub name: &'static str,
    pub rashba_ev_cm: f64,
    /// Bulk Dresselhaus constant in eV·Å³.
    pub gamma_ev_a3: f64,
    /// Tabulated Dresselhaus strength.
    pub dresselhaus_ev_cm: f64,
    /// Tabulated total strength.
    pub total_ev_cm: f64,
    /// Tabulated comb spacing in V/cm.
    pub spacing_v_cm: f64,
}

pub const MATERIALS: [Material; 5] = [
    Material {
        name: "GaAs",
        rashba_ev_cm: 0.68e-11,
        gamma_ev_a3: -11.0,
        dresselhaus_ev_cm: -1.7e-11,
        total_ev_cm: 1.83e-11,
        spacing_v_cm: 22.6,
    },
    Material {
        name: "InSb",
        rashba_ev_cm: 3e-10,
        gamma_ev_a3: 490.0,
        dresselhaus_ev_cm: 7.7e-10,
        total_ev_cm: 8.3e-10,
        spacing_v_cm: 0.5,
    },
    Material {
        name: "InAs",
        rashba_ev_cm: 5.71e-9,
        gamma_ev_a3: 571.8,
        dresselhaus_ev_cm: 9.0e-10,
        total_ev_cm: 5.78e-9,
        spacing_v_cm: 0.07,
    },
    Material {
        name: "ZnO",
        rashba_ev_cm: 1.1e-11,
        gamma_ev_a3: 0.33,
        dresselhaus_ev_cm: 5.2e-13,
        total_ev_cm: 1.1e-11,
        spacing_v_cm: 37.6,
    },
    Material {
        name: "GaN",
        rashba_ev_cm: 9.0e-11,
        gamma_ev_a3: 0.32,
        dresselhaus_ev_cm: 5.0e-13,
        total_ev_cm: 9.0e-11,
        spacing_v_cm: 4.6,
    },
];

/// Conditions under which the table is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableConditions {
    pub well_width_nm: f64,
    pub trap_energy_ev: f64,
    pub pulse_width_ps: f64,
}

impl Default for TableConditions {
    fn default() -> Self {
        TableConditions {
            well_width_nm: 25.0,
            trap_energy_ev: 9.1e-6,
            pulse_width_ps: 4.0,
        }
    }
}

/// `hbar alpha_D ~ gamma (pi / z0)^2`, in eV·cm.
pub fn dresselhaus_from_gamma(gamma_ev_a3: f64, well_width_nm: f64) -> f64 {
    let z0_angstrom = 10.0 * well_width_nm;
    // eV·Å -> eV·cm
    gamma_ev_a3 * (PI / z0_angstrom).powi(2) * 1e-8
}

/// Comb spacing `hbar omega / (2 sqrt(pi) sigma_t e alpha)` in V/cm.
pub fn comb_spacing_v_cm(hbar_alpha_ev_cm: f64, c: &TableConditions) -> f64 {
    let omega_energy = c.trap_energy_ev * EV;
    let sigma = c.pulse_width_ps * 1e-12;
    let alpha = soc_velocity_from_ev_cm(hbar_alpha_ev_cm);
    let v_per_m = omega_energy / (2.0 * PI.sqrt() * sigma * EV * alpha);
    v_per_m / 100.0
}

/// One evaluated row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub material: String,
    pub rashba_ev_cm: f64,
    pub gamma_ev_a3: f64,
    pub dresselhaus_estimate_ev_cm: f64,
    pub total_ev_cm: f64,
    pub phi: f64,
    pub spacing_v_cm: f64,
    /// Spacing from the tabulated total strength instead of the estimate.
    pub spacing_tabulated_alpha_v_cm: f64,
    pub reference_spacing_v_cm: f64,
}

pub fn evaluate(m: &Material, c: &TableConditions) -> TableRow {
    let alpha_d = dresselhaus_from_gamma(m.gamma_ev_a3, c.well_width_nm);
    let soc = derive_soc_frame(m.rashba_ev_cm, alpha_d);
    TableRow {
        material: m.name.to_string(),
        rashba_ev_cm: m.rashba_ev_cm,
        gamma_ev_a3: m.gamma_ev_a3,
        dresselhaus_estimate_ev_cm: alpha_d,
        total_ev_cm: soc.alpha,
        phi: soc.phi,
        spacing_v_cm: comb_spacing_v_cm(soc.alpha, c),
        spacing_tabulated_alpha_v_cm: comb_spacing_v_cm(m.total_ev_cm, c),
        reference_spacing_v_cm: m.spacing_v_cm,
    }
}

pub fn table(c: &TableConditions) -> Vec<TableRow> {
    MATERIALS.iter().map(|m| evaluate(m, c)).collect()
}

/// Look a material up by name, ignoring case.
pub fn find(name: &str) -> Option<&'static Material> {
    MATERIALS.iter().find(|m| m.name.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaas_estimate() {
        let d = dresselhaus_from_gamma(-11.0, 25.0);
        assert!((d + 1.737e-11).abs() < 1e-14, "{d:e}");
        let row = evaluate(find("gaas").unwrap(), &TableConditions::default());
        assert!((row.total_ev_cm - 1.865e-11).abs() < 2e-14);
        assert!((row.spacing_v_cm - 22.66).abs() < 0.02, "{}", row.spacing_v_cm);
        assert!((row.spacing_tabulated_alpha_v_cm - 23.09).abs() < 0.02, "{}", row.spacing_tabulated_alpha_v_cm);
    }

    #[test]
    fn spacing_is_inverse_in_alpha() {
        let c = TableConditions::default();
        let a = comb_spacing_v_cm(1e-11, &c);
        assert!((comb_spacing_v_cm(2e-11, &c) - a / 2.0).abs() < 1e-12 * a);
    }
}
