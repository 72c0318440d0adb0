//! Material parameters from a resonance comb and its angular dependence.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Peak, PeakSet, ThetaCurve};
use crate::error::{Error, Result};
use crate::units::{soc_ev_cm_from_velocity, UnitScale, BOHR_MAGNETON};

/// What is known about the magnetic field besides its direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKnowledge {
    /// Field strength in tesla; the Lande factor is estimated.
    Tesla(f64),
    /// Lande factor; the field strength is estimated.
    Lande(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownQuantities {
    /// Units of the dot; peak positions and `pulse_width` are natural.
    pub scale: UnitScale,
    pub pulse_width: f64,
    pub field: Option<FieldKnowledge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Natural units.
    pub alpha: f64,
    /// In the dot's velocity unit.
    pub alpha_si: f64,
    /// `hbar alpha` in eV cm, for SI dots.
    pub hbar_alpha_ev_cm: Option<f64>,
    pub phi: Option<f64>,
    pub alpha_r: Option<f64>,
    pub alpha_d: Option<f64>,
    /// Fitted `A - C cos(theta - phi)`.
    pub cosine_offset: Option<f64>,
    pub cosine_amplitude: Option<f64>,
    /// `C 2 sqrt(pi) sigma_t alpha`, natural units.
    pub zeeman: Option<f64>,
    pub lande: Option<f64>,
    pub field_tesla: Option<f64>,
    /// Mean distance between consecutive orders.
    pub spacing: f64,
    /// RMS residual of the linear fit position = a + spacing k.
    pub spacing_rms: f64,
    /// RMS residual of the cosine fit.
    pub cosine_rms: Option<f64>,
    /// Orders entering the spacing, one line each.
    pub peaks_used: usize,
    pub angles_used: usize,
    pub peak_threshold: f64,
    pub theta_step: Option<f64>,
    pub window_step: Option<f64>,
    pub notes: Vec<String>,
}

/// `alpha = hbar omega / (2 sqrt(pi) sigma_t e spacing)` in natural units.
pub fn alpha_from_spacing(spacing: f64, pulse_width: f64) -> f64 {
    1.0 / (2.0 * PI.sqrt() * pulse_width * spacing)
}

/// Invert a comb (and optionally a theta curve) into `alpha`, `phi` and the
/// Zeeman coupling.
pub fn estimate_parameters(peaks: &PeakSet, theta: Option<&ThetaCurve>, known: &KnownQuantities) -> Result<EstimateReport> {
    if !(known.pulse_width > 0.0) {
        return Err(Error::config("protocol.pulse_width", "must be positive"));
    }
    // Order 0 rides on the static polarisation near zero amplitude; within
    // an order the tallest maximum is the line, the rest lobes or splitting.
    let mut best: BTreeMap<i64, &Peak> = BTreeMap::new();
    for p in peaks.peaks.iter().filter(|p| p.order >= 1 && p.position.is_finite()) {
        let slot = best.entry(p.order).or_insert(p);
        if p.height > slot.height {
            *slot = p;
        }
    }
    let pts: Vec<(i64, f64)> = best.values().map(|p| (p.order, p.position)).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need peaks of at least 2 resonance orders, got {}",
            pts.len()
        )));
    }
    let (k0, x0) = pts[0];
    let (k1, x1) = pts[pts.len() - 1];
    let spacing = (x1 - x0) / (k1 - k0) as f64;
    let spacing_rms = {
        let ks: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (a, s) = line_fit(&ks, &xs);
        rms(ks.iter().zip(&xs).map(|(k, x)| x - a - s * k))
    };
    let alpha = alpha_from_spacing(spacing, known.pulse_width);
    let scale = known.scale;
    let si = !scale.is_natural();
    let mut report = EstimateReport {
        alpha,
        alpha_si: alpha * scale.velocity(),
        hbar_alpha_ev_cm: si.then(|| soc_ev_cm_from_velocity(alpha * scale.velocity())),
        phi: None,
        alpha_r: None,
        alpha_d: None,
        cosine_offset: None,
        cosine_amplitude: None,
        zeeman: None,
        lande: None,
        field_tesla: None,
        spacing,
        spacing_rms,
        cosine_rms: None,
        peaks_used: pts.len(),
        angles_used: 0,
        peak_threshold: peaks.threshold,
        theta_step: None,
        window_step: None,
        notes: Vec::new(),
    };
    let Some(curve) = theta else {
        report.notes.push("no angular data: phi and the Zeeman coupling are unavailable".into());
        return Ok(report);
    };

    let data: Vec<(f64, f64)> = curve
        .theta
        .iter()
        .zip(&curve.measured)
        .filter(|(t, m)| t.is_finite() && m.is_finite())
        .map(|(&t, &m)| (t, m))
        .collect();
    let lo = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    if data.len() < 3 || hi - lo < PI - 1e-9 {
        return Err(Error::InsufficientData(format!(
            "angular fit needs at least 3 angles spanning pi, got {} over {:.3} rad",
            data.len(),
            (hi - lo).max(0.0)
        )));
    }
    let design = DMatrix::from_fn(data.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => data[i].0.cos(),
        _ => data[i].0.sin(),
    });
    let rhs = DVector::from_iterator(data.len(), data.iter().map(|d| d.1));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("cosine fit failed: {e}")))?;
    let (a, c_cos, c_sin) = (coef[0], coef[1], coef[2]);
    let fitted = &design * &coef;
    // A + c_cos cos + c_sin sin = A - C cos(theta - phi)
    let amplitude = c_cos.hypot(c_sin);
    let phi = (-c_sin).atan2(-c_cos);
    let mut sorted: Vec<f64> = data.iter().map(|d| d.0).collect();
    sorted.sort_by(f64::total_cmp);
    let step = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);

    report.phi = Some(phi);
    report.alpha_r = Some(alpha * phi.sin());
    report.alpha_d = Some(alpha * phi.cos());
    report.cosine_offset = Some(a);
    report.cosine_amplitude = Some(amplitude);
    report.cosine_rms = Some(rms(fitted.iter().zip(&rhs).map(|(f, m)| m - f)));
    report.angles_used = data.len();
    report.theta_step = Some(step);
    report.window_step = curve.window_step.is_finite().then_some(curve.window_step);
    if amplitude == 0.0 {
        report.notes.push("flat angular curve: phi is undetermined".into());
    }

    let zeeman = amplitude * 2.0 * PI.sqrt() * known.pulse_width * alpha;
    report.zeeman = Some(zeeman);
    match known.field {
        Some(_) if !si => report
            .notes
            .push("natural-unit dot: converting the Zeeman energy to a field needs SI units".into()),
        Some(FieldKnowledge::Tesla(b)) if b != 0.0 => {
            report.lande = Some(2.0 * zeeman * scale.energy() / (BOHR_MAGNETON * b));
            report.field_tesla = Some(b);
        }
        Some(FieldKnowledge::Lande(g)) if g != 0.0 => {
            report.field_tesla = Some(2.0 * zeeman * scale.energy() / (BOHR_MAGNETON * g));
            report.lande = Some(g);
        }
        Some(_) => report.notes.push("zero field or Lande factor: nothing to invert".into()),
        None => {}
    }
    Ok(report)
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - s * mx, s)
}

fn rms(r: impl Iterator<Item = f64>) -> f64 {
    let (mut acc, mut n) = (0.0, 0usize);
    for v in r {
        acc += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (acc / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comb(positions: &[(i64, f64)]) -> PeakSet {
        PeakSet {
            peaks: positions
                .iter()
                .map(|&(order, position)| Peak {
                    position,
                    height: 0.4,
                    prominence: 0.4,
                    width: 1.0,
                    order,
                    index: 0,
                })
                .collect(),
            spacing: None,
            threshold: 0.02,
        }
    }

    fn natural(sigma: f64) -> KnownQuantities {
        KnownQuantities {
            scale: UnitScale::natural(),
            pulse_width: sigma,
            field: None,
        }
    }

    #[test]
    fn spacing_only_gives_partial_report() {
        let s = 1.0 / (2.0 * PI.sqrt() * 0.05 * 0.08);
        let r = estimate_parameters(&comb(&[(1, s), (2, 2.0 * s), (3, 3.0 * s)]), None, &natural(0.05)).unwrap();
        assert!((r.alpha - 0.08).abs() < 1e-12);
        assert!(r.phi.is_none() && r.lande.is_none() && r.zeeman.is_none());
        assert!(r.spacing_rms < 1e-9);
    }

    #[test]
    fn one_peak_is_not_enough() {
        assert!(matches!(
            estimate_parameters(&comb(&[(1, 70.0)]), None, &natural(0.05)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn exact_cosine_is_inverted() {
        let s = 70.0;
        let thetas: Vec<f64> = (0..12).map(|i| i as f64 * PI / 6.0).collect();
        let measured: Vec<f64> = thetas.iter().map(|t| s - 4.2 * (t - 2.5).cos()).collect();
        let curve = ThetaCurve::from_measurements(1, thetas, measured);
        let r = estimate_parameters(&comb(&[(1, s), (2, 2.0 * s)]), Some(&curve), &natural(0.05)).unwrap();
        assert!((r.phi.unwrap() - 2.5).abs() < 1e-12);
        assert!((r.cosine_amplitude.unwrap() - 4.2).abs() < 1e-12);
        assert!(r.phi.unwrap() > -PI && r.phi.unwrap() <= PI);
    }

    #[test]
    fn narrow_angular_range_is_refused() {
        let thetas = vec![0.0, 0.5, 1.0, 1.5];
        let curve = ThetaCurve::from_measurements(1, thetas, vec![1.0; 4]);
        assert!(matches!(
            estimate_parameters(&comb(&[(1, 1.0), (2, 2.0)]), Some(&curve), &natural(0.05)),
            Err(Error::InsufficientData(_))
        ));
    }
}
