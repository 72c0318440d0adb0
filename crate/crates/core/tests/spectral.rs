use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sointerf::basis::{build_operators, Spin};
use sointerf::dynamics::{assemble_hamiltonian, field_profiles, Gauge};
use sointerf::params::{NaturalParams, PulseShape};
use sointerf::spectral::{
    dc_solve, first_order_corrections, peak_spacing, resonance_position, AnalyticEngine, Branch, SpectralOptions,
};
use sointerf::units::FIELD_AXIS_UNIT;

type C = Complex64;

fn equal() -> [C; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [C::new(r, 0.0), C::new(r, 0.0)]
}

fn setting(a0: f64, zeeman: f64, dtheta: f64) -> NaturalParams {
    let mut p = NaturalParams::reference();
    p.peak_amplitude = p.amplitude_for_kick(a0);
    p.zeeman = zeeman;
    p.field_angle = p.phi + dtheta;
    p.shape = PulseShape::Delta;
    p
}

/// Sorted eigenvalues of the post-kick Hamiltonian (velocity gauge, constant
/// `A0`) in an oscillator basis of `n` levels, shifted by the zero point.
fn exact_levels(p: &NaturalParams, n: usize) -> Vec<f64> {
    let ops = build_operators(n, 1.0, p.phi).unwrap();
    let h = assemble_hamiltonian(p.switch_time + 1.0, Gauge::Velocity, &ops, &field_profiles(p), p).unwrap();
    let mut e: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().map(|x| x - 0.5).collect();
    e.sort_by(f64::total_cmp);
    e
}

/// The two exact levels closest to the block centre, upper first.
fn exact_pair(levels: &[f64], centre: f64) -> [f64; 2] {
    let mut by_dist: Vec<f64> = levels.to_vec();
    by_dist.sort_by(|a, b| (a - centre).abs().total_cmp(&(b - centre).abs()));
    let (a, b) = (by_dist[0], by_dist[1]);
    [a.max(b), a.min(b)]
}

fn dc_error(p: &NaturalParams, n: usize) -> f64 {
    let dc = dc_solve(n, 1, p);
    let centre = 0.5 * (dc.energies[0] + dc.energies[1]);
    let exact = exact_pair(&exact_levels(p, 128), centre);
    (dc.energies[0] - exact[0]).abs().max((dc.energies[1] - exact[1]).abs())
}

#[test]
fn avoided_crossing_matches_exact_example() {
    // Fixed example: delta_Z = 0.06, theta - phi = pi/2, A0 = 6.25.
    let p = setting(6.25, 0.06, PI / 2.0);
    let err = dc_error(&p, 0);
    eprintln!("dc_solve vs exact at theta - phi = pi/2: {err:.3e}");
    assert!(err < 5.0 * 0.06 * 0.06, "{err}");
}

#[test]
fn magnetic_field_only_has_no_comb() {
    // No kick: all N != 0 amplitudes vanish, nothing depends on the comb.
    let mut p = setting(0.0, 0.03, 0.0);
    p.peak_amplitude = 0.0;
    let e = AnalyticEngine::for_kick(p.alpha, 0.0, SpectralOptions::default())
        .expand(&p, equal())
        .unwrap();
    for (j, a) in e.amplitudes.iter().enumerate() {
        if e.labels[j].0 > 0 {
            assert!(a.norm() < 1e-14);
        }
    }
}

#[test]
fn zero_field_tables_keep_only_minus_plus() {
    let p = setting(3.0, 0.0, 0.0);
    let engine = AnalyticEngine::for_kick(p.alpha, p.kick(), SpectralOptions::default());
    let e = engine.expand(&p, equal()).unwrap();
    let m = engine.sigma_z_coefficients(&e);
    assert_eq!(m.branch, Branch::Nondegenerate);
    assert!(m.plus_plus.is_empty() && m.minus_minus.is_empty() && m.plus_minus.is_empty());
    assert!(!m.minus_plus.is_empty());
}

#[test]
fn single_spin_component_gives_flat_q() {
    let engine = AnalyticEngine::for_kick(0.08, 8.0, SpectralOptions::default());
    for a0 in [1.0, 3.0, 6.25, 7.5] {
        let p = setting(a0, 0.0, 0.0);
        let e = engine.expand(&p, [C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        let m = engine.sigma_z_coefficients(&e);
        assert!(m.plus_plus.is_empty() && m.minus_plus.is_empty());
        assert_eq!(e.long_time_average(10.0 * PI), 0.0);
    }
}

#[test]
fn fully_dephased_pairs_average_out() {
    // Off resonance and T large: only the static part survives, which is
    // small next to the on-resonance value.
    let engine = AnalyticEngine::for_kick(0.08, 8.0, SpectralOptions::default());
    let off = engine.expand(&setting(4.0, 0.0, 0.0), equal()).unwrap();
    let on = engine.expand(&setting(6.25, 0.0, 0.0), equal()).unwrap();
    let span = 400.0 * PI;
    assert!(off.long_time_average(span).abs() < 1e-3);
    assert!(on.long_time_average(span).abs() > 0.05);
}

#[test]
fn corrections_vanish_without_transverse_field() {
    for p in [setting(3.0, 0.0, 1.0), setting(3.0, 0.06, 0.0)] {
        let s = first_order_corrections((2, Spin::Plus), &p).unwrap();
        assert!(s.f1.is_empty() && s.f2.is_empty());
        assert_eq!(s.correction_norm, 0.0);
    }
}

#[test]
fn correction_norm_is_linear_in_zeeman() {
    let zs = [0.01, 0.02, 0.03, 0.04, 0.05, 0.06];
    let norms: Vec<f64> = zs
        .iter()
        .map(|&z| first_order_corrections((2, Spin::Plus), &setting(3.0, z, 1.0)).unwrap().correction_norm)
        .collect();
    let xs: Vec<f64> = zs.iter().map(|z| z.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 6.0;
    let my = ys.iter().sum::<f64>() / 6.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn comb_positions_in_figure_units() {
    let p = NaturalParams::reference();
    for k in 1..=6 {
        let e = resonance_position(k, &p).unwrap() / FIELD_AXIS_UNIT;
        assert!((e - 250.0 * k as f64).abs() < 1e-9);
    }
    assert!((peak_spacing(&p).unwrap() - 70.5237).abs() < 1e-4);
}

fn random_setting() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..=0.06, 0.0f64..(2.0 * PI))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn degenerate_levels_match_exact((z, theta) in random_setting()) {
        let p = setting(6.25, z, theta - NaturalParams::reference().phi);
        let err = dc_error(&p, 0);
        prop_assert!(err < 5.0 * z * z + 1e-9, "z = {} theta = {}: {}", z, theta, err);
    }

    #[test]
    fn spacing_is_constant(k in 1usize..6, z in 0.0f64..0.06, theta in 0.0f64..(2.0 * PI)) {
        let mut p = NaturalParams::reference();
        p.zeeman = z;
        p.field_angle = theta;
        let d = resonance_position(k + 1, &p).unwrap() - resonance_position(k, &p).unwrap();
        prop_assert!((d - peak_spacing(&p).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn opposite_field_shift(z in 0.0f64..0.06, theta in 0.0f64..(2.0 * PI)) {
        let mut p = NaturalParams::reference();
        p.zeeman = z;
        p.field_angle = theta;
        let a = resonance_position(1, &p).unwrap();
        p.field_angle = theta + PI;
        let b = resonance_position(1, &p).unwrap();
        let want = -2.0 * z * (theta - p.phi).cos() / (2.0 * PI.sqrt() * p.pulse_width * p.alpha);
        prop_assert!((a - b - want).abs() < 1e-9);
    }

    #[test]
    fn polarisation_is_real(a0 in 0.5f64..9.0, z in 0.0f64..0.06, theta in 0.0f64..(2.0 * PI), s in 0.0f64..30.0,
                            ratio in 0.2f64..5.0) {
        let p = setting(a0, z, theta);
        let nrm = (1.0 + ratio * ratio).sqrt();
        let init = [C::new(ratio / nrm, 0.0), C::new(1.0 / nrm, 0.0)];
        let engine = AnalyticEngine::for_kick(p.alpha, a0, SpectralOptions::default());
        match engine.expand(&p, init) {
            Ok(e) => {
                prop_assert!(e.sigma_z_complex(s).im.abs() < 1e-10);
                let m = engine.sigma_z_coefficients(&e);
                prop_assert!(m.is_finite());
                prop_assert!((m.sigma_z(s) - e.sigma_z(s)).abs() < 1e-10);
            }
            Err(sointerf::Error::PerturbationBreakdown { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
