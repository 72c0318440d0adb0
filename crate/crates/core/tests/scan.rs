use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sointerf::params::NaturalParams;
use sointerf::scan::{
    detect, detect_peaks, estimate_parameters, linspace, sweep_e0, sweep_theta, Engine, FieldKnowledge,
    KnownQuantities, PeakSet, ScanSettings,
};
use sointerf::spectral::{peak_spacing, SpectralOptions};
use sointerf::units::{UnitScale, FIELD_AXIS_UNIT};

const U: f64 = FIELD_AXIS_UNIT;

fn paired() -> Engine {
    Engine::Analytic(SpectralOptions::paired())
}

/// Comb over three orders. A transverse field splits the lines once the
/// averaging span resolves the block splitting, so combs use `T = 10 pi`.
fn comb(p: &NaturalParams, engine: Engine) -> PeakSet {
    let s = peak_spacing(p).unwrap();
    let trace = sweep_e0(&linspace(0.0, 3.5 * s, 801), p, &ScanSettings::new(10.0 * PI, engine)).unwrap();
    detect_peaks(&trace, None).unwrap()
}

fn natural(sigma: f64) -> KnownQuantities {
    KnownQuantities {
        scale: UnitScale::natural(),
        pulse_width: sigma,
        field: None,
    }
}

fn wrapped(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

#[test]
fn gaussian_comb_positions_within_a_fifth_of_a_step() {
    let x = linspace(0.0, 100.0, 401);
    let centres = [20.13, 45.07, 70.91];
    let q: Vec<f64> = x
        .iter()
        .map(|&v| centres.iter().map(|c| 0.5 * (-(v - c) * (v - c) / 2.0).exp()).sum())
        .collect();
    let set = detect(&x, &q, None).unwrap();
    let step = x[1] - x[0];
    assert_eq!(set.len(), 3);
    for (p, c) in set.peaks.iter().zip(centres) {
        assert!((p.position - c).abs() < 0.2 * step, "{} vs {c}", p.position);
    }
}

#[test]
fn spacing_does_not_depend_on_the_field() {
    let base = NaturalParams::reference();
    let want = peak_spacing(&base).unwrap();
    let mut spacings = Vec::new();
    for zeeman in [0.0, 0.06] {
        for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
            let mut p = base.clone();
            p.zeeman = zeeman;
            p.field_angle = theta;
            let r = estimate_parameters(&comb(&p, paired()), None, &natural(p.pulse_width)).unwrap();
            assert_eq!(r.peaks_used, 3, "zeeman {zeeman} theta {theta}");
            spacings.push(r.spacing);
        }
    }
    for s in &spacings {
        assert!((s / want - 1.0).abs() < 5e-3, "{s} vs {want}");
    }
    let lo = spacings.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spacings.iter().copied().fold(0.0, f64::max);
    assert!(hi / lo - 1.0 < 5e-3, "{spacings:?}");
}

#[test]
fn initial_state_moves_amplitudes_not_positions() {
    let p = NaturalParams::reference();
    let grid = linspace(0.0, 800.0 * U, 801);
    let step = grid[1] - grid[0];
    let mut sets = Vec::new();
    for (a, b) in [(2.0, 1.0), (3.0, 1.0), (2.0, 3.0), (3.0, 4.0)] {
        let n = f64::hypot(a, b);
        let settings =
            ScanSettings::new(10.0 * PI, Engine::analytic()).with_initial(Complex64::new(a / n, 0.0), Complex64::new(b / n, 0.0));
        let trace = sweep_e0(&grid, &p, &settings).unwrap();
        sets.push(detect_peaks(&trace, None).unwrap());
    }
    for set in &sets[1..] {
        assert_eq!(set.len(), sets[0].len());
        for (a, b) in set.peaks.iter().zip(&sets[0].peaks) {
            assert!(a.height > 0.0);
            assert!((a.position - b.position).abs() < 0.2 * step, "{} vs {}", a.position, b.position);
        }
    }
}

#[test]
fn flat_field_direction_without_zeeman() {
    let mut p = NaturalParams::reference();
    p.zeeman = 0.0;
    let thetas: Vec<f64> = (0..6).map(|i| i as f64 * PI / 3.0).collect();
    let curve = sweep_theta(1, &thetas, &p, &ScanSettings::new(10.0 * PI, Engine::analytic()), 41).unwrap();
    let first = curve.measured[0];
    for m in &curve.measured {
        assert!((m - first).abs() < 1e-9, "{:?}", curve.measured);
    }
}

#[test]
fn round_trip_recovers_alpha_and_phi() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let thetas: Vec<f64> = (0..12).map(|i| i as f64 * PI / 6.0).collect();
    for _ in 0..10 {
        let mut p = NaturalParams::reference();
        p.alpha = rng.random_range(0.04..=0.12);
        p.phi = PI - rng.random_range(0.0..2.0 * PI);
        p.zeeman = 0.06;
        p.field_angle = 0.0;
        let peaks = comb(&p, paired());
        let curve = sweep_theta(1, &thetas, &p, &ScanSettings::new(10.0 * PI, paired()), 41).unwrap();
        let r = estimate_parameters(&peaks, Some(&curve), &natural(p.pulse_width)).unwrap();
        let phi = r.phi.unwrap();
        eprintln!(
            "alpha {:.5} -> {:.5}  phi {:+.4} -> {:+.4}",
            p.alpha, r.alpha, p.phi, phi
        );
        assert!((r.alpha / p.alpha - 1.0).abs() < 0.01);
        assert!(wrapped(phi - p.phi).abs() < 0.01 * PI);
    }
}

#[test]
fn gaas_comb_gives_table_coupling() {
    use sointerf::units::{omega_from_energy_ev, ELECTRON_MASS};
    let scale = UnitScale::si(0.067 * ELECTRON_MASS, omega_from_energy_ev(9.1e-6));
    let spacing = 22.6 * 100.0 / scale.electric_field();
    let peaks = PeakSet {
        peaks: (1..=3)
            .map(|k| sointerf::scan::Peak {
                position: k as f64 * spacing,
                height: 0.3,
                prominence: 0.3,
                width: 0.05 * spacing,
                order: k,
                index: 0,
            })
            .collect(),
        spacing: Some(spacing),
        threshold: 0.0,
    };
    let known = KnownQuantities {
        scale,
        pulse_width: 4e-12 / scale.time(),
        field: Some(FieldKnowledge::Tesla(1.0)),
    };
    let r = estimate_parameters(&peaks, None, &known).unwrap();
    let hbar_alpha = r.hbar_alpha_ev_cm.unwrap();
    assert!((hbar_alpha / 1.83e-11 - 1.0).abs() < 0.05, "{hbar_alpha:e}");
}

#[test]
fn lande_factor_from_a_synthetic_cosine() {
    use sointerf::scan::ThetaCurve;
    use sointerf::units::{omega_from_energy_ev, BOHR_MAGNETON, ELECTRON_MASS};
    let scale = UnitScale::si(0.067 * ELECTRON_MASS, omega_from_energy_ev(9.1e-6));
    let (alpha, sigma, zeeman) = (0.08, 0.05, 0.03);
    let s = 1.0 / (2.0 * PI.sqrt() * sigma * alpha);
    let thetas: Vec<f64> = (0..16).map(|i| i as f64 * PI / 8.0).collect();
    let measured = thetas.iter().map(|t| s * (1.0 - zeeman * (t - 0.7).cos())).collect();
    let curve = ThetaCurve::from_measurements(1, thetas, measured);
    let peaks = PeakSet {
        peaks: (1..=2)
            .map(|k| sointerf::scan::Peak {
                position: k as f64 * s,
                height: 0.3,
                prominence: 0.3,
                width: 1.0,
                order: k,
                index: 0,
            })
            .collect(),
        spacing: Some(s),
        threshold: 0.0,
    };
    let b = 0.5;
    let known = KnownQuantities {
        scale,
        pulse_width: sigma,
        field: Some(FieldKnowledge::Tesla(b)),
    };
    let r = estimate_parameters(&peaks, Some(&curve), &known).unwrap();
    let g = 2.0 * zeeman * scale.energy() / (BOHR_MAGNETON * b);
    assert!((r.alpha - alpha).abs() < 1e-12);
    assert!((r.phi.unwrap() - 0.7).abs() < 1e-10);
    assert!((r.zeeman.unwrap() - zeeman).abs() < 1e-12);
    assert!((r.lande.unwrap() / g - 1.0).abs() < 1e-10);
    let known = KnownQuantities {
        field: Some(FieldKnowledge::Lande(g)),
        ..known
    };
    let r = estimate_parameters(&peaks, Some(&curve), &known).unwrap();
    assert!((r.field_tesla.unwrap() - b).abs() < 1e-10);
}

/// Tallest refined maximum of a numeric scan over `[lo, hi]` (in units of u).
fn numeric_line(p: &NaturalParams, lo: f64, hi: f64, points: usize) -> f64 {
    let grid = linspace(lo * U, hi * U, points);
    let trace = sweep_e0(&grid, p, &ScanSettings::new(10.0 * PI, Engine::numeric())).unwrap();
    detect_peaks(&trace, None).unwrap().tallest().unwrap().position / U
}

#[test]
fn strong_anharmonicity_shifts_higher_orders_more() {
    let mut p = NaturalParams::reference();
    let bare = [numeric_line(&p, 230.0, 270.0, 21), numeric_line(&p, 480.0, 520.0, 21)];
    p.lambda = 1e-2;
    let shifted = [numeric_line(&p, 280.0, 380.0, 26), numeric_line(&p, 900.0, 1100.0, 21)];
    let shift: Vec<f64> = shifted.iter().zip(&bare).map(|(s, b)| s - b).collect();
    eprintln!("lambda = 1e-2: lines {shifted:?} vs {bare:?}");
    assert!(shift[0] > 0.0 && shift[1] > shift[0], "{shift:?}");
}
