use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sointerf::config::Scenario;
use sointerf::dynamics::{field_profiles, NumericEngine};
use sointerf::error::{Error, Result};
use sointerf::materials::{self, TableConditions};
use sointerf::output::{peaks_dataset, trace_dataset, Dataset, RunDir};
use sointerf::params::NaturalParams;
use sointerf::presets::{self, FIG2_SPANS, FIG3_RATIOS, FIG5_LAMBDAS};
use sointerf::scan::{
    convergence_check, detect_peaks, estimate_parameters, linspace, sweep, sweep_e0, sweep_theta, Engine,
    FieldKnowledge, KnownQuantities, Peak, PeakSet, QTrace, ScanSettings, SweptVariable, ThetaCurve,
};
use sointerf::spectral::peak_spacing;
use sointerf::units::FIELD_AXIS_UNIT;

use crate::Common;

const U: f64 = FIELD_AXIS_UNIT;

fn scenario(c: &Common, default_preset: &str) -> Result<Scenario> {
    let name = c.preset.as_deref().unwrap_or(default_preset);
    let layers = presets::preset(name).ok_or_else(|| {
        Error::config("--preset", format!("unknown preset `{name}`; known: {:?}", presets::NAMES))
    })?;
    let origin = format!("preset {name}");
    let mut texts: Vec<(String, String)> = layers.iter().map(|t| (origin.clone(), t.to_string())).collect();
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        texts.push((path.display().to_string(), text));
    }
    let mut overrides = c.overrides.clone();
    if let Some((start, stop, count)) = c.grid {
        overrides.push(format!("scan.start={start:?}"));
        overrides.push(format!("scan.stop={stop:?}"));
        overrides.push(format!("scan.count={count}"));
    }
    let refs: Vec<(&str, &str)> = texts.iter().map(|(o, t)| (o.as_str(), t.as_str())).collect();
    let s = Scenario::from_layers(&refs, &overrides)?;
    for w in &s.run.warnings {
        log::warn!("{w}");
    }
    Ok(s)
}

fn out_dir(c: &Common, verb: &str) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from("out").join(verb))
}

fn settings(s: &Scenario, span: f64, engine: Engine) -> ScanSettings {
    let [a, b] = s.run.run.initial;
    ScanSettings::new(span, engine).with_initial(a, b)
}

fn resolved(s: &Scenario, engine: Engine, natural: &NaturalParams) -> serde_json::Value {
    json!({
        "layers": s.snapshot(),
        "natural": natural,
        "engine": engine,
        "scan": s.scan,
    })
}

/// Peaks above the configured fraction of `max |Q|`.
fn peaks_of(trace: &QTrace, s: &Scenario) -> Result<PeakSet> {
    let ymax = trace.q.iter().filter(|v| v.is_finite()).fold(0.0, |m: f64, v| m.max(v.abs()));
    detect_peaks(trace, Some(s.scan.min_prominence * ymax))
}

fn log_peaks(label: &str, peaks: &PeakSet, unit: f64) {
    for p in &peaks.peaks {
        log::info!("{label}: order {} at {:.2} (height {:.3})", p.order, p.position / unit, p.height);
    }
}

fn note_gaps(dir: &mut RunDir, label: &str, trace: &QTrace) {
    for g in &trace.gaps {
        dir.notes.push(format!("{label}: point {} ({}) failed: {}", g.index, g.value, g.message));
    }
}

/// Basis and step sensitivity at the detected lines (or mid-grid).
fn check(dir: &mut RunDir, label: &str, trace: &QTrace, peaks: Option<&PeakSet>) -> Result<()> {
    let mut idx: Vec<usize> = peaks
        .map(|p| p.peaks.iter().take(3).map(|p| p.index).collect())
        .unwrap_or_default();
    if idx.is_empty() {
        idx.push(trace.grid.len() / 2);
    }
    let report = convergence_check(trace, &idx)?;
    log::info!(
        "{label}: basis delta {:.2e}, step delta {}",
        report.basis_delta,
        report.step_delta.map_or("n/a".into(), |d| format!("{d:.2e}"))
    );
    dir.converged(label, report);
    Ok(())
}

/// Sweep, write `<name>.csv` and `<name>_peaks.csv`, check convergence.
fn comb(dir: &mut RunDir, name: &str, s: &Scenario, p: &NaturalParams, st: &ScanSettings) -> Result<PeakSet> {
    let trace = sweep_e0(&s.scan.grid(), p, st)?;
    note_gaps(dir, name, &trace);
    dir.csv(&format!("{name}.csv"), &trace_dataset(&trace))?;
    let peaks = peaks_of(&trace, s)?;
    log_peaks(name, &peaks, U);
    dir.csv(&format!("{name}_peaks.csv"), &peaks_dataset(&peaks, SweptVariable::E0))?;
    check(dir, name, &trace, Some(&peaks))?;
    Ok(peaks)
}

pub fn fig2(c: &Common) -> Result<PathBuf> {
    let s = scenario(c, "fig2")?;
    let engine = s.engine(c.numeric);
    let mut dir = RunDir::create(out_dir(c, "fig2"))?;
    for span in FIG2_SPANS {
        let name = format!("fig2_T{span}pi");
        comb(&mut dir, &name, &s, &s.run.natural, &settings(&s, span * PI, engine))?;
    }
    dir.finish("fig2", resolved(&s, engine, &s.run.natural), c.seed)
}

pub fn fig3(c: &Common) -> Result<PathBuf> {
    let s = scenario(c, "fig3")?;
    let engine = s.engine(c.numeric);
    let mut dir = RunDir::create(out_dir(c, "fig3"))?;
    for (a, b) in FIG3_RATIOS {
        let st = ScanSettings::new(s.run.run.average_span, engine).with_initial(Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let peaks = comb(&mut dir, &format!("fig3_{a}_{b}"), &s, &s.run.natural, &st)?;
        if peaks.peaks.iter().any(|p| p.height <= 0.0) {
            dir.notes.push(format!("ratio {a}/{b}: a line has zero height"));
        }
    }
    dir.finish("fig3", resolved(&s, engine, &s.run.natural), c.seed)
}

fn theta_dataset(curve: &ThetaCurve) -> Dataset {
    let mut d = Dataset::new(&["theta", "E0k_numeric", "E0k_analytic"]);
    for ((t, m), p) in curve.theta.iter().zip(&curve.measured).zip(&curve.predicted) {
        d.push(vec![(*t).into(), (m / U).into(), (p / U).into()]);
    }
    d
}

fn wrapped(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

pub fn fig4(c: &Common) -> Result<PathBuf> {
    let s = scenario(c, "fig4")?;
    let engine = s.engine(c.numeric);
    let p = &s.run.natural;
    if p.zeeman == 0.0 {
        log::warn!("no Zeeman field: the curve is flat");
    }
    let mut dir = RunDir::create(out_dir(c, "fig4"))?;
    let st = settings(&s, s.run.run.average_span, engine);
    let curve = sweep_theta(s.scan.order, &s.scan.thetas(), p, &st, s.scan.window_points)?;
    dir.csv("fig4.csv", &theta_dataset(&curve))?;

    let deviation = curve.max_deviation() / U;
    let argmin = curve.measured.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| curve.theta[i]);
    let argmax = curve.measured.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| curve.theta[i]);
    log::info!("max deviation from the closed form {deviation:.3} u");
    dir.notes.push(format!("max |E0k_numeric - E0k_analytic| = {deviation:.4} u"));
    if let (Some(lo), Some(hi)) = (argmin, argmax) {
        dir.notes.push(format!(
            "minimum at theta = {lo:.4} ({:+.4} from phi), maximum at {hi:.4} ({:+.4} from phi + pi)",
            wrapped(lo - p.phi),
            wrapped(hi - p.phi - PI)
        ));
    }

    // Three points around the first measured line.
    let first = curve.measured[0];
    let w = curve.window_step;
    let mut p0 = p.clone();
    p0.field_angle = curve.theta[0];
    let probe = sweep_e0(&[first - w, first, first + w], &p0, &st)?;
    check(&mut dir, "fig4 theta[0]", &probe, None)?;
    dir.finish("fig4", resolved(&s, engine, p), c.seed)
}

pub fn fig5(c: &Common) -> Result<PathBuf> {
    let s = scenario(c, "fig5")?;
    let engine = s.engine(c.numeric);
    let mut dir = RunDir::create(out_dir(c, "fig5"))?;
    let spacing = peak_spacing(&s.run.natural)?;
    let st = settings(&s, s.run.run.average_span, engine);
    for lambda in FIG5_LAMBDAS {
        let mut p = s.run.natural.clone();
        p.lambda = lambda;
        let name = format!("fig5_lambda{lambda:e}");
        let peaks = comb(&mut dir, &name, &s, &p, &st)?;
        for line in peaks.peaks.iter().filter(|l| l.order >= 1) {
            let shift = line.position / (line.order as f64 * spacing) - 1.0;
            dir.notes.push(format!(
                "lambda {lambda:e}: order {} at {:.2} u, {:+.2}% from the harmonic comb",
                line.order,
                line.position / U,
                100.0 * shift
            ));
        }
    }
    dir.finish("fig5", resolved(&s, engine, &s.run.natural), c.seed)
}

pub fn table1(c: &Common) -> Result<PathBuf> {
    let s = scenario(c, "reference")?;
    let conditions = TableConditions::default();
    let mut d = Dataset::new(&[
        "material",
        "rashba_eVcm",
        "gamma_eVA3",
        "dresselhaus_estimate_eVcm",
        "total_eVcm",
        "phi",
        "spacing_Vcm",
        "spacing_tabulated_alpha_Vcm",
        "reference_spacing_Vcm",
    ]);
    for r in materials::table(&conditions) {
        log::info!("{}: {:.3} V/cm (reference {})", r.material, r.spacing_v_cm, r.reference_spacing_v_cm);
        d.push(vec![
            r.material.as_str().into(),
            r.rashba_ev_cm.into(),
            r.gamma_ev_a3.into(),
            r.dresselhaus_estimate_ev_cm.into(),
            r.total_ev_cm.into(),
            r.phi.into(),
            r.spacing_v_cm.into(),
            r.spacing_tabulated_alpha_v_cm.into(),
            r.reference_spacing_v_cm.into(),
        ]);
    }
    let mut dir = RunDir::create(out_dir(c, "table1"))?;
    dir.csv("table1.csv", &d)?;
    dir.finish(
        "table1",
        json!({ "layers": s.snapshot(), "conditions": conditions }),
        c.seed,
    )
}

pub fn sweep_verb(c: &Common) -> Result<PathBuf> {
    let s = scenario(c, "reference")?;
    let engine = s.engine(c.numeric);
    let mut dir = RunDir::create(out_dir(c, "sweep"))?;
    let trace = sweep(
        s.scan.variable,
        &s.scan.grid(),
        &s.run.natural,
        &settings(&s, s.run.run.average_span, engine),
    )?;
    note_gaps(&mut dir, "sweep", &trace);
    dir.csv("sweep.csv", &trace_dataset(&trace))?;
    let peaks = match peaks_of(&trace, &s) {
        Ok(p) => {
            log_peaks("sweep", &p, s.scan.axis_unit());
            dir.csv("sweep_peaks.csv", &peaks_dataset(&p, s.scan.variable))?;
            Some(p)
        }
        Err(Error::NoPeaks { threshold }) => {
            log::info!("no peaks above {threshold:.3e}");
            dir.notes.push(format!("no peaks above prominence {threshold:.3e}"));
            None
        }
        Err(e) => return Err(e),
    };
    check(&mut dir, "sweep", &trace, peaks.as_ref())?;
    dir.finish("sweep", resolved(&s, engine, &s.run.natural), c.seed)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::config(path.display().to_string(), format!("{other:?}")),
    }
}

/// Columns of a numeric CSV by name.
fn read_columns(path: &Path, wanted: &[&[&str]]) -> Result<Vec<Option<Vec<f64>>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols: Vec<Option<usize>> = wanted
        .iter()
        .map(|names| headers.iter().position(|h| names.contains(&h.trim())))
        .collect();
    let mut out: Vec<Option<Vec<f64>>> = cols.iter().map(|c| c.map(|_| Vec::new())).collect();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (col, values) in cols.iter().zip(out.iter_mut()) {
            if let (Some(i), Some(values)) = (col, values) {
                let field = record.get(*i).unwrap_or("");
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::config(
                        path.display().to_string(),
                        format!("row {}: `{field}` is not a number", line + 2),
                    )
                })?;
                values.push(v);
            }
        }
    }
    Ok(out)
}

fn read_peaks(path: &Path) -> Result<PeakSet> {
    let mut cols = read_columns(path, &[&["order"], &["position"], &["position_u"], &["height"]])?;
    let missing = |what: &str| Error::config(path.display().to_string(), format!("missing column {what}"));
    let orders = cols[0].take().ok_or_else(|| missing("order"))?;
    let positions = match (cols[1].take(), cols[2].take()) {
        (Some(p), _) => p,
        (None, Some(u)) => u.iter().map(|v| v * U).collect(),
        (None, None) => return Err(missing("position or position_u")),
    };
    let heights = cols[3].take().unwrap_or_else(|| vec![1.0; orders.len()]);
    let peaks = orders
        .iter()
        .zip(&positions)
        .zip(&heights)
        .map(|((&k, &x), &h)| Peak {
            position: x,
            height: h,
            prominence: h,
            width: f64::NAN,
            order: k.round() as i64,
            index: 0,
        })
        .collect();
    Ok(PeakSet {
        peaks,
        spacing: None,
        threshold: 0.0,
    })
}

fn read_theta(path: &Path, order: usize) -> Result<ThetaCurve> {
    let mut cols = read_columns(path, &[&["theta"], &["E0k_numeric"]])?;
    let missing = |what: &str| Error::config(path.display().to_string(), format!("missing column {what}"));
    let theta = cols[0].take().ok_or_else(|| missing("theta"))?;
    let measured = cols[1].take().ok_or_else(|| missing("E0k_numeric"))?;
    Ok(ThetaCurve::from_measurements(order, theta, measured.iter().map(|v| v * U).collect()))
}

pub fn estimate(c: &Common, peaks_path: Option<&Path>, theta_path: Option<&Path>) -> Result<PathBuf> {
    let s = scenario(c, "reference")?;
    let mut p = s.run.natural.clone();
    let field = match p.field_tesla {
        Some(b) => Some(FieldKnowledge::Tesla(b)),
        None if !p.scale.is_natural() && p.lande != 0.0 => Some(FieldKnowledge::Lande(p.lande)),
        None => None,
    };
    let known = KnownQuantities {
        scale: p.scale,
        pulse_width: p.pulse_width,
        field,
    };
    let mut dir = RunDir::create(out_dir(c, "estimate"))?;

    if let Some(path) = peaks_path {
        let peaks = read_peaks(path)?;
        let curve = theta_path.map(|t| read_theta(t, s.scan.order)).transpose()?;
        let report = estimate_parameters(&peaks, curve.as_ref(), &known)?;
        log::info!("alpha {:.6}, phi {:?}", report.alpha, report.phi);
        dir.json("estimate.json", &json!({ "report": report }))?;
        return dir.finish(
            "estimate",
            json!({ "layers": s.snapshot(), "peaks": path, "theta": theta_path }),
            c.seed,
        );
    }

    if let Some(seed) = c.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        p.alpha = rng.random_range(0.04..=0.12);
        p.phi = PI - rng.random_range(0.0..2.0 * PI);
    }
    let engine = s.engine(c.numeric);
    let st = settings(&s, s.run.run.average_span, engine);
    let spacing = peak_spacing(&p)?;
    let trace = sweep_e0(&linspace(0.0, 3.5 * spacing, s.scan.count), &p, &st)?;
    note_gaps(&mut dir, "comb", &trace);
    dir.csv("comb.csv", &trace_dataset(&trace))?;
    let peaks = peaks_of(&trace, &s)?;
    dir.csv("comb_peaks.csv", &peaks_dataset(&peaks, SweptVariable::E0))?;
    let curve = if p.zeeman != 0.0 {
        let curve = sweep_theta(s.scan.order, &s.scan.thetas(), &p, &st, s.scan.window_points)?;
        dir.csv("theta.csv", &theta_dataset(&curve))?;
        Some(curve)
    } else {
        dir.notes.push("no Zeeman field: phi cannot be recovered".into());
        None
    };
    let report = estimate_parameters(&peaks, curve.as_ref(), &known)?;
    let phi_error = report.phi.map(|phi| wrapped(phi - p.phi));
    log::info!(
        "alpha {:.6} (true {:.6}), phi {:?} (true {:.6})",
        report.alpha,
        p.alpha,
        report.phi,
        p.phi
    );
    dir.json(
        "estimate.json",
        &json!({
            "truth": { "alpha": p.alpha, "phi": p.phi, "zeeman": p.zeeman },
            "report": report,
            "alpha_relative_error": report.alpha / p.alpha - 1.0,
            "phi_error": phi_error,
        }),
    )?;
    dir.finish("estimate", resolved(&s, engine, &p), c.seed)
}

pub fn trace(c: &Common, t_end: Option<f64>) -> Result<PathBuf> {
    let s = scenario(c, "reference")?;
    let p = &s.run.natural;
    let t_end = t_end.unwrap_or(p.switch_time + s.run.run.average_span);
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::config("--t-end", "must be positive"));
    }
    let run = NumericEngine::new(s.numeric).trajectory(p, s.run.run.initial, t_end)?;
    let fields = field_profiles(p);
    let mut d = Dataset::new(&["t", "sigma_z", "E_field", "B_field"]);
    for (&t, &sz) in run.times.iter().zip(&run.sigma_z) {
        d.push(vec![t.into(), sz.into(), fields.electric(t).into(), fields.zeeman_at(t).into()]);
    }
    let mut dir = RunDir::create(out_dir(c, "trace"))?;
    dir.csv("trace.csv", &d)?;
    dir.notes.push(format!("largest boundary occupation {:.3e}", run.max_boundary));
    dir.finish("trace", resolved(&s, Engine::Numeric(s.numeric), p), c.seed)
}
