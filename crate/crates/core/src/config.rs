//! Config files: TOML with `material`, `protocol`, `run` and `scan` sections.
//!
//! A quantity may carry a unit suffix (`E0_u`, `pulse_width_ps`,
//! `trap_energy_eV`); a bare name or `_natural` means oscillator units
//! (hbar = m = omega = e = 1). SI suffixes need `material.units = "si"`.
//!
//! | quantity | suffixes |
//! |---|---|
//! | mass | `_me` |
//! | energy | `_natural`, `_eV` |
//! | time | `_natural`, `_ps`, `_pi` (multiples of pi/omega) |
//! | length | `_natural`, `_nm` |
//! | spin-orbit strength | `_natural`, `_eVcm` (hbar alpha in eV·cm) |
//! | electric field | `_natural`, `_u` (comb-axis unit), `_Vcm` |
//! | magnetic field | `_tesla` only |
//!
//! Layers (preset, file, `--override`) replace whole quantities, so an
//! override `protocol.E0=0` removes an earlier `E0_u`. `field_tesla` and
//! `zeeman` replace each other, as do `rashba`/`dresselhaus` and
//! `alpha`/`phi`. Unknown sections or keys are errors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use toml::{Table, Value};

use crate::dynamics::{Gauge, Integrator, NumericOptions};
use crate::error::{Error, Result};
use crate::params::{
    validate_config, FieldProtocol, MaterialParams, PulseShape, RunConfig, UnitSystem, ValidatedRun, ZeemanSpec,
};
use crate::scan::{linspace, Engine, SweptVariable, DEFAULT_PROMINENCE_FRACTION};
use crate::spectral::SpectralOptions;
use crate::units::{soc_velocity_from_ev_cm, UnitScale, ELECTRON_MASS, EV, FIELD_AXIS_UNIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Mass,
    Energy,
    Time,
    Length,
    Velocity,
    Field,
    Tesla,
    Number,
    Text,
    Count,
    Flag,
    Spinor,
}

impl Kind {
    fn suffixes(self) -> &'static [&'static str] {
        match self {
            Kind::Mass => &["natural", "me"],
            Kind::Energy => &["natural", "eV"],
            Kind::Time => &["natural", "ps", "pi"],
            Kind::Length => &["natural", "nm"],
            Kind::Velocity => &["natural", "eVcm"],
            Kind::Field => &["natural", "u", "Vcm"],
            Kind::Tesla => &["tesla"],
            _ => &[],
        }
    }

    fn bare_allowed(self) -> bool {
        self != Kind::Tesla
    }
}

const SECTIONS: [&str; 4] = ["material", "protocol", "run", "scan"];

const SCHEMA: &[(&str, &str, Kind)] = &[
    ("material", "name", Kind::Text),
    ("material", "units", Kind::Text),
    ("material", "effective_mass", Kind::Mass),
    ("material", "trap_energy", Kind::Energy),
    ("material", "alpha", Kind::Velocity),
    ("material", "phi", Kind::Number),
    ("material", "rashba", Kind::Velocity),
    ("material", "dresselhaus", Kind::Velocity),
    ("material", "lande", Kind::Number),
    ("material", "well_width", Kind::Length),
    ("protocol", "E0", Kind::Field),
    ("protocol", "pulse_width", Kind::Time),
    ("protocol", "switch_time", Kind::Time),
    ("protocol", "shape", Kind::Text),
    ("protocol", "zeeman", Kind::Energy),
    ("protocol", "field", Kind::Tesla),
    ("protocol", "field_angle", Kind::Number),
    ("protocol", "ramp_time", Kind::Time),
    ("protocol", "anharmonic_lambda", Kind::Number),
    ("run", "basis_size", Kind::Count),
    ("run", "auto_basis", Kind::Flag),
    ("run", "time_step", Kind::Time),
    ("run", "ramp_time_step", Kind::Time),
    ("run", "average_span", Kind::Time),
    ("run", "sample_interval", Kind::Time),
    ("run", "initial", Kind::Spinor),
    ("run", "engine", Kind::Text),
    ("run", "degeneracy_threshold", Kind::Number),
    ("run", "gauge", Kind::Text),
    ("run", "integrator", Kind::Text),
    ("scan", "variable", Kind::Text),
    ("scan", "start", Kind::Number),
    ("scan", "stop", Kind::Number),
    ("scan", "count", Kind::Count),
    ("scan", "min_prominence", Kind::Number),
    ("scan", "window_points", Kind::Count),
    ("scan", "angles", Kind::Count),
    ("scan", "order", Kind::Count),
];

/// `(base, suffix, kind)` of a config key.
fn lookup(section: &str, key: &str) -> Result<(&'static str, &'static str, Kind)> {
    let path = format!("{section}.{key}");
    if !SECTIONS.contains(&section) {
        return Err(Error::config(section, format!("unknown section; expected one of {SECTIONS:?}")));
    }
    let entries = SCHEMA.iter().filter(|e| e.0 == section);
    for &(_, base, kind) in entries.clone() {
        if key == base && kind.bare_allowed() {
            return Ok((base, "", kind));
        }
    }
    for &(_, base, kind) in entries {
        if let Some(suffix) = key.strip_prefix(base).and_then(|r| r.strip_prefix('_')) {
            if let Some(s) = kind.suffixes().iter().find(|s| **s == suffix) {
                return Ok((base, s, kind));
            }
        }
    }
    Err(Error::config(path, "unknown key"))
}

/// Quantities a layer setting `base` takes away from lower layers, besides
/// `base` itself.
fn displaces(section: &str, base: &str) -> &'static [&'static str] {
    match (section, base) {
        ("material", "alpha" | "phi") => &["rashba", "dresselhaus"],
        ("material", "rashba" | "dresselhaus") => &["alpha", "phi"],
        ("protocol", "zeeman") => &["field"],
        ("protocol", "field") => &["zeeman"],
        _ => &[],
    }
}

/// Parse one config layer.
pub fn parse_layer(text: &str, origin: &str) -> Result<Table> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(origin, e.message().to_string()))?;
    for (section, body) in &table {
        let body = body
            .as_table()
            .ok_or_else(|| Error::config(section.as_str(), "expected a section"))?;
        let mut seen: Vec<(&str, &str)> = Vec::new();
        for key in body.keys() {
            let (base, ..) = lookup(section, key)?;
            if let Some((_, other)) = seen.iter().find(|s| s.0 == base) {
                return Err(Error::config(
                    format!("{section}.{key}"),
                    format!("given twice (also as `{section}.{other}`)"),
                ));
            }
            seen.push((base, key));
        }
    }
    Ok(table)
}

/// Put `top` over `base`, quantity by quantity.
pub fn overlay(base: &mut Table, top: &Table) -> Result<()> {
    for (section, body) in top {
        let body = body
            .as_table()
            .ok_or_else(|| Error::config(section.as_str(), "expected a section"))?;
        let target = base
            .entry(section.clone())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(section.as_str(), "expected a section"))?;
        for (key, value) in body {
            let (b, _, _) = lookup(section, key)?;
            let gone = displaces(section, b);
            target.retain(|k, _| {
                lookup(section, k)
                    .map(|e| e.0 != b && !gone.contains(&e.0))
                    .unwrap_or(true)
            });
            target.insert(key.clone(), value.clone());
        }
    }
    Ok(())
}

/// Apply `section.key=value` on top of `table`.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like section.key=value"))?;
    let (section, name) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::config(key, "override key must be section.key"))?;
    lookup(section, name)?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let mut body = Table::new();
    body.insert(name.to_string(), value);
    let mut top = Table::new();
    top.insert(section.to_string(), Value::Table(body));
    overlay(table, &top)
}

/// Merge layers (base first) and overrides.
pub fn merge(layers: &[(&str, &str)], overrides: &[String]) -> Result<Table> {
    let mut table = Table::new();
    for (origin, text) in layers {
        overlay(&mut table, &parse_layer(text, origin)?)?;
    }
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Analytic,
    Numeric,
}

/// What to sweep and how to read the result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPlan {
    pub variable: SweptVariable,
    /// Grid ends; `E0` in comb-axis units, `theta` in radians.
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Fraction of `max |Q|`.
    pub min_prominence: f64,
    pub window_points: usize,
    pub angles: usize,
    pub order: usize,
}

impl ScanPlan {
    /// Grid in natural units.
    pub fn grid(&self) -> Vec<f64> {
        let unit = self.axis_unit();
        linspace(self.start * unit, self.stop * unit, self.count)
    }

    /// Natural value of one grid unit.
    pub fn axis_unit(&self) -> f64 {
        match self.variable {
            SweptVariable::E0 => FIELD_AXIS_UNIT,
            _ => 1.0,
        }
    }

    /// Evenly spaced field angles over `[0, 2 pi)`.
    pub fn thetas(&self) -> Vec<f64> {
        (0..self.angles).map(|i| 2.0 * PI * i as f64 / self.angles as f64).collect()
    }
}

/// A resolved config.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// The merged layers, as given.
    pub table: Table,
    pub run: ValidatedRun,
    pub engine_kind: EngineKind,
    pub spectral: SpectralOptions,
    pub numeric: NumericOptions,
    pub scan: ScanPlan,
}

impl Scenario {
    pub fn from_layers(layers: &[(&str, &str)], overrides: &[String]) -> Result<Self> {
        resolve(merge(layers, overrides)?)
    }

    /// The configured engine, or the numeric one when `force_numeric`.
    pub fn engine(&self, force_numeric: bool) -> Engine {
        if force_numeric || self.engine_kind == EngineKind::Numeric {
            Engine::Numeric(self.numeric)
        } else {
            Engine::Analytic(self.spectral)
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(&self.table).unwrap_or(serde_json::Value::Null)
    }
}

struct Reader<'a> {
    table: &'a Table,
    scale: UnitScale,
    si: bool,
}

impl<'a> Reader<'a> {
    /// The single entry for `base`, with its key and suffix.
    fn entry(&self, section: &str, base: &str) -> Result<Option<(String, &'static str, Kind, &'a Value)>> {
        let Some(body) = self.table.get(section).and_then(Value::as_table) else {
            return Ok(None);
        };
        let mut found: Option<(String, &'static str, Kind, &'a Value)> = None;
        for (key, value) in body {
            let (b, suffix, kind) = lookup(section, key)?;
            if b == base {
                if let Some((other, ..)) = &found {
                    return Err(Error::config(
                        format!("{section}.{key}"),
                        format!("given twice (also as `{section}.{other}`)"),
                    ));
                }
                found = Some((key.clone(), suffix, kind, value));
            }
        }
        Ok(found)
    }

    fn number(&self, section: &str, base: &str) -> Result<Option<f64>> {
        let Some((key, suffix, kind, value)) = self.entry(section, base)? else {
            return Ok(None);
        };
        let path = format!("{section}.{key}");
        let v = match value {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            _ => return Err(Error::config(path, "expected a number")),
        };
        if !v.is_finite() {
            return Err(Error::config(path, "must be finite"));
        }
        let si_only = |factor: f64| {
            if self.si {
                Ok(v * factor)
            } else {
                Err(Error::config(&path, "SI units need material.units = \"si\""))
            }
        };
        let s = self.scale;
        match (kind, suffix) {
            (Kind::Number, _) => Ok(Some(v)),
            (Kind::Time, "pi") => Ok(Some(v * PI * s.time())),
            (Kind::Field, "u") => Ok(Some(v * s.field_axis_unit())),
            (Kind::Mass, "me") => si_only(ELECTRON_MASS).map(Some),
            (Kind::Energy, "eV") => si_only(EV).map(Some),
            (Kind::Time, "ps") => si_only(1e-12).map(Some),
            (Kind::Length, "nm") => si_only(1e-9).map(Some),
            (Kind::Field, "Vcm") => si_only(100.0).map(Some),
            (Kind::Velocity, "eVcm") => {
                if self.si {
                    Ok(Some(soc_velocity_from_ev_cm(v)))
                } else {
                    Err(Error::config(path, "SI units need material.units = \"si\""))
                }
            }
            (Kind::Tesla, _) => Ok(Some(v)),
            (Kind::Mass, _) => Ok(Some(v * s.mass)),
            (Kind::Energy, _) => Ok(Some(v * s.energy())),
            (Kind::Time, _) => Ok(Some(v * s.time())),
            (Kind::Length, _) => Ok(Some(v * s.length())),
            (Kind::Velocity, _) => Ok(Some(v * s.velocity())),
            (Kind::Field, _) => Ok(Some(v * s.electric_field())),
            _ => Err(Error::config(path, "not a number")),
        }
    }

    fn text(&self, section: &str, base: &str) -> Result<Option<String>> {
        match self.entry(section, base)? {
            None => Ok(None),
            Some((_, _, _, Value::String(s))) => Ok(Some(s.clone())),
            Some((key, ..)) => Err(Error::config(format!("{section}.{key}"), "expected a string")),
        }
    }

    fn count(&self, section: &str, base: &str) -> Result<Option<usize>> {
        match self.entry(section, base)? {
            None => Ok(None),
            Some((_, _, _, Value::Integer(i))) if *i >= 0 => Ok(Some(*i as usize)),
            Some((key, ..)) => Err(Error::config(format!("{section}.{key}"), "expected a non-negative integer")),
        }
    }

    fn flag(&self, section: &str, base: &str) -> Result<Option<bool>> {
        match self.entry(section, base)? {
            None => Ok(None),
            Some((_, _, _, Value::Boolean(b))) => Ok(Some(*b)),
            Some((key, ..)) => Err(Error::config(format!("{section}.{key}"), "expected true or false")),
        }
    }

    fn spinor(&self, section: &str, base: &str) -> Result<Option<[Complex64; 2]>> {
        let Some((key, _, _, value)) = self.entry(section, base)? else {
            return Ok(None);
        };
        let path = format!("{section}.{key}");
        let bad = || Error::config(&path, "expected [c_plus, c_minus] with real numbers or [re, im] pairs");
        let real = |v: &Value| match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        };
        let component = |v: &Value| match v {
            Value::Array(p) if p.len() == 2 => Some(Complex64::new(real(&p[0])?, real(&p[1])?)),
            other => real(other).map(|r| Complex64::new(r, 0.0)),
        };
        match value {
            Value::Array(a) if a.len() == 2 => Ok(Some([
                component(&a[0]).ok_or_else(bad)?,
                component(&a[1]).ok_or_else(bad)?,
            ])),
            _ => Err(bad()),
        }
    }
}

fn required<T>(v: Option<T>, path: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(path, "missing"))
}

fn choose<T: Copy>(path: &str, value: Option<String>, default: T, options: &[(&str, T)]) -> Result<T> {
    let Some(v) = value else {
        return Ok(default);
    };
    options
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(&v))
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            Error::config(path, format!("`{v}` is not one of {names:?}"))
        })
}

/// Turn a merged table into a validated scenario.
pub fn resolve(table: Table) -> Result<Scenario> {
    let probe = Reader {
        table: &table,
        scale: UnitScale::natural(),
        si: true,
    };
    let units = choose(
        "material.units",
        probe.text("material", "units")?,
        None,
        &[("natural", Some(UnitSystem::Natural)), ("si", Some(UnitSystem::Si))],
    )?;
    let mass_entry = probe.entry("material", "effective_mass")?;
    let trap_entry = probe.entry("material", "trap_energy")?;
    let units = units.unwrap_or(if mass_entry.is_some() || trap_entry.is_some() {
        UnitSystem::Si
    } else {
        UnitSystem::Natural
    });
    let si = units == UnitSystem::Si;
    let (mass, omega) = if si {
        for (entry, want, base) in [(&mass_entry, "me", "effective_mass"), (&trap_entry, "eV", "trap_energy")] {
            match entry {
                Some((_, s, ..)) if *s == want => {}
                Some((key, ..)) => {
                    return Err(Error::config(format!("material.{key}"), format!("an SI dot needs `{base}_{want}`")))
                }
                None => return Err(Error::config(format!("material.{base}_{want}"), "missing")),
            }
        }
        let mass = required(probe.number("material", "effective_mass")?, "material.effective_mass_me")?;
        let energy = required(probe.number("material", "trap_energy")?, "material.trap_energy_eV")?;
        (mass, energy / crate::units::HBAR)
    } else {
        for (base, entry) in [("effective_mass", &mass_entry), ("trap_energy", &trap_entry)] {
            if let Some((key, suffix, _, value)) = entry {
                let one = matches!(value, Value::Float(f) if *f == 1.0) || matches!(value, Value::Integer(1));
                if !(suffix.is_empty() || *suffix == "natural") || !one {
                    return Err(Error::config(
                        format!("material.{key}"),
                        format!("a natural-unit dot has {base} 1 by definition"),
                    ));
                }
            }
        }
        (1.0, 1.0)
    };
    let scale = if si { UnitScale::si(mass, omega) } else { UnitScale::natural() };
    let r = Reader {
        table: &table,
        scale,
        si,
    };

    let (rashba, dresselhaus) = match (
        r.number("material", "alpha")?,
        r.number("material", "phi")?,
        r.number("material", "rashba")?,
        r.number("material", "dresselhaus")?,
    ) {
        (Some(a), phi, None, None) => {
            let phi = phi.unwrap_or(0.0);
            (a * phi.sin(), a * phi.cos())
        }
        (None, None, ar, ad) if ar.is_some() || ad.is_some() => (ar.unwrap_or(0.0), ad.unwrap_or(0.0)),
        (None, None, None, None) => return Err(Error::config("material.alpha", "spin-orbit strength missing")),
        _ => {
            return Err(Error::config(
                "material",
                "give either alpha and phi or rashba and dresselhaus, not both",
            ))
        }
    };
    let lande = r.number("material", "lande")?;
    let material = MaterialParams {
        units,
        effective_mass: mass,
        trap_freq: omega,
        rashba,
        dresselhaus,
        lande: lande.unwrap_or(0.0),
        well_width: r.number("material", "well_width")?,
    };

    let pulse_width = required(r.number("protocol", "pulse_width")?, "protocol.pulse_width")?;
    let zeeman = match (r.number("protocol", "zeeman")?, r.number("protocol", "field")?) {
        (Some(_), Some(_)) => {
            return Err(Error::config("protocol", "give either zeeman or field_tesla, not both"));
        }
        (Some(e), None) => ZeemanSpec::Splitting(e),
        (None, Some(b)) => {
            if lande.is_none() {
                return Err(Error::config("material.lande", "needed to turn field_tesla into a Zeeman energy"));
            }
            ZeemanSpec::Tesla(b)
        }
        (None, None) => ZeemanSpec::Splitting(0.0),
    };
    let protocol = FieldProtocol {
        peak_amplitude: r.number("protocol", "E0")?.unwrap_or(0.0),
        pulse_width,
        switch_time: r.number("protocol", "switch_time")?,
        shape: choose(
            "protocol.shape",
            r.text("protocol", "shape")?,
            PulseShape::Gaussian,
            &[("gaussian", PulseShape::Gaussian), ("delta", PulseShape::Delta)],
        )?,
        zeeman,
        field_angle: r.number("protocol", "field_angle")?.unwrap_or(0.0),
        ramp_time: r.number("protocol", "ramp_time")?.unwrap_or(0.0),
        anharmonic_lambda: r.number("protocol", "anharmonic_lambda")?.unwrap_or(0.0),
    };

    let basis_size = r.count("run", "basis_size")?.unwrap_or(128);
    let time_step = r.number("run", "time_step")?;
    let config = RunConfig {
        material,
        protocol,
        basis_size,
        time_step: time_step.unwrap_or(pulse_width / 20.0),
        average_span: required(r.number("run", "average_span")?, "run.average_span")?,
        initial: r
            .spinor("run", "initial")?
            .unwrap_or([Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]),
    };
    let run = validate_config(config)?;
    let to_natural = |v: f64| v / scale.time();

    let engine_kind = choose(
        "run.engine",
        r.text("run", "engine")?,
        EngineKind::Analytic,
        &[("analytic", EngineKind::Analytic), ("numeric", EngineKind::Numeric)],
    )?;
    // Without a Zeeman field the window choice is immaterial; with one, the
    // default window produces jumps in Q where it opens.
    let threshold = match r.number("run", "degeneracy_threshold")? {
        Some(t) if !(t > 0.0 && t <= 0.5) => {
            return Err(Error::config("run.degeneracy_threshold", "must lie in (0, 0.5]"));
        }
        Some(t) => t,
        None if run.natural.zeeman != 0.0 => SpectralOptions::paired().threshold,
        None => SpectralOptions::default().threshold,
    };
    let spectral = SpectralOptions {
        threshold,
        ..SpectralOptions::default()
    };
    let ramp_dt = r.number("run", "ramp_time_step")?.map(to_natural);
    for (path, v) in [("run.ramp_time_step", ramp_dt)] {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(Error::config(path, "must be positive"));
            }
        }
    }
    let defaults = NumericOptions::default();
    let sample_interval = r
        .number("run", "sample_interval")?
        .map(to_natural)
        .unwrap_or(defaults.sample_interval);
    if !(sample_interval > 0.0) {
        return Err(Error::config("run.sample_interval", "must be positive"));
    }
    let numeric = NumericOptions {
        basis_size,
        auto_basis: r.flag("run", "auto_basis")?.unwrap_or(true),
        dt: time_step.map(to_natural),
        ramp_dt,
        gauge: choose(
            "run.gauge",
            r.text("run", "gauge")?,
            Gauge::Length,
            &[("length", Gauge::Length), ("velocity", Gauge::Velocity)],
        )?,
        integrator: choose(
            "run.integrator",
            r.text("run", "integrator")?,
            Integrator::Magnus4,
            &[("magnus4", Integrator::Magnus4), ("midpoint", Integrator::Midpoint)],
        )?,
        sample_interval,
        closed_form_tail: defaults.closed_form_tail,
    };

    let variable = choose(
        "scan.variable",
        r.text("scan", "variable")?,
        SweptVariable::E0,
        &[
            ("E0", SweptVariable::E0),
            ("theta", SweptVariable::Theta),
            ("lambda", SweptVariable::Lambda),
        ],
    )?;
    let scan = ScanPlan {
        variable,
        start: r.number("scan", "start")?.unwrap_or(0.0),
        stop: r.number("scan", "stop")?.unwrap_or(800.0),
        count: r.count("scan", "count")?.unwrap_or(801),
        min_prominence: r
            .number("scan", "min_prominence")?
            .unwrap_or(DEFAULT_PROMINENCE_FRACTION),
        window_points: r.count("scan", "window_points")?.unwrap_or(41),
        angles: r.count("scan", "angles")?.unwrap_or(24),
        order: r.count("scan", "order")?.unwrap_or(1),
    };
    if scan.count == 0 {
        return Err(Error::config("scan.count", "must be at least 1"));
    }
    if !(scan.stop >= scan.start) {
        return Err(Error::config("scan.stop", "must not be below scan.start"));
    }
    if !(scan.min_prominence >= 0.0 && scan.min_prominence <= 1.0) {
        return Err(Error::config("scan.min_prominence", "a fraction of max |Q| in [0, 1]"));
    }
    if scan.order == 0 {
        return Err(Error::config("scan.order", "resonance orders start at 1"));
    }

    Ok(Scenario {
        table,
        run,
        engine_kind,
        spectral,
        numeric,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::REFERENCE;

    fn scenario(extra: &str, overrides: &[&str]) -> Result<Scenario> {
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        Scenario::from_layers(&[("reference", REFERENCE), ("extra", extra)], &overrides)
    }

    fn config_path(e: Error) -> String {
        match e {
            Error::Config { path, .. } => path,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn reference_resolves_to_natural_defaults() {
        let s = scenario("", &[]).unwrap();
        let n = &s.run.natural;
        assert!((n.alpha - 0.08).abs() < 1e-15 && (n.phi - 0.3).abs() < 1e-15);
        assert!((s.run.run.average_span - 10.0 * PI).abs() < 1e-12);
        assert_eq!(s.engine_kind, EngineKind::Analytic);
        assert_eq!(s.spectral.threshold, 0.1);
        assert_eq!(s.scan.grid().len(), 801);
    }

    #[test]
    fn override_replaces_every_spelling() {
        let s = scenario("[protocol]\nE0_u = 250.0\n", &["protocol.E0=0"]).unwrap();
        assert_eq!(s.run.natural.peak_amplitude, 0.0);
        let s = scenario("", &["protocol.E0_u=250"]).unwrap();
        assert!((s.run.natural.peak_amplitude - 250.0 * FIELD_AXIS_UNIT).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert_eq!(config_path(scenario("", &["protocol.E1=3"]).unwrap_err()), "protocol.E1");
        assert_eq!(config_path(scenario("[extras]\na = 1\n", &[]).unwrap_err()), "extras");
        assert_eq!(config_path(scenario("", &["protocol.E0_ps=3"]).unwrap_err()), "protocol.E0_ps");
    }

    #[test]
    fn duplicate_spellings_in_one_layer_are_rejected() {
        let e = scenario("[run]\naverage_span = 3.0\naverage_span_pi = 1.0\n", &[]).unwrap_err();
        assert!(config_path(e).starts_with("run.average_span"));
    }

    #[test]
    fn si_suffix_needs_si_dot() {
        assert_eq!(
            config_path(scenario("[protocol]\npulse_width_ps = 4.0\n", &[]).unwrap_err()),
            "protocol.pulse_width_ps"
        );
    }

    #[test]
    fn si_dot_converts() {
        let text = r#"
[material]
units = "si"
effective_mass_me = 0.067
trap_energy_eV = 9.1e-6
alpha_eVcm = 1.83e-11
phi = 1.0
[protocol]
pulse_width_ps = 4.0
E0_Vcm = 22.6
field_tesla = 0.1
"#;
        let s = scenario(text, &["material.lande=-0.44"]).unwrap();
        let n = &s.run.natural;
        let scale = n.scale;
        assert!((n.pulse_width * scale.time() - 4e-12).abs() < 1e-24);
        assert!((n.peak_amplitude * scale.electric_field() - 2260.0).abs() < 1e-9);
        assert!((n.alpha * scale.velocity() - soc_velocity_from_ev_cm(1.83e-11)).abs() < 1e-9);
        let want = 0.5 * 0.44 * crate::units::BOHR_MAGNETON * 0.1 / scale.energy();
        assert!((n.zeeman.abs() - want).abs() < 1e-12);
        assert_eq!(s.spectral.threshold, 0.5);
    }

    #[test]
    fn values_of_the_wrong_type() {
        assert_eq!(config_path(scenario("", &["run.engine=3"]).unwrap_err()), "run.engine");
        assert_eq!(config_path(scenario("", &["run.engine=quantum"]).unwrap_err()), "run.engine");
        assert_eq!(config_path(scenario("", &["run.basis_size=8"]).unwrap_err()), "run.basis_size");
        assert_eq!(config_path(scenario("", &["run.initial=[0, 0]"]).unwrap_err()), "run.initial");
    }

    #[test]
    fn rashba_pair_replaces_alpha_phi() {
        let s = scenario("", &["material.rashba=0.03", "material.dresselhaus=0.04"]).unwrap();
        assert!((s.run.natural.alpha - 0.05).abs() < 1e-15);
        assert!((s.run.natural.phi - 0.75f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn complex_initial_state() {
        let s = scenario("", &["run.initial=[[0, 2], 0]"]).unwrap();
        assert!((s.run.run.initial[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn malformed_toml_names_the_layer() {
        assert_eq!(config_path(scenario("[run\n", &[]).unwrap_err()), "extra");
    }
}
