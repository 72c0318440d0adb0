//! Built-in parameter sets of the reproduction runs, as config text.
//!
//! Every preset starts from [`REFERENCE`]; the figure presets only list what
//! differs. Layering and overrides follow [`crate::config`].

/// The reference dot in natural units and the default scan.
pub const REFERENCE: &str = r#"
[material]
alpha = 0.08
phi = 0.3
lande = -0.44

[protocol]
E0 = 0.0
pulse_width = 0.05
switch_time = 0.5
shape = "gaussian"
zeeman = 0.0
field_angle = 0.0
ramp_time = 0.0
anharmonic_lambda = 0.0

[run]
basis_size = 128
auto_basis = true
average_span_pi = 10.0
initial = [1.0, 1.0]
engine = "analytic"
gauge = "length"
integrator = "magnus4"

[scan]
variable = "E0"
start = 0.0
stop = 800.0
count = 801
min_prominence = 0.05
window_points = 41
angles = 24
order = 1
"#;

/// Resonance comb; the verb runs both spans.
const FIG2: &str = r#"
[run]
average_span_pi = 40.0
"#;

/// Initial-state ratios; the verb runs all four.
const FIG3: &str = r#"
[run]
average_span_pi = 10.0
"#;

/// Field-direction dependence of the first resonance.
const FIG4: &str = r#"
[protocol]
zeeman = 0.06
ramp_time = 4.3

[run]
average_span_pi = 10.0
engine = "numeric"
"#;

/// Anharmonic traces; the verb runs each lambda.
const FIG5: &str = r#"
[run]
average_span_pi = 10.0
engine = "numeric"
"#;

/// Averaging spans of the two fig2 traces, in units of pi.
pub const FIG2_SPANS: [f64; 2] = [5.0, 40.0];
/// `(c+, c-)` ratios of fig3.
pub const FIG3_RATIOS: [(f64, f64); 4] = [(2.0, 1.0), (3.0, 1.0), (2.0, 3.0), (3.0, 4.0)];
/// Anharmonicities of fig5.
pub const FIG5_LAMBDAS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// Preset names accepted by [`preset`].
pub const NAMES: [&str; 5] = ["reference", "fig2", "fig3", "fig4", "fig5"];

/// Config layers of a named preset, base first.
pub fn preset(name: &str) -> Option<Vec<&'static str>> {
    let top = match name {
        "reference" => return Some(vec![REFERENCE]),
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig4" => FIG4,
        "fig5" => FIG5,
        _ => return None,
    };
    Some(vec![REFERENCE, top])
}
