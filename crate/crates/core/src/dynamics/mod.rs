//! Direct numerical propagation of the driven dot.

mod engine;
mod fields;
mod hamiltonian;
mod propagate;
mod state;

pub use engine::{NumericEngine, NumericOptions, NumericRun, TailSpectrum};
pub use fields::{field_profiles, FieldSamples, PULSE_HALF_WINDOW, RAMP_RATE};
pub use hamiltonian::{assemble_hamiltonian, Drive, Gauge, HamiltonianModel};
pub use propagate::{evolve, long_time_average, max_time_step, stiffness_step, trapezoid, EvolveOptions, Integrator, Trajectory};
pub use state::{
    prepare_initial_state, spin_polarization, StateVector, BOUNDARY_LIMIT, BOUNDARY_WINDOW, INITIAL_BOUNDARY_LIMIT,
};
