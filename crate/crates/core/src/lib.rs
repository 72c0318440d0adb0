//! Simulation and analysis of a spin-orbit-coupled nanowire quantum dot
//! driven by an electric pulse.
//!
//! The long-time average `Q` of the spin polarisation shows sharp resonances
//! as a function of the pulse amplitude. This crate computes `Q` both by
//! direct integration of the Schrödinger equation ([`dynamics`]) and by
//! perturbation theory in the Zeeman energy ([`spectral`]), locates the
//! resonance comb ([`scan`]) and inverts it into spin-orbit parameters.

pub mod basis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod materials;
pub mod output;
pub mod params;
pub mod presets;
pub mod scan;
pub mod special;
pub mod spectral;
pub mod units;

pub use error::{Error, Result};
