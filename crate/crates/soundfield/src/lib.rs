//! Frequency-domain simulation of microphone arrays and estimation of
//! acoustic intensity, energy density, arrival direction, and diffuseness.
//!
//! Three array geometries are modeled end to end: a four-capsule tetrahedral
//! (A-format) microphone, a 64-channel rigid-sphere array on a Fibonacci
//! lattice, and a 24-channel tight-frame array of directional microphone
//! pairs. Sound fields are synthesized as plane-wave superpositions (free
//! field or rigid-sphere-scattered), and four diffuseness indices are
//! computed per octave band: the intensity/energy ratio, its directional
//! weighted average, and two eigenvalue-based measures (participation ratio
//! and eigenvalue dispersion) of the velocity covariance.
//!
//! The `benchmarks` module reproduces three reference scenarios (single
//! plane wave, beam/diffuse mixture, two-wave interference); `irtools`
//! applies the same estimators to measured multichannel impulse responses.

pub mod arrays;
mod bessel;
pub mod benchmarks;
pub mod cli;
pub mod directivity;
pub mod error;
pub mod estimators;
pub mod irtools;
pub mod report;
pub mod rng;
pub mod sh;
pub mod spatial;
pub mod wavefield;

pub use error::{Error, Result};
