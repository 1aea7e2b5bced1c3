//! Simulation of superposed squeezed mechanical states in a two-mode
//! quadratically coupled optomechanical system whose cavity frequencies (or
//! hopping and coupling strengths) are sinusoidally modulated.
//!
//! All rates are measured in units of the bare quadratic coupling `g0`, with
//! `hbar = 1`. The Hilbert space is the truncated product
//! `cavity L ⊗ cavity R ⊗ mechanics`, ordered L-major, then R, then the
//! mechanical Fock index.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod invariants;
pub mod lindblad;
pub mod model;
pub mod ode;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
