//! Simulation and verification for a Lorentz-invariant, multi-time Bohmian
//! model of spinless Klein-Gordon particles.
//!
//! Events are real four-vectors with signature `diag(+, .., +, -)` over
//! `(x^1 .. x^D, ct)`. Wave functions are exact plane-wave mode sums, so every
//! check against the guide equations measures the dynamics, not a PDE solver.

pub mod cli;
pub mod error;
pub mod dynamics;
pub mod fields;
pub mod io;
pub mod nonrel;
pub mod runner;
pub mod scenario;
pub mod spacetime;
pub mod verify;
pub mod stats;
pub mod wavefunction;

pub use error::{Error, Result};
