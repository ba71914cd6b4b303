//! Certification of entangled measurements in entanglement-swapping networks.
//!
//! The library simulates small star-shaped networks in which a central node
//! performs a joint measurement on subsystems received from independent
//! sources, and certifies that measurement from the conditional Bell
//! statistics observed by the outer nodes:
//!
//! * exact self-tests of the Bell-state measurement, its tilted variant and
//!   the GHZ measurement (all conditional Bell values maximal), and
//! * a robust lower bound on the simulation quality of the Bell-state
//!   measurement as a function of the average conditional CHSH value,
//!   together with the separability threshold it must beat.
//!
//! Everything is dense, double-precision linear algebra on tensor-product
//! spaces of total dimension at most 64; all expectation values are exact
//! density-matrix traces, never sampled.
//!
//! With the default `parallel` feature the embarrassingly parallel sweeps
//! (bound curves, random-state certificates) run on a rayon pool; disabling
//! the feature falls back to equivalent sequential loops.

pub mod certify;
pub mod channels;
mod error;
pub(crate) mod exec;
pub mod network;
pub mod qlinalg;
pub mod qobjects;
pub mod random;

pub use error::{Error, Result};
